// model.hpp — float-weight network instances over a NetSpec, plus the compiled
// (partitioned) form the float inference and training paths run on.
#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "cadc/dconv.hpp"
#include "cadc/netspec.hpp"
#include "cadc/partition.hpp"
#include "cadc/tensor_io.hpp"

namespace cadc {

struct Model {
    NetSpec net;
    // One entry per net layer; avgpool slots stay empty. Conv weights are the
    // unrolled [D, c_out] matrix, dense weights [in_features, out_features].
    std::vector<UnrolledKernel> weights;

    static Model init(const NetSpec& net, std::uint64_t seed);
    static Model from_archive(const NetSpec& net, const WeightArchive& archive);
    WeightArchive to_archive() const;
};

// Partitioned layers ready to run. vconv selects plain psum accumulation;
// fn_override replaces every crossbar layer's dendrite fn for the run.
struct CompiledNet {
    NetSpec net;
    std::vector<Shape3> shapes;  // shapes()[i] feeds layers[i]
    std::vector<CadcLayer> layers;
    bool vconv = false;

    static CompiledNet compile(const Model& model, const CrossbarConfig& xbar,
                               std::optional<DendriteKind> fn_override = std::nullopt,
                               bool vconv = false);

    // Float-path forward for one [c, h, w] sample. Returns the final layer
    // output as [c, h, w]; post_f (when non-null) receives each crossbar
    // layer's dendrite-stage psums, indexed by layer position.
    Tensor forward(const Tensor& sample, std::vector<PsumTensor>* post_f = nullptr) const;
};

// argmax over the flattened final output; first index wins ties.
int predict_class(const Tensor& logits);

double evaluate_accuracy(const CompiledNet& net, const struct Dataset& data);

Tensor avgpool_forward(const Tensor& input, std::size_t window);
Tensor avgpool_backward(const Tensor& grad_out, const Shape3& in_shape, std::size_t window);

// Layout moves between the [P, c_out] matmul view and the [c, h, w] grid view.
Tensor positions_to_chw(const Tensor& positions_by_channels, const Shape3& shape);
Tensor chw_to_positions(const Tensor& grid);

}  // namespace cadc
