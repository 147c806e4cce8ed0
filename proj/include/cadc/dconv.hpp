// dconv.hpp — partitioned convolution forward/backward paths over a
// PartitionedKernel: per-segment psums, vanilla accumulation (vConv), dendritic
// accumulation (CADC), psum sparsity statistics and analytic gradients.
//
// Determinism contract: psum[s,p,k] sums its segment rows in ascending order,
// and cross-segment accumulation runs in ascending segment order, so repeated
// invocations are bit-identical regardless of OpenMP thread count. The *_serial
// variants are the reference implementations kept for tests and benchmarks.
#pragma once

#include <vector>

#include "cadc/dendrite.hpp"
#include "cadc/partition.hpp"
#include "cadc/tensor.hpp"

namespace cadc {

struct PsumTensor {
    enum class Stage { Raw, PostF, PostAdc };

    std::size_t s_count = 0;
    std::size_t positions = 0;
    std::size_t channels = 0;
    Stage stage = Stage::Raw;
    std::vector<double> data;  // [s][p][k] row-major

    static PsumTensor zeros(std::size_t s, std::size_t p, std::size_t k, Stage stage);

    double& at(std::size_t s, std::size_t p, std::size_t k) {
        return data[(s * positions + p) * channels + k];
    }
    double at(std::size_t s, std::size_t p, std::size_t k) const {
        return data[(s * positions + p) * channels + k];
    }
};

struct CadcLayer {
    PartitionedKernel partitioned;
    DendriteFn fn;
    // Per-segment soma weight; fixed at 1.0 unless explicitly overridden.
    std::vector<double> soma_weights;

    static CadcLayer make(PartitionedKernel pk, DendriteFn fn);
};

// psum[s,p,k] = sum_i w^s[i,k] * x[p, segment row i]. Input is [P, D].
PsumTensor segment_psums(const CadcLayer& layer, const Tensor& unrolled_input);
PsumTensor segment_psums_serial(const CadcLayer& layer, const Tensor& unrolled_input);

// y[p,k] = sum_s psum[s,p,k], ascending segment order.
Tensor vconv_forward(const CadcLayer& layer, const Tensor& unrolled_input);

struct CadcForwardResult {
    Tensor output;      // [P, c_out]
    PsumTensor post_f;  // f() applied per psum, pre soma weighting
};

// y[p,k] = sum_s w[s] * f(psum[s,p,k]).
CadcForwardResult cadc_forward(const CadcLayer& layer, const Tensor& unrolled_input);
CadcForwardResult cadc_forward_serial(const CadcLayer& layer, const Tensor& unrolled_input);

struct SparsityStats {
    double zero_fraction = 0.0;  // exact zeros / total, no epsilon
    std::vector<double> per_segment;
    std::size_t total = 0;
    std::size_t zeros = 0;
};

SparsityStats sparsity_stats(const PsumTensor& psums);

struct CadcGradients {
    UnrolledKernel grad_weights;  // [D, c_out], padding rows excluded
    Tensor grad_input;            // [P, D]
    std::vector<double> grad_soma;
};

// Chain rule through y = sum_s w[s] * f(psum_s) with standard matmul gradients
// per segment.
CadcGradients cadc_backward(const CadcLayer& layer, const Tensor& unrolled_input,
                            const Tensor& upstream_grad);

}  // namespace cadc
