// netspec.hpp — network descriptions loaded from JSON config files.
//
// A NetSpec is an ordered layer list over a [channels, height, width] input.
// Conv and dense layers carry the crossbar-relevant knobs (dendrite fn, ADC
// resolution, input/weight bit widths); avgpool is a digital op. Dense layers
// flatten their input and are mapped onto crossbars as 1x1 convolutions.
//
// JSON schema (see configs/ for examples):
//   {
//     "name": "...",
//     "input": {"channels": C, "height": H, "width": W},
//     "defaults": {"dendrite_fn": "relu", "adc_bits": 4, "input_bits": 4,
//                  "weight_bits": 2, "activation": "none"},
//     "layers": [
//       {"name": "conv1", "kind": "conv", "c_out": 8, "kernel": [3,3],
//        "stride": 1, "padding": 1, "activation": "relu"},
//       {"name": "pool1", "kind": "avgpool", "window": 2},
//       {"name": "fc", "kind": "dense", "out_features": 10}
//     ]
//   }
// Per-layer keys override defaults; "supralinear_k" tunes the kx^2 fn.
#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "cadc/dendrite.hpp"
#include "cadc/tensor.hpp"

namespace cadc {

enum class LayerKind { Conv, Dense, AvgPool };

struct Shape3 {
    std::size_t c = 0;
    std::size_t h = 0;
    std::size_t w = 0;

    std::size_t numel() const { return c * h * w; }
    bool operator==(const Shape3&) const = default;
};

struct LayerSpec {
    std::string name;
    LayerKind kind = LayerKind::Conv;

    // conv
    std::size_t c_out = 0;
    std::size_t k1 = 0;
    std::size_t k2 = 0;
    std::size_t stride = 1;
    std::size_t padding = 0;

    // dense
    std::size_t out_features = 0;

    // avgpool
    std::size_t window = 2;

    DendriteFn fn{DendriteKind::ReLU, 1.0};
    int adc_bits = 4;
    int input_bits = 4;
    int weight_bits = 2;
    bool relu_after = false;

    bool on_crossbar() const { return kind != LayerKind::AvgPool; }
};

struct NetSpec {
    std::string name;
    Shape3 input;
    std::vector<LayerSpec> layers;

    static NetSpec from_file(const std::string& path);
    static NetSpec from_json_text(const std::string& text);

    // shapes()[0] is the input; shapes()[i+1] follows layers[i]. Throws if any
    // layer fails to compose with its input shape.
    std::vector<Shape3> shapes() const;
    void validate() const;

    // ConvSpec for layer i with c_in resolved from shape propagation. Dense
    // layers map to a 1x1 conv over the flattened input.
    ConvSpec conv_spec(std::size_t layer_index) const;

    // Expected weight tensor shape in an archive: conv [c_in,k1,k2,c_out],
    // dense [in_features, out_features]. Throws for avgpool.
    std::vector<std::size_t> weight_shape(std::size_t layer_index) const;
};

std::string layer_kind_name(LayerKind kind);

}  // namespace cadc
