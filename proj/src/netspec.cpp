#include "cadc/netspec.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "cadc/common.hpp"
#include "json.hpp"

namespace cadc {

namespace {

using nlohmann::json;

LayerKind parse_kind(const std::string& s) {
    if (s == "conv") return LayerKind::Conv;
    if (s == "dense") return LayerKind::Dense;
    if (s == "avgpool") return LayerKind::AvgPool;
    throw std::invalid_argument("unknown layer kind: " + s);
}

struct Knobs {
    std::string fn_name = "relu";
    double supralinear_k = 1.0;
    int adc_bits = 4;
    int input_bits = 4;
    int weight_bits = 2;
    std::string activation = "none";

    void read(const json& j) {
        if (j.contains("dendrite_fn")) fn_name = j.at("dendrite_fn").get<std::string>();
        if (j.contains("supralinear_k")) supralinear_k = j.at("supralinear_k").get<double>();
        if (j.contains("adc_bits")) adc_bits = j.at("adc_bits").get<int>();
        if (j.contains("input_bits")) input_bits = j.at("input_bits").get<int>();
        if (j.contains("weight_bits")) weight_bits = j.at("weight_bits").get<int>();
        if (j.contains("activation")) activation = j.at("activation").get<std::string>();
    }
};

std::size_t get_size(const json& j, const char* key) {
    auto v = j.at(key).get<std::int64_t>();
    if (v < 0) throw std::invalid_argument(detail::str("negative value for ", key));
    return static_cast<std::size_t>(v);
}

}  // namespace

std::string layer_kind_name(LayerKind kind) {
    switch (kind) {
        case LayerKind::Conv:
            return "conv";
        case LayerKind::Dense:
            return "dense";
        case LayerKind::AvgPool:
            return "avgpool";
    }
    return "unknown";
}

NetSpec NetSpec::from_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open netspec: " + path);
    std::ostringstream buf;
    buf << is.rdbuf();
    return from_json_text(buf.str());
}

NetSpec NetSpec::from_json_text(const std::string& text) {
    json j = json::parse(text);
    NetSpec net;
    net.name = j.value("name", "net");
    const json& in = j.at("input");
    net.input = {get_size(in, "channels"), get_size(in, "height"), get_size(in, "width")};

    Knobs defaults;
    if (j.contains("defaults")) defaults.read(j.at("defaults"));

    for (const json& lj : j.at("layers")) {
        LayerSpec layer;
        layer.kind = parse_kind(lj.at("kind").get<std::string>());
        layer.name = lj.value("name", layer_kind_name(layer.kind) +
                                          std::to_string(net.layers.size()));
        Knobs knobs = defaults;
        knobs.read(lj);
        layer.fn = parse_dendrite_fn(knobs.fn_name, knobs.supralinear_k);
        layer.adc_bits = knobs.adc_bits;
        layer.input_bits = knobs.input_bits;
        layer.weight_bits = knobs.weight_bits;
        if (knobs.activation == "relu") {
            layer.relu_after = true;
        } else if (knobs.activation != "none") {
            throw std::invalid_argument("unknown activation: " + knobs.activation);
        }

        switch (layer.kind) {
            case LayerKind::Conv: {
                layer.c_out = get_size(lj, "c_out");
                const json& kernel = lj.at("kernel");
                if (!kernel.is_array() || kernel.size() != 2) {
                    throw std::invalid_argument("conv kernel must be [k1, k2]");
                }
                layer.k1 = kernel[0].get<std::size_t>();
                layer.k2 = kernel[1].get<std::size_t>();
                layer.stride = lj.value("stride", 1);
                layer.padding = lj.value("padding", 0);
                break;
            }
            case LayerKind::Dense:
                layer.out_features = get_size(lj, "out_features");
                break;
            case LayerKind::AvgPool:
                layer.window = lj.value("window", 2);
                break;
        }
        net.layers.push_back(std::move(layer));
    }
    net.validate();
    return net;
}

std::vector<Shape3> NetSpec::shapes() const {
    if (input.c == 0 || input.h == 0 || input.w == 0) {
        throw std::invalid_argument("net input shape must be positive");
    }
    std::vector<Shape3> out;
    out.push_back(input);
    Shape3 cur = input;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const LayerSpec& layer = layers[i];
        switch (layer.kind) {
            case LayerKind::Conv: {
                if (layer.c_out == 0 || layer.k1 == 0 || layer.k2 == 0 || layer.stride == 0) {
                    throw std::invalid_argument(
                        detail::str("layer '", layer.name, "': bad conv geometry"));
                }
                std::size_t padded_h = cur.h + 2 * layer.padding;
                std::size_t padded_w = cur.w + 2 * layer.padding;
                if (padded_h < layer.k1 || padded_w < layer.k2) {
                    throw std::invalid_argument(
                        detail::str("layer '", layer.name, "': kernel exceeds padded input"));
                }
                cur = {layer.c_out, (padded_h - layer.k1) / layer.stride + 1,
                       (padded_w - layer.k2) / layer.stride + 1};
                break;
            }
            case LayerKind::Dense:
                if (layer.out_features == 0) {
                    throw std::invalid_argument(
                        detail::str("layer '", layer.name, "': out_features must be positive"));
                }
                cur = {layer.out_features, 1, 1};
                break;
            case LayerKind::AvgPool:
                if (layer.window == 0 || cur.h % layer.window != 0 ||
                    cur.w % layer.window != 0) {
                    throw std::invalid_argument(detail::str(
                        "layer '", layer.name, "': window ", layer.window,
                        " does not divide ", cur.h, "x", cur.w));
                }
                cur = {cur.c, cur.h / layer.window, cur.w / layer.window};
                break;
        }
        out.push_back(cur);
    }
    return out;
}

void NetSpec::validate() const {
    if (layers.empty()) throw std::invalid_argument("net has no layers");
    shapes();
    for (const LayerSpec& layer : layers) {
        if (!layer.on_crossbar()) continue;
        if (layer.adc_bits < 1 || layer.adc_bits > 5) {
            throw std::invalid_argument(detail::str("layer '", layer.name, "': adc_bits ",
                                                    layer.adc_bits, " outside [1,5]"));
        }
        if (layer.input_bits < 1 || layer.input_bits > 16) {
            throw std::invalid_argument(
                detail::str("layer '", layer.name, "': input_bits outside [1,16]"));
        }
        if (layer.weight_bits < 1 || layer.weight_bits > 8) {
            throw std::invalid_argument(
                detail::str("layer '", layer.name, "': weight_bits outside [1,8]"));
        }
    }
}

ConvSpec NetSpec::conv_spec(std::size_t layer_index) const {
    auto shape_list = shapes();
    const LayerSpec& layer = layers.at(layer_index);
    const Shape3& in = shape_list[layer_index];
    ConvSpec spec;
    switch (layer.kind) {
        case LayerKind::Conv:
            spec.c_in = static_cast<int>(in.c);
            spec.k1 = static_cast<int>(layer.k1);
            spec.k2 = static_cast<int>(layer.k2);
            spec.c_out = static_cast<int>(layer.c_out);
            spec.stride = static_cast<int>(layer.stride);
            spec.padding = static_cast<int>(layer.padding);
            break;
        case LayerKind::Dense:
            spec.c_in = static_cast<int>(in.numel());
            spec.k1 = 1;
            spec.k2 = 1;
            spec.c_out = static_cast<int>(layer.out_features);
            spec.stride = 1;
            spec.padding = 0;
            break;
        case LayerKind::AvgPool:
            throw std::invalid_argument("avgpool has no conv spec");
    }
    spec.validate();
    return spec;
}

std::vector<std::size_t> NetSpec::weight_shape(std::size_t layer_index) const {
    auto shape_list = shapes();
    const LayerSpec& layer = layers.at(layer_index);
    const Shape3& in = shape_list[layer_index];
    switch (layer.kind) {
        case LayerKind::Conv:
            return {in.c, layer.k1, layer.k2, layer.c_out};
        case LayerKind::Dense:
            return {in.numel(), layer.out_features};
        case LayerKind::AvgPool:
            throw std::invalid_argument("avgpool has no weights");
    }
    return {};
}

}  // namespace cadc
