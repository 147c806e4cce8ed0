#include "cadc/model.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include "cadc/common.hpp"
#include "cadc/dataset.hpp"

namespace cadc {

Model Model::init(const NetSpec& net, std::uint64_t seed) {
    net.validate();
    Model m;
    m.net = net;
    m.weights.resize(net.layers.size());
    std::mt19937_64 rng(splitmix64(seed ^ 0xa11ce5ull));
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        if (!net.layers[i].on_crossbar()) continue;
        ConvSpec spec = net.conv_spec(i);
        UnrolledKernel& w = m.weights[i];
        w.rows = spec.unrolled_dim();
        w.cols = static_cast<std::size_t>(spec.c_out);
        w.data.resize(w.rows * w.cols);
        const double scale = std::sqrt(2.0 / static_cast<double>(w.rows));
        for (auto& v : w.data) v = scale * normal01(rng);
    }
    return m;
}

Model Model::from_archive(const NetSpec& net, const WeightArchive& archive) {
    net.validate();
    Model m;
    m.net = net;
    m.weights.resize(net.layers.size());
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        const LayerSpec& layer = net.layers[i];
        if (!layer.on_crossbar()) continue;
        const Tensor& t = archive.find(layer.name);
        const auto expect = net.weight_shape(i);
        if (t.shape != expect) {
            throw std::invalid_argument(detail::str("weights for layer '", layer.name,
                                                    "' have the wrong shape"));
        }
        UnrolledKernel& w = m.weights[i];
        if (layer.kind == LayerKind::Conv) {
            w = UnrolledKernel::from_tensor(t);
        } else {
            w.rows = t.shape[0];
            w.cols = t.shape[1];
            w.data = t.data;
        }
    }
    return m;
}

WeightArchive Model::to_archive() const {
    WeightArchive archive;
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        const LayerSpec& layer = net.layers[i];
        if (!layer.on_crossbar()) continue;
        // The unrolled row order equals row-major [c_in, k1, k2], so the flat
        // buffer doubles as the 4-D conv tensor payload.
        archive.add(layer.name, Tensor(net.weight_shape(i), weights[i].data));
    }
    return archive;
}

CompiledNet CompiledNet::compile(const Model& model, const CrossbarConfig& xbar,
                                 std::optional<DendriteKind> fn_override, bool vconv) {
    xbar.validate();
    CompiledNet cn;
    cn.net = model.net;
    cn.shapes = model.net.shapes();
    cn.vconv = vconv;
    cn.layers.resize(model.net.layers.size());
    for (std::size_t i = 0; i < model.net.layers.size(); ++i) {
        const LayerSpec& layer = model.net.layers[i];
        if (!layer.on_crossbar()) continue;
        DendriteFn fn = layer.fn;
        if (fn_override) fn.kind = *fn_override;
        cn.layers[i] = CadcLayer::make(partition(model.weights[i], xbar), fn);
    }
    return cn;
}

Tensor positions_to_chw(const Tensor& positions_by_channels, const Shape3& shape) {
    Tensor t = Tensor::zeros({shape.c, shape.h, shape.w});
    const std::size_t p_total = shape.h * shape.w;
    for (std::size_t p = 0; p < p_total; ++p) {
        for (std::size_t k = 0; k < shape.c; ++k) {
            t.data[k * p_total + p] = positions_by_channels.data[p * shape.c + k];
        }
    }
    return t;
}

Tensor chw_to_positions(const Tensor& grid) {
    const std::size_t c = grid.shape[0];
    const std::size_t p_total = grid.shape[1] * grid.shape[2];
    Tensor out = Tensor::zeros({p_total, c});
    for (std::size_t k = 0; k < c; ++k) {
        for (std::size_t p = 0; p < p_total; ++p) {
            out.data[p * c + k] = grid.data[k * p_total + p];
        }
    }
    return out;
}

Tensor avgpool_forward(const Tensor& input, std::size_t window) {
    if (input.rank() != 3) throw std::invalid_argument("avgpool input must be [c,h,w]");
    const std::size_t c = input.shape[0], h = input.shape[1], w = input.shape[2];
    if (window == 0 || h % window != 0 || w % window != 0) {
        throw std::invalid_argument("avgpool window must divide the input extent");
    }
    const std::size_t oh = h / window, ow = w / window;
    Tensor out = Tensor::zeros({c, oh, ow});
    const double inv = 1.0 / static_cast<double>(window * window);
    for (std::size_t ch = 0; ch < c; ++ch) {
        for (std::size_t y = 0; y < oh; ++y) {
            for (std::size_t x = 0; x < ow; ++x) {
                double acc = 0.0;
                for (std::size_t dy = 0; dy < window; ++dy) {
                    for (std::size_t dx = 0; dx < window; ++dx) {
                        acc += input.data[(ch * h + y * window + dy) * w + x * window + dx];
                    }
                }
                out.data[(ch * oh + y) * ow + x] = acc * inv;
            }
        }
    }
    return out;
}

Tensor avgpool_backward(const Tensor& grad_out, const Shape3& in_shape, std::size_t window) {
    const std::size_t oh = in_shape.h / window, ow = in_shape.w / window;
    if (grad_out.shape != std::vector<std::size_t>{in_shape.c, oh, ow}) {
        throw std::invalid_argument("avgpool_backward shape mismatch");
    }
    Tensor grad = Tensor::zeros({in_shape.c, in_shape.h, in_shape.w});
    const double inv = 1.0 / static_cast<double>(window * window);
    for (std::size_t ch = 0; ch < in_shape.c; ++ch) {
        for (std::size_t y = 0; y < oh; ++y) {
            for (std::size_t x = 0; x < ow; ++x) {
                const double g = grad_out.data[(ch * oh + y) * ow + x] * inv;
                for (std::size_t dy = 0; dy < window; ++dy) {
                    for (std::size_t dx = 0; dx < window; ++dx) {
                        grad.data[(ch * in_shape.h + y * window + dy) * in_shape.w + x * window +
                                  dx] += g;
                    }
                }
            }
        }
    }
    return grad;
}

Tensor CompiledNet::forward(const Tensor& sample, std::vector<PsumTensor>* post_f) const {
    if (sample.shape != std::vector<std::size_t>{shapes[0].c, shapes[0].h, shapes[0].w}) {
        throw std::invalid_argument("sample shape does not match the net input");
    }
    if (post_f) {
        post_f->clear();
        post_f->resize(layers.size());
    }
    Tensor cur = sample;
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        const LayerSpec& layer = net.layers[i];
        const Shape3& out_shape = shapes[i + 1];
        if (layer.kind == LayerKind::AvgPool) {
            cur = avgpool_forward(cur, layer.window);
            continue;
        }
        if (layer.kind == LayerKind::Dense) {
            const std::size_t flat = cur.numel();
            cur = Tensor({flat, 1, 1}, std::move(cur.data));
        }
        const ConvSpec spec = net.conv_spec(i);
        const Tensor x = im2col(cur, spec);
        Tensor out;
        if (vconv) {
            out = vconv_forward(layers[i], x);
            if (post_f) (*post_f)[i] = segment_psums(layers[i], x);
        } else {
            CadcForwardResult r = cadc_forward(layers[i], x);
            out = std::move(r.output);
            if (post_f) (*post_f)[i] = std::move(r.post_f);
        }
        if (layer.relu_after) {
            for (auto& v : out.data) v = v > 0.0 ? v : 0.0;
        }
        cur = positions_to_chw(out, out_shape);
    }
    return cur;
}

int predict_class(const Tensor& logits) {
    int best = 0;
    double best_v = logits.data.at(0);
    for (std::size_t i = 1; i < logits.numel(); ++i) {
        if (logits.data[i] > best_v) {
            best_v = logits.data[i];
            best = static_cast<int>(i);
        }
    }
    return best;
}

double evaluate_accuracy(const CompiledNet& net, const Dataset& data) {
    if (data.size() == 0) throw std::invalid_argument("empty eval set");
    std::size_t correct = 0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (predict_class(net.forward(data.samples[i])) == data.labels[i]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(data.size());
}

}  // namespace cadc
