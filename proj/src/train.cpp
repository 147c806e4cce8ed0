#include "cadc/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "cadc/common.hpp"
#include "cadc/quant.hpp"

namespace cadc {

double softmax_ce(const std::vector<double>& logits, int label, std::vector<double>* grad) {
    if (logits.empty() || label < 0 || static_cast<std::size_t>(label) >= logits.size()) {
        throw std::invalid_argument("softmax_ce: label out of range");
    }
    const double zmax = *std::max_element(logits.begin(), logits.end());
    double denom = 0.0;
    for (double z : logits) denom += std::exp(z - zmax);
    const double log_denom = std::log(denom);
    if (grad) {
        grad->resize(logits.size());
        for (std::size_t i = 0; i < logits.size(); ++i) {
            (*grad)[i] = std::exp(logits[i] - zmax) / denom;
        }
        (*grad)[static_cast<std::size_t>(label)] -= 1.0;
    }
    return log_denom - (logits[static_cast<std::size_t>(label)] - zmax);
}

namespace {

struct SampleCaches {
    std::vector<Shape3> in_shapes;   // shape entering each layer (pre flatten)
    std::vector<Tensor> unrolled;    // [P, D] per crossbar layer
    std::vector<Tensor> pre_act;     // [P, c_out] before relu_after
};

// Forward one sample, filling the caches backward needs. Mirrors
// CompiledNet::forward; kept separate so inference stays cache-free.
Tensor forward_cached(const CompiledNet& cn, const Tensor& sample, SampleCaches& caches) {
    const std::size_t n = cn.net.layers.size();
    caches.in_shapes.assign(n, Shape3{});
    caches.unrolled.assign(n, Tensor{});
    caches.pre_act.assign(n, Tensor{});
    Tensor cur = sample;
    for (std::size_t i = 0; i < n; ++i) {
        const LayerSpec& layer = cn.net.layers[i];
        caches.in_shapes[i] = {cur.shape[0], cur.shape[1], cur.shape[2]};
        if (layer.kind == LayerKind::AvgPool) {
            cur = avgpool_forward(cur, layer.window);
            continue;
        }
        if (layer.kind == LayerKind::Dense) {
            const std::size_t flat = cur.numel();
            cur = Tensor({flat, 1, 1}, std::move(cur.data));
        }
        const ConvSpec spec = cn.net.conv_spec(i);
        caches.unrolled[i] = im2col(cur, spec);
        Tensor out = cn.vconv ? vconv_forward(cn.layers[i], caches.unrolled[i])
                              : cadc_forward(cn.layers[i], caches.unrolled[i]).output;
        caches.pre_act[i] = out;
        if (layer.relu_after) {
            for (auto& v : out.data) v = v > 0.0 ? v : 0.0;
        }
        cur = positions_to_chw(out, cn.shapes[i + 1]);
    }
    return cur;
}

void backward_sample(const CompiledNet& cn, const SampleCaches& caches, Tensor upstream_chw,
                     std::vector<std::vector<double>>& grad_accum) {
    for (std::size_t ri = cn.net.layers.size(); ri-- > 0;) {
        const LayerSpec& layer = cn.net.layers[ri];
        if (layer.kind == LayerKind::AvgPool) {
            upstream_chw = avgpool_backward(upstream_chw, caches.in_shapes[ri], layer.window);
            continue;
        }
        Tensor upstream = chw_to_positions(upstream_chw);
        if (layer.relu_after) {
            const Tensor& pre = caches.pre_act[ri];
            for (std::size_t j = 0; j < upstream.data.size(); ++j) {
                if (!(pre.data[j] > 0.0)) upstream.data[j] = 0.0;
            }
        }
        CadcGradients grads = cadc_backward(cn.layers[ri], caches.unrolled[ri], upstream);
        auto& acc = grad_accum[ri];
        for (std::size_t j = 0; j < acc.size(); ++j) acc[j] += grads.grad_weights.data[j];
        if (ri == 0) break;
        const ConvSpec spec = cn.net.conv_spec(ri);
        const Shape3& in_shape = caches.in_shapes[ri];
        if (layer.kind == LayerKind::Dense) {
            Tensor flat_grad = col2im_add(grads.grad_input, spec, 1, 1);
            upstream_chw = Tensor({in_shape.c, in_shape.h, in_shape.w}, std::move(flat_grad.data));
        } else {
            upstream_chw = col2im_add(grads.grad_input, spec, in_shape.h, in_shape.w);
        }
    }
}

void shuffle_indices(std::vector<std::size_t>& idx, std::mt19937_64& rng) {
    for (std::size_t i = idx.size(); i > 1; --i) {
        std::swap(idx[i - 1], idx[rng() % i]);
    }
}

// Straight-through forward view: float master weights snapped to the same
// column-wise ternary grid the quantized evaluator uses.
Model ternary_view(const Model& m) {
    Model t = m;
    for (auto& uk : t.weights) {
        if (uk.data.empty()) continue;
        const TernaryMatrix q = ternarize_columns(uk.rows, uk.cols, uk.data);
        for (std::size_t r = 0; r < uk.rows; ++r) {
            for (std::size_t c = 0; c < uk.cols; ++c) {
                uk.at(r, c) = q.scales[c] * q.codes[r * uk.cols + c];
            }
        }
    }
    return t;
}

}  // namespace

TrainResult train_toy(const NetSpec& net, const Dataset& data, const TrainConfig& cfg) {
    net.validate();
    if (data.classes < 2) throw std::invalid_argument("train_toy needs >= 2 classes");
    if (data.size() == 0) throw std::invalid_argument("train_toy: empty dataset");
    if (cfg.epochs < 1 || cfg.batch_size < 1 || !(cfg.lr > 0.0) || cfg.momentum < 0.0 ||
        cfg.momentum >= 1.0) {
        throw std::invalid_argument("train_toy: bad hyperparameters");
    }
    const auto shape_list = net.shapes();
    if (shape_list.back().numel() != data.classes) {
        throw std::invalid_argument(detail::str("net emits ", shape_list.back().numel(),
                                                " outputs for ", data.classes, " classes"));
    }
    if (!(data.sample_shape == net.input)) {
        throw std::invalid_argument("dataset sample shape does not match the net input");
    }

    CrossbarConfig xbar;
    xbar.n_rows = static_cast<int>(cfg.crossbar_n);
    xbar.n_cols = static_cast<int>(cfg.crossbar_n);

    std::optional<DendriteKind> fn_override = cfg.fn_override;
    if (cfg.vconv) fn_override = DendriteKind::Identity;

    TrainResult result;
    result.model = Model::init(net, cfg.seed);
    Model& m = result.model;

    std::vector<std::size_t> idx(data.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::mt19937_64 shuffle_rng(splitmix64(cfg.seed ^ 0x5a77e1ull));

    std::vector<std::vector<double>> grad_accum(net.layers.size());
    std::vector<std::vector<double>> velocity(net.layers.size());
    if (cfg.momentum > 0.0) {
        for (std::size_t i = 0; i < net.layers.size(); ++i) {
            velocity[i].assign(m.weights[i].data.size(), 0.0);
        }
    }

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        const bool snap = cfg.ternary && epoch > cfg.ternary_warmup;
        shuffle_indices(idx, shuffle_rng);
        double loss_sum = 0.0;
        std::size_t loss_count = 0;

        for (std::size_t start = 0; start < idx.size(); start += cfg.batch_size) {
            const std::size_t stop = std::min(idx.size(), start + cfg.batch_size);
            CompiledNet cn = CompiledNet::compile(snap ? ternary_view(m) : m, xbar,
                                                  fn_override, cfg.vconv);
            for (std::size_t i = 0; i < net.layers.size(); ++i) {
                grad_accum[i].assign(m.weights[i].data.size(), 0.0);
            }

            double batch_loss = 0.0;
            SampleCaches caches;
            std::vector<double> dlogits;
            for (std::size_t j = start; j < stop; ++j) {
                const std::size_t s = idx[j];
                Tensor out = forward_cached(cn, data.samples[s], caches);
                batch_loss += softmax_ce(out.data, data.labels[s], &dlogits);
                Tensor upstream({out.shape[0], out.shape[1], out.shape[2]}, dlogits);
                backward_sample(cn, caches, std::move(upstream), grad_accum);
            }
            const double inv_batch = 1.0 / static_cast<double>(stop - start);
            batch_loss *= inv_batch;
            if (!std::isfinite(batch_loss)) {
                throw TrainDivergenceError(
                    epoch, detail::str("training diverged at epoch ", epoch,
                                       ": batch loss is not finite"));
            }
            loss_sum += batch_loss;
            ++loss_count;
            for (std::size_t i = 0; i < net.layers.size(); ++i) {
                auto& w = m.weights[i].data;
                if (cfg.momentum > 0.0) {
                    auto& v = velocity[i];
                    for (std::size_t j = 0; j < w.size(); ++j) {
                        v[j] = cfg.momentum * v[j] + inv_batch * grad_accum[i][j];
                        w[j] -= cfg.lr * v[j];
                    }
                } else {
                    for (std::size_t j = 0; j < w.size(); ++j) {
                        w[j] -= cfg.lr * inv_batch * grad_accum[i][j];
                    }
                }
            }
        }

        CompiledNet cn = CompiledNet::compile(snap ? ternary_view(m) : m, xbar,
                                              fn_override, cfg.vconv);
        EpochStats stats;
        stats.epoch = epoch;
        stats.loss = loss_sum / static_cast<double>(loss_count);
        stats.accuracy = evaluate_accuracy(cn, data);
        result.curve.push_back(stats);
    }
    if (cfg.ternary) m = ternary_view(m);
    result.final_accuracy = result.curve.back().accuracy;
    return result;
}

}  // namespace cadc
