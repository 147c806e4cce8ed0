#include "cadc/runner.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "cadc/common.hpp"
#include "cadc/quant.hpp"
#include "json.hpp"

namespace cadc {

namespace {

using nlohmann::json;

std::string slurp(const std::string& path, const char* what) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error(detail::str("cannot open ", what, ": ", path));
    std::ostringstream buf;
    buf << is.rdbuf();
    return buf.str();
}

}  // namespace

void ExperimentConfig::validate() const {
    if (crossbar_sizes.empty()) throw std::invalid_argument("crossbar_sizes must be non-empty");
    for (std::size_t n : crossbar_sizes) {
        if (n < 1 || n > 65536) {
            throw std::invalid_argument(detail::str("crossbar size ", n, " outside [1, 65536]"));
        }
    }
    for (const std::string& name : dendrite_fns) parse_dendrite_fn(name);
    for (int bits : adc_bits_grid) {
        if (bits < 1 || bits > 5) {
            throw std::invalid_argument(detail::str("adc_bits ", bits, " outside [1,5]"));
        }
    }
    for (double s : noise_grid) {
        if (s < 0.0) throw std::invalid_argument("noise grid entries must be >= 0");
    }
    if (noise.std < 0.0) throw std::invalid_argument("noise std must be >= 0");
    if (dataset_kind != "digits" && dataset_kind != "blobs") {
        throw std::invalid_argument("dataset kind must be 'digits' or 'blobs'");
    }
    if (cost_sparsity < 0.0 || cost_sparsity > 1.0) {
        throw std::invalid_argument("cost_sparsity must be in [0,1]");
    }
}

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text) {
    const json j = json::parse(text);
    ExperimentConfig cfg;
    cfg.netspec_path = j.value("netspec", "");
    cfg.weights_path = j.value("weights", "");
    if (j.contains("crossbar_sizes")) {
        cfg.crossbar_sizes = j.at("crossbar_sizes").get<std::vector<std::size_t>>();
    }
    if (j.contains("dendrite_fns")) {
        cfg.dendrite_fns = j.at("dendrite_fns").get<std::vector<std::string>>();
    }
    const std::string mode = j.value("mode", "cadc");
    if (mode == "vconv") {
        cfg.vconv = true;
    } else if (mode != "cadc") {
        throw std::invalid_argument("mode must be 'cadc' or 'vconv'");
    }
    cfg.quantized = j.value("quantized", false);
    cfg.codec = j.value("codec", true);
    cfg.seed = j.value("seed", std::uint64_t{1});
    if (j.contains("noise")) {
        const json& n = j.at("noise");
        cfg.noise.enabled = n.value("enabled", false);
        cfg.noise.mean = n.value("mean", -0.11);
        cfg.noise.std = n.value("std", 0.56);
    }
    if (j.contains("noise_grid")) cfg.noise_grid = j.at("noise_grid").get<std::vector<double>>();
    if (j.contains("adc_bits_grid")) {
        cfg.adc_bits_grid = j.at("adc_bits_grid").get<std::vector<int>>();
    }
    if (j.contains("seeds")) cfg.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    cfg.cost_params_path = j.value("cost_params", "");
    cfg.out_dir = j.value("out_dir", ".");
    if (j.contains("dataset")) {
        const json& d = j.at("dataset");
        cfg.dataset_kind = d.value("kind", "digits");
        cfg.dataset_samples = d.value("samples", std::size_t{1000});
        cfg.dataset_seed = d.value("seed", std::uint64_t{7});
        cfg.dataset_noise_std = d.value("noise_std", 0.15);
        cfg.dataset_dim = d.value("dim", std::size_t{8});
    }
    cfg.train.seed = cfg.seed;
    if (j.contains("train")) {
        const json& t = j.at("train");
        cfg.train.epochs = t.value("epochs", 100);
        cfg.train.batch_size = t.value("batch_size", std::size_t{32});
        cfg.train.lr = t.value("lr", 0.05);
        cfg.train.momentum = t.value("momentum", 0.0);
        cfg.train.seed = t.value("seed", cfg.seed);
        cfg.train.crossbar_n = t.value("crossbar_n", std::size_t{4});
        cfg.train.ternary = t.value("ternary", false);
        cfg.train.ternary_warmup = t.value("ternary_warmup", 0);
        if (t.contains("fn")) {
            cfg.train.fn_override = parse_dendrite_fn(t.at("fn").get<std::string>()).kind;
        }
    }
    cfg.cost_sparsity = j.value("cost_sparsity", 0.0);
    cfg.input_bit_serial = j.value("input_bit_serial", false);
    cfg.train.vconv = cfg.vconv;
    cfg.validate();
    return cfg;
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
    return from_json_text(slurp(path, "experiment config"));
}

Dataset make_dataset(const ExperimentConfig& cfg) {
    if (cfg.dataset_kind == "blobs") {
        return make_blobs(cfg.dataset_samples, cfg.dataset_dim, cfg.dataset_seed);
    }
    return make_digits(cfg.dataset_samples, cfg.dataset_seed, cfg.dataset_noise_std);
}

CostParams load_cost_params(const ExperimentConfig& cfg) {
    if (cfg.cost_params_path.empty()) {
        CostParams p;
        p.validate();
        return p;
    }
    return CostParams::from_file(cfg.cost_params_path);
}

namespace {

CrossbarConfig make_xbar(std::size_t n) {
    CrossbarConfig xbar;
    xbar.n_rows = static_cast<int>(n);
    xbar.n_cols = static_cast<int>(n);
    xbar.validate();
    return xbar;
}

std::optional<DendriteKind> override_from(const std::vector<std::string>& fns) {
    if (fns.empty()) return std::nullopt;
    return parse_dendrite_fn(fns.front()).kind;
}

std::string fn_label_for(const std::optional<DendriteKind>& ov, bool vconv) {
    if (vconv) return "vconv";
    if (!ov) return "net";
    return std::string(dendrite_fn_name(*ov));
}

struct EvalAggregate {
    std::vector<LayerReport> layers;                     // every net layer
    std::vector<LayerCostInput> cost_inputs;             // crossbar layers only
    std::vector<std::vector<std::uint32_t>> blocks;      // parallel to cost_inputs
    std::vector<int> predictions;
    double accuracy = 0.0;
    double post_f_zero_fraction = 0.0;                   // over all crossbar psums
};

void fill_static_layer_fields(const NetSpec& net, const CrossbarConfig& xbar,
                              std::size_t samples, EvalAggregate& agg) {
    const auto shape_list = net.shapes();
    agg.layers.clear();
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        const LayerSpec& layer = net.layers[i];
        LayerReport rep;
        rep.name = layer.name;
        rep.kind = layer_kind_name(layer.kind);
        rep.out_shape = shape_list[i + 1];
        if (layer.on_crossbar()) {
            const ConvSpec spec = net.conv_spec(i);
            const Shape3& out = shape_list[i + 1];
            const std::uint64_t positions = out.h * out.w;
            rep.s_count = num_segments(spec, xbar);
            rep.col_tiles = (static_cast<std::size_t>(spec.c_out) +
                             static_cast<std::size_t>(xbar.n_cols) - 1) /
                            static_cast<std::size_t>(xbar.n_cols);
            PsumCountArgs args;
            args.output_positions = positions;
            args.weight_bits = layer.weight_bits;
            args.input_bits = layer.input_bits;
            rep.psums_per_sample = psum_count(spec, xbar, args);
            rep.psums_total = rep.psums_per_sample * samples;
        }
        agg.layers.push_back(std::move(rep));
    }
}

// Shared float-path evaluation: accuracy, measured psum sparsity and exact
// per-block nonzero counts for the cost model.
EvalAggregate float_eval(const Model& model, const Dataset& data, std::size_t crossbar_n,
                         std::optional<DendriteKind> fn_override, bool vconv, bool collect_raw) {
    if (data.size() == 0) throw std::invalid_argument("empty input set");
    const CrossbarConfig xbar = make_xbar(crossbar_n);
    const CompiledNet cn = CompiledNet::compile(model, xbar, fn_override, vconv);
    const NetSpec& net = model.net;

    EvalAggregate agg;
    fill_static_layer_fields(net, xbar, data.size(), agg);

    const auto shape_list = net.shapes();
    std::vector<std::uint64_t> zeros(net.layers.size(), 0);
    std::vector<std::uint64_t> raw_zeros(net.layers.size(), 0);
    std::vector<std::uint64_t> totals(net.layers.size(), 0);
    std::vector<std::vector<std::uint32_t>> blocks(net.layers.size());
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        if (!net.layers[i].on_crossbar()) continue;
        const Shape3& out = shape_list[i + 1];
        blocks[i].assign(data.size() * out.h * out.w * out.c, 0);
    }

    std::vector<PsumTensor> post_f;
    std::size_t correct = 0;
    for (std::size_t si = 0; si < data.size(); ++si) {
        Tensor out = cn.forward(data.samples[si], &post_f);
        const int pred = predict_class(out);
        agg.predictions.push_back(pred);
        if (pred == data.labels[si]) ++correct;

        for (std::size_t i = 0; i < net.layers.size(); ++i) {
            if (!net.layers[i].on_crossbar()) continue;
            const PsumTensor& pf = post_f[i];
            totals[i] += pf.data.size();
            const std::size_t block_base = si * pf.positions * pf.channels;
            for (std::size_t s = 0; s < pf.s_count; ++s) {
                for (std::size_t p = 0; p < pf.positions; ++p) {
                    for (std::size_t k = 0; k < pf.channels; ++k) {
                        const double v = pf.at(s, p, k);
                        if (v == 0.0) {
                            ++zeros[i];
                        } else {
                            ++blocks[i][block_base + p * pf.channels + k];
                        }
                    }
                }
            }
            if (collect_raw && !vconv) {
                const ConvSpec spec = net.conv_spec(i);
                Tensor cur = data.samples[si];
                // Raw zero counting needs this layer's input, so rerun the
                // prefix of the net; only used on single-config reports.
                for (std::size_t q = 0; q < i; ++q) {
                    const LayerSpec& prev = net.layers[q];
                    if (prev.kind == LayerKind::AvgPool) {
                        cur = avgpool_forward(cur, prev.window);
                        continue;
                    }
                    if (prev.kind == LayerKind::Dense) {
                        const std::size_t flat = cur.numel();
                        cur = Tensor({flat, 1, 1}, std::move(cur.data));
                    }
                    Tensor x = im2col(cur, net.conv_spec(q));
                    Tensor o = vconv ? vconv_forward(cn.layers[q], x)
                                     : cadc_forward(cn.layers[q], x).output;
                    if (prev.relu_after) {
                        for (auto& v : o.data) v = v > 0.0 ? v : 0.0;
                    }
                    cur = positions_to_chw(o, shape_list[q + 1]);
                }
                if (net.layers[i].kind == LayerKind::Dense) {
                    const std::size_t flat = cur.numel();
                    cur = Tensor({flat, 1, 1}, std::move(cur.data));
                }
                const PsumTensor raw = segment_psums(cn.layers[i], im2col(cur, spec));
                for (double v : raw.data) {
                    if (v == 0.0) ++raw_zeros[i];
                }
            } else if (vconv) {
                raw_zeros[i] = zeros[i];  // vconv post_f stage is the raw stage
            }
        }
    }
    agg.accuracy = static_cast<double>(correct) / static_cast<double>(data.size());

    std::uint64_t zero_sum = 0, total_sum = 0;
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        if (!net.layers[i].on_crossbar()) continue;
        LayerReport& rep = agg.layers[i];
        rep.post_f_zero_fraction =
            totals[i] ? static_cast<double>(zeros[i]) / static_cast<double>(totals[i]) : 0.0;
        rep.raw_zero_fraction =
            totals[i] ? static_cast<double>(raw_zeros[i]) / static_cast<double>(totals[i]) : 0.0;
        zero_sum += zeros[i];
        total_sum += totals[i];

        const Shape3& out = shape_list[i + 1];
        LayerCostInput ci;
        ci.name = net.layers[i].name;
        ci.output_positions = static_cast<std::uint64_t>(out.h * out.w) * data.size();
        ci.c_out = out.c;
        ci.s_count = rep.s_count;
        ci.sparsity = rep.post_f_zero_fraction;
        ci.adc_bits = net.layers[i].adc_bits;
        agg.cost_inputs.push_back(std::move(ci));
        agg.blocks.push_back(std::move(blocks[i]));
    }
    agg.post_f_zero_fraction =
        total_sum ? static_cast<double>(zero_sum) / static_cast<double>(total_sum) : 0.0;
    return agg;
}

void fill_compression_ratios(std::vector<LayerReport>& layers,
                             const std::vector<LayerCostInput>& cost_inputs,
                             const std::vector<std::vector<std::uint32_t>>& blocks, int width) {
    std::size_t ci = 0;
    for (LayerReport& rep : layers) {
        if (rep.kind == "avgpool") continue;
        const std::uint64_t nblocks = cost_inputs[ci].output_positions * cost_inputs[ci].c_out;
        std::uint64_t nnz = 0;
        for (std::uint32_t c : blocks[ci]) nnz += c;
        const std::uint64_t s = cost_inputs[ci].s_count;
        const std::uint64_t w = static_cast<std::uint64_t>(width);
        const std::uint64_t raw_bits = nblocks * s * w;
        const std::uint64_t packed_bits = nblocks * s + w * nnz;
        rep.compression_ratio =
            packed_bits ? static_cast<double>(raw_bits) / static_cast<double>(packed_bits) : 0.0;
        ++ci;
    }
}

}  // namespace

InferenceResult run_inference(const Model& model, const Dataset& data,
                              const ExperimentConfig& cfg, const CostParams& params) {
    cfg.validate();
    const auto fn_override = override_from(cfg.dendrite_fns);
    const std::size_t n = cfg.crossbar_sizes.front();

    InferenceResult result;
    result.crossbar_n = n;
    result.fn_label = fn_label_for(fn_override, cfg.vconv);
    result.quantized = cfg.quantized;

    EvalAggregate agg;
    if (cfg.quantized) {
        QuantRunConfig qcfg;
        qcfg.crossbar_n = n;
        qcfg.fn_override = fn_override;
        qcfg.vconv = cfg.vconv;
        qcfg.noise = cfg.noise;
        qcfg.seed = cfg.seed;
        QuantizedEvalResult q = quantized_eval(model, data, qcfg);
        agg.layers = std::move(q.layers);
        agg.predictions = std::move(q.predictions);
        agg.accuracy = q.accuracy;
        const auto shape_list = model.net.shapes();
        for (std::size_t i = 0; i < model.net.layers.size(); ++i) {
            if (!model.net.layers[i].on_crossbar()) continue;
            const Shape3& out = shape_list[i + 1];
            LayerCostInput ci;
            ci.name = model.net.layers[i].name;
            ci.output_positions = static_cast<std::uint64_t>(out.h * out.w) * data.size();
            ci.c_out = out.c;
            ci.s_count = agg.layers[i].s_count;
            ci.sparsity = agg.layers[i].post_f_zero_fraction;
            ci.adc_bits = model.net.layers[i].adc_bits;
            agg.cost_inputs.push_back(std::move(ci));
            agg.blocks.push_back(std::move(q.per_layer_blocks[i]));
        }
    } else {
        agg = float_eval(model, data, n, fn_override, cfg.vconv, /*collect_raw=*/true);
    }

    result.cost = compare_cost_exact(agg.cost_inputs, agg.blocks, cfg.codec, params);
    fill_compression_ratios(agg.layers, agg.cost_inputs, agg.blocks, params.psum_width_bits);
    result.layers = std::move(agg.layers);
    result.predictions = std::move(agg.predictions);
    result.accuracy = agg.accuracy;
    return result;
}

SweepResult sweep_crossbars(const Model& model, const Dataset& data, const ExperimentConfig& cfg,
                            const CostParams& params) {
    cfg.validate();
    if (data.size() == 0) throw std::invalid_argument("sweep needs a non-empty eval set");

    std::vector<std::size_t> sizes = cfg.crossbar_sizes;
    std::sort(sizes.begin(), sizes.end());
    sizes.erase(std::unique(sizes.begin(), sizes.end()), sizes.end());

    std::vector<std::string> fns = cfg.dendrite_fns;
    if (fns.empty()) fns.push_back("");
    std::sort(fns.begin(), fns.end());
    fns.erase(std::unique(fns.begin(), fns.end()), fns.end());

    SweepResult result;
    for (std::size_t n : sizes) {
        for (const std::string& fname : fns) {
            std::optional<DendriteKind> ov;
            if (!fname.empty()) ov = parse_dendrite_fn(fname).kind;
            EvalAggregate agg = float_eval(model, data, n, ov, cfg.vconv, false);
            const CostComparison cmp =
                compare_cost_exact(agg.cost_inputs, agg.blocks, cfg.codec, params);

            SweepRow row;
            row.crossbar_n = n;
            row.fn = fn_label_for(ov, cfg.vconv);
            row.accuracy = agg.accuracy;
            row.sparsity = agg.post_f_zero_fraction;
            row.energy_pj = cmp.dendritic.energy_pj.total();
            row.accumulation_reduction_pct = cmp.accumulation_energy_reduction_pct;
            row.buffer_transfer_reduction_pct = cmp.buffer_transfer_energy_reduction_pct;
            result.rows.push_back(std::move(row));

            for (const LayerReport& rep : agg.layers) {
                if (rep.kind == "avgpool") continue;
                SweepLayerRow lr;
                lr.crossbar_n = n;
                lr.fn = fn_label_for(ov, cfg.vconv);
                lr.layer = rep.name;
                lr.s_count = rep.s_count;
                lr.psums_per_sample = rep.psums_per_sample;
                result.layer_rows.push_back(std::move(lr));
            }
        }
    }
    return result;
}

QuantizedEvalResult quantized_eval(const Model& model, const Dataset& data,
                                   const QuantRunConfig& qcfg) {
    if (data.size() == 0) throw std::invalid_argument("empty input set");
    const CrossbarConfig xbar = make_xbar(qcfg.crossbar_n);
    const NetSpec& net = model.net;
    const auto shape_list = net.shapes();

    QuantizedEvalResult result;
    result.per_layer_blocks.resize(net.layers.size());

    EvalAggregate static_fields;
    fill_static_layer_fields(net, xbar, data.size(), static_fields);
    result.layers = std::move(static_fields.layers);

    std::vector<Tensor> acts = data.samples;

    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        const LayerSpec& layer = net.layers[i];
        if (layer.kind == LayerKind::AvgPool) {
            for (Tensor& a : acts) a = avgpool_forward(a, layer.window);
            continue;
        }
        const ConvSpec spec = net.conv_spec(i);
        DendriteFn fn = layer.fn;
        if (qcfg.fn_override) fn.kind = *qcfg.fn_override;
        if (qcfg.vconv) fn.kind = DendriteKind::Identity;

        // Layer input format calibrated over the whole set.
        double maxabs = 0.0;
        bool negative = false;
        for (const Tensor& a : acts) {
            for (double v : a.data) {
                maxabs = std::max(maxabs, std::abs(v));
                if (v < 0.0) negative = true;
            }
        }
        FixedPointFormat fmt;
        fmt.bits = layer.input_bits;
        fmt.is_signed = negative;
        fmt.scale = maxabs > 0.0 ? maxabs / static_cast<double>(fmt.max_code()) : 1.0;

        const TernaryMatrix tq =
            ternarize_columns(model.weights[i].rows, model.weights[i].cols, model.weights[i].data);
        const PartitionedKernel pk = partition(model.weights[i], xbar);
        const std::size_t s_total = pk.map.s_count;
        const std::size_t cols = model.weights[i].cols;

        // Pass 1: integer psums for every sample, tracking the ADC full scale.
        const Shape3& out_shape = shape_list[i + 1];
        const std::size_t positions = out_shape.h * out_shape.w;
        std::vector<std::vector<double>> analogs(data.size());
        double full_scale = 0.0;
        AdcModel probe;
        probe.resolution_bits = qcfg.adc_bits_override.value_or(layer.adc_bits);
        probe.fn = fn;

        for (std::size_t si = 0; si < data.size(); ++si) {
            Tensor cur = acts[si];
            if (layer.kind == LayerKind::Dense) {
                const std::size_t flat = cur.numel();
                cur = Tensor({flat, 1, 1}, std::move(cur.data));
            }
            Tensor x = im2col(cur, spec);
            for (double& v : x.data) {
                v = static_cast<double>(quantize_input(v, fmt));
            }
            auto& vals = analogs[si];
            vals.assign(s_total * positions * cols, 0.0);
            for (std::size_t s = 0; s < s_total; ++s) {
                const auto range = pk.map.segments[s];
                for (std::size_t p = 0; p < positions; ++p) {
                    const double* xrow = &x.data[p * x.shape[1]];
                    for (std::size_t k = 0; k < cols; ++k) {
                        std::int64_t acc = 0;
                        for (std::size_t d = range.begin; d < range.end; ++d) {
                            const int w = tq.codes[d * cols + k];
                            if (w != 0) acc += w * static_cast<std::int64_t>(xrow[d]);
                        }
                        const double analog = static_cast<double>(acc) * fmt.scale * tq.scales[k];
                        vals[(s * positions + p) * cols + k] = analog;
                        const double level = probe.is_signed() ? std::abs(analog)
                                                               : apply_f(fn, analog);
                        full_scale = std::max(full_scale, level);
                    }
                }
            }
        }
        if (full_scale <= 0.0) full_scale = 1.0;

        AdcModel adc = probe;
        adc.full_scale = full_scale;
        adc.validate();

        const bool noisy = qcfg.noise.enabled && (qcfg.noise.mean != 0.0 || qcfg.noise.std != 0.0);
        NoiseModel nm;
        nm.mean = qcfg.noise.mean;
        nm.std = qcfg.noise.std;
        nm.seed = splitmix64(qcfg.seed ^ splitmix64(0xadc0ull + i));
        const NoiseStream stream(nm);

        // Pass 2: convert, accumulate across segments, measure code sparsity.
        auto& blocks = result.per_layer_blocks[i];
        blocks.assign(data.size() * positions * cols, 0);
        std::uint64_t zero_codes = 0, raw_zeros = 0, total_codes = 0;
        for (std::size_t si = 0; si < data.size(); ++si) {
            const auto& vals = analogs[si];
            Tensor out = Tensor::zeros({positions, cols});
            for (std::size_t s = 0; s < s_total; ++s) {
                for (std::size_t p = 0; p < positions; ++p) {
                    for (std::size_t k = 0; k < cols; ++k) {
                        const double analog = vals[(s * positions + p) * cols + k];
                        if (analog == 0.0) ++raw_zeros;
                        const std::uint64_t idx = ((si * s_total + s) * positions + p) * cols + k;
                        const std::int64_t code =
                            noisy ? adc_convert_noisy(adc, analog, stream, idx)
                                  : adc_convert(adc, analog);
                        ++total_codes;
                        if (code == 0) {
                            ++zero_codes;
                        } else {
                            ++blocks[(si * positions + p) * cols + k];
                        }
                        out.data[p * cols + k] += adc_dequant(adc, code);
                    }
                }
            }
            if (layer.relu_after) {
                for (auto& v : out.data) v = v > 0.0 ? v : 0.0;
            }
            acts[si] = positions_to_chw(out, out_shape);
        }
        LayerReport& rep = result.layers[i];
        rep.post_f_zero_fraction =
            total_codes ? static_cast<double>(zero_codes) / static_cast<double>(total_codes) : 0.0;
        rep.raw_zero_fraction =
            total_codes ? static_cast<double>(raw_zeros) / static_cast<double>(total_codes) : 0.0;
    }

    std::size_t correct = 0;
    for (std::size_t si = 0; si < data.size(); ++si) {
        const int pred = predict_class(acts[si]);
        result.predictions.push_back(pred);
        if (pred == data.labels[si]) ++correct;
    }
    result.accuracy = static_cast<double>(correct) / static_cast<double>(data.size());
    return result;
}

std::vector<NoiseRow> noise_sweep(const Model& model, const Dataset& data,
                                  const ExperimentConfig& cfg) {
    cfg.validate();
    if (cfg.noise_grid.empty()) throw std::invalid_argument("noise grid must be non-empty");
    if (cfg.adc_bits_grid.empty()) throw std::invalid_argument("adc_bits grid must be non-empty");
    if (cfg.seeds.empty()) throw std::invalid_argument("seed list must be non-empty");

    std::vector<int> bits_grid = cfg.adc_bits_grid;
    std::sort(bits_grid.begin(), bits_grid.end());
    bits_grid.erase(std::unique(bits_grid.begin(), bits_grid.end()), bits_grid.end());
    std::vector<double> stds = cfg.noise_grid;
    std::sort(stds.begin(), stds.end());
    stds.erase(std::unique(stds.begin(), stds.end()), stds.end());

    const auto fn_override = override_from(cfg.dendrite_fns);

    std::vector<NoiseRow> rows;
    for (int bits : bits_grid) {
        for (double noise_std : stds) {
            std::vector<double> accs;
            for (std::uint64_t seed : cfg.seeds) {
                QuantRunConfig qcfg;
                qcfg.crossbar_n = cfg.crossbar_sizes.front();
                qcfg.fn_override = fn_override;
                qcfg.vconv = cfg.vconv;
                qcfg.adc_bits_override = bits;
                qcfg.noise.enabled = noise_std != 0.0 || cfg.noise.mean != 0.0;
                qcfg.noise.mean = cfg.noise.mean;
                qcfg.noise.std = noise_std;
                qcfg.seed = seed;
                accs.push_back(quantized_eval(model, data, qcfg).accuracy);
            }
            NoiseRow row;
            row.adc_bits = bits;
            row.noise_std = noise_std;
            row.seed_count = accs.size();
            double mean = 0.0;
            for (double a : accs) mean += a;
            mean /= static_cast<double>(accs.size());
            row.mean_accuracy = mean;
            if (accs.size() > 1) {
                double var = 0.0;
                for (double a : accs) var += (a - mean) * (a - mean);
                row.std_accuracy = std::sqrt(var / static_cast<double>(accs.size() - 1));
            }
            rows.push_back(row);
        }
    }
    return rows;
}

std::vector<PartitionRow> partition_report(const NetSpec& net,
                                           std::span<const std::size_t> crossbar_sizes,
                                           bool input_bit_serial) {
    net.validate();
    if (crossbar_sizes.empty()) throw std::invalid_argument("crossbar_sizes must be non-empty");
    std::vector<std::size_t> sizes(crossbar_sizes.begin(), crossbar_sizes.end());
    std::sort(sizes.begin(), sizes.end());
    sizes.erase(std::unique(sizes.begin(), sizes.end()), sizes.end());

    const auto shape_list = net.shapes();
    std::vector<PartitionRow> rows;
    for (std::size_t n : sizes) {
        const CrossbarConfig xbar = make_xbar(n);
        for (std::size_t i = 0; i < net.layers.size(); ++i) {
            const LayerSpec& layer = net.layers[i];
            if (!layer.on_crossbar()) continue;
            const ConvSpec spec = net.conv_spec(i);
            const Shape3& out = shape_list[i + 1];
            PartitionRow row;
            row.crossbar_n = n;
            row.layer = layer.name;
            row.kind = layer_kind_name(layer.kind);
            row.d = spec.unrolled_dim();
            row.s_count = num_segments(spec, xbar);
            row.pad_rows = row.s_count * n - row.d;
            row.col_tiles = (static_cast<std::size_t>(spec.c_out) + n - 1) / n;
            PsumCountArgs args;
            args.output_positions = out.h * out.w;
            args.weight_bits = layer.weight_bits;
            args.input_bits = layer.input_bits;
            args.input_bit_serial = input_bit_serial;
            row.psums_per_sample = psum_count(spec, xbar, args);
            row.psums_unpartitioned = psum_count_unpartitioned(spec, out.h * out.w);
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

std::vector<LayerCostInput> cost_inputs_for(const NetSpec& net, std::size_t crossbar_n,
                                            double sparsity) {
    net.validate();
    const CrossbarConfig xbar = make_xbar(crossbar_n);
    const auto shape_list = net.shapes();
    std::vector<LayerCostInput> inputs;
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        const LayerSpec& layer = net.layers[i];
        if (!layer.on_crossbar()) continue;
        const Shape3& out = shape_list[i + 1];
        LayerCostInput ci;
        ci.name = layer.name;
        ci.output_positions = out.h * out.w;
        ci.c_out = out.c;
        ci.s_count = num_segments(net.conv_spec(i), xbar);
        ci.sparsity = sparsity;
        ci.adc_bits = layer.adc_bits;
        inputs.push_back(std::move(ci));
    }
    return inputs;
}

std::string format_double(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc{}) return "nan";
    return std::string(buf, end);
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open for write: " + path);
    os.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!os) throw std::runtime_error("write failed: " + path);
}

namespace {

json report_to_json(const CostReport& r) {
    json j;
    j["name"] = r.name;
    j["energy_pj"] = {{"crossbar", r.energy_pj.crossbar},
                      {"adc", r.energy_pj.adc},
                      {"buffer", r.energy_pj.buffer},
                      {"transfer", r.energy_pj.transfer},
                      {"accumulation", r.energy_pj.accumulation},
                      {"codec", r.energy_pj.codec},
                      {"total", r.energy_pj.total()}};
    j["latency_ns"] = {{"crossbar", r.latency_ns.crossbar},
                       {"adc", r.latency_ns.adc},
                       {"buffer", r.latency_ns.buffer},
                       {"transfer", r.latency_ns.transfer},
                       {"accumulation", r.latency_ns.accumulation},
                       {"codec", r.latency_ns.codec},
                       {"total", r.latency_ns.total()}};
    j["codec_compress_energy_pj"] = r.codec_compress_energy_pj;
    j["codec_skip_energy_pj"] = r.codec_skip_energy_pj;
    j["psums"] = r.psum_total;
    j["nonzero_psums"] = r.nonzero_psums;
    j["blocks"] = r.blocks;
    j["buffer_bits"] = r.buffer_bits;
    j["adds"] = r.adds;
    j["sparsity"] = r.sparsity;
    return j;
}

json comparison_to_json(const CostComparison& cmp) {
    json j;
    j["dendritic"] = report_to_json(cmp.dendritic);
    j["baseline"] = report_to_json(cmp.baseline);
    j["reductions_pct"] = {{"accumulation_energy", cmp.accumulation_energy_reduction_pct},
                           {"buffer_transfer_energy", cmp.buffer_transfer_energy_reduction_pct},
                           {"total_energy", cmp.total_energy_reduction_pct},
                           {"total_latency", cmp.total_latency_reduction_pct}};
    return j;
}

json layer_report_to_json(const LayerReport& rep) {
    json j;
    j["name"] = rep.name;
    j["kind"] = rep.kind;
    j["s_count"] = rep.s_count;
    j["col_tiles"] = rep.col_tiles;
    j["psums_per_sample"] = rep.psums_per_sample;
    j["psums_total"] = rep.psums_total;
    j["raw_zero_fraction"] = rep.raw_zero_fraction;
    j["post_f_zero_fraction"] = rep.post_f_zero_fraction;
    j["compression_ratio"] = rep.compression_ratio;
    j["out_shape"] = {rep.out_shape.c, rep.out_shape.h, rep.out_shape.w};
    return j;
}

}  // namespace

std::string inference_json(const InferenceResult& result) {
    json j;
    j["crossbar_n"] = result.crossbar_n;
    j["fn"] = result.fn_label;
    j["quantized"] = result.quantized;
    j["accuracy"] = result.accuracy;
    j["samples"] = result.predictions.size();
    j["predictions"] = result.predictions;
    json layers = json::array();
    for (const LayerReport& rep : result.layers) layers.push_back(layer_report_to_json(rep));
    j["layers"] = layers;
    j["cost"] = comparison_to_json(result.cost);
    return j.dump(2) + "\n";
}

std::string inference_layers_csv(const InferenceResult& result) {
    std::string out =
        "layer,kind,s_count,col_tiles,psums_per_sample,psums_total,raw_zero_fraction,"
        "post_f_zero_fraction,compression_ratio\n";
    for (const LayerReport& rep : result.layers) {
        out += rep.name + ',' + rep.kind + ',' + std::to_string(rep.s_count) + ',' +
               std::to_string(rep.col_tiles) + ',' + std::to_string(rep.psums_per_sample) + ',' +
               std::to_string(rep.psums_total) + ',' + format_double(rep.raw_zero_fraction) +
               ',' + format_double(rep.post_f_zero_fraction) + ',' +
               format_double(rep.compression_ratio) + '\n';
    }
    return out;
}

std::string sweep_json(const SweepResult& result) {
    json rows = json::array();
    for (const SweepRow& row : result.rows) {
        rows.push_back({{"crossbar_n", row.crossbar_n},
                        {"fn", row.fn},
                        {"accuracy", row.accuracy},
                        {"sparsity", row.sparsity},
                        {"energy_pj", row.energy_pj},
                        {"accumulation_reduction_pct", row.accumulation_reduction_pct},
                        {"buffer_transfer_reduction_pct", row.buffer_transfer_reduction_pct}});
    }
    json layer_rows = json::array();
    for (const SweepLayerRow& row : result.layer_rows) {
        layer_rows.push_back({{"crossbar_n", row.crossbar_n},
                              {"fn", row.fn},
                              {"layer", row.layer},
                              {"s_count", row.s_count},
                              {"psums_per_sample", row.psums_per_sample}});
    }
    json j;
    j["rows"] = rows;
    j["layer_rows"] = layer_rows;
    return j.dump(2) + "\n";
}

std::string sweep_csv(const SweepResult& result) {
    std::string out =
        "crossbar_n,fn,accuracy,sparsity,energy_pj,accumulation_reduction_pct,"
        "buffer_transfer_reduction_pct\n";
    for (const SweepRow& row : result.rows) {
        out += std::to_string(row.crossbar_n) + ',' + row.fn + ',' +
               format_double(row.accuracy) + ',' + format_double(row.sparsity) + ',' +
               format_double(row.energy_pj) + ',' +
               format_double(row.accumulation_reduction_pct) + ',' +
               format_double(row.buffer_transfer_reduction_pct) + '\n';
    }
    return out;
}

std::string sweep_layers_csv(const SweepResult& result) {
    std::string out = "crossbar_n,fn,layer,s_count,psums_per_sample\n";
    for (const SweepLayerRow& row : result.layer_rows) {
        out += std::to_string(row.crossbar_n) + ',' + row.fn + ',' + row.layer + ',' +
               std::to_string(row.s_count) + ',' + std::to_string(row.psums_per_sample) + '\n';
    }
    return out;
}

std::string noise_sweep_json(const std::vector<NoiseRow>& rows) {
    json arr = json::array();
    for (const NoiseRow& row : rows) {
        arr.push_back({{"adc_bits", row.adc_bits},
                       {"noise_std", row.noise_std},
                       {"mean_accuracy", row.mean_accuracy},
                       {"std_accuracy", row.std_accuracy},
                       {"seeds", row.seed_count}});
    }
    json j;
    j["rows"] = arr;
    return j.dump(2) + "\n";
}

std::string noise_sweep_csv(const std::vector<NoiseRow>& rows) {
    std::string out = "adc_bits,noise_std,mean_accuracy,std_accuracy,seeds\n";
    for (const NoiseRow& row : rows) {
        out += std::to_string(row.adc_bits) + ',' + format_double(row.noise_std) + ',' +
               format_double(row.mean_accuracy) + ',' + format_double(row.std_accuracy) + ',' +
               std::to_string(row.seed_count) + '\n';
    }
    return out;
}

std::string cost_comparison_json(const CostComparison& cmp,
                                 const std::vector<CostReport>& layers) {
    json j = comparison_to_json(cmp);
    json arr = json::array();
    for (const CostReport& r : layers) arr.push_back(report_to_json(r));
    j["layers"] = arr;
    return j.dump(2) + "\n";
}

std::string cost_comparison_csv(const CostComparison& cmp, const std::vector<CostReport>& layers) {
    std::string out =
        "layer,psums,nonzero_psums,blocks,adds,buffer_bits,sparsity,energy_crossbar_pj,"
        "energy_adc_pj,energy_buffer_pj,energy_transfer_pj,energy_accumulation_pj,"
        "energy_codec_pj,energy_total_pj,latency_total_ns\n";
    auto emit = [&out](const CostReport& r) {
        out += r.name + ',' + std::to_string(r.psum_total) + ',' +
               std::to_string(r.nonzero_psums) + ',' + std::to_string(r.blocks) + ',' +
               std::to_string(r.adds) + ',' + std::to_string(r.buffer_bits) + ',' +
               format_double(r.sparsity) + ',' + format_double(r.energy_pj.crossbar) + ',' +
               format_double(r.energy_pj.adc) + ',' + format_double(r.energy_pj.buffer) + ',' +
               format_double(r.energy_pj.transfer) + ',' +
               format_double(r.energy_pj.accumulation) + ',' + format_double(r.energy_pj.codec) +
               ',' + format_double(r.energy_pj.total()) + ',' +
               format_double(r.latency_ns.total()) + '\n';
    };
    for (const CostReport& r : layers) emit(r);
    emit(cmp.dendritic);
    CostReport base = cmp.baseline;
    base.name = "baseline";
    emit(base);
    return out;
}

std::string train_curve_json(const TrainResult& result) {
    json curve = json::array();
    for (const EpochStats& e : result.curve) {
        curve.push_back({{"epoch", e.epoch}, {"loss", e.loss}, {"accuracy", e.accuracy}});
    }
    json j;
    j["final_accuracy"] = result.final_accuracy;
    j["epochs"] = result.curve.size();
    j["curve"] = curve;
    return j.dump(2) + "\n";
}

std::string train_curve_csv(const TrainResult& result) {
    std::string out = "epoch,loss,accuracy\n";
    for (const EpochStats& e : result.curve) {
        out += std::to_string(e.epoch) + ',' + format_double(e.loss) + ',' +
               format_double(e.accuracy) + '\n';
    }
    return out;
}

std::string partition_report_json(const std::vector<PartitionRow>& rows) {
    json arr = json::array();
    for (const PartitionRow& row : rows) {
        arr.push_back({{"crossbar_n", row.crossbar_n},
                       {"layer", row.layer},
                       {"kind", row.kind},
                       {"d", row.d},
                       {"s_count", row.s_count},
                       {"pad_rows", row.pad_rows},
                       {"col_tiles", row.col_tiles},
                       {"psums_per_sample", row.psums_per_sample},
                       {"psums_unpartitioned", row.psums_unpartitioned}});
    }
    json j;
    j["rows"] = arr;
    return j.dump(2) + "\n";
}

std::string partition_report_csv(const std::vector<PartitionRow>& rows) {
    std::string out =
        "crossbar_n,layer,kind,d,s_count,pad_rows,col_tiles,psums_per_sample,"
        "psums_unpartitioned\n";
    for (const PartitionRow& row : rows) {
        out += std::to_string(row.crossbar_n) + ',' + row.layer + ',' + row.kind + ',' +
               std::to_string(row.d) + ',' + std::to_string(row.s_count) + ',' +
               std::to_string(row.pad_rows) + ',' + std::to_string(row.col_tiles) + ',' +
               std::to_string(row.psums_per_sample) + ',' +
               std::to_string(row.psums_unpartitioned) + '\n';
    }
    return out;
}

}  // namespace cadc
