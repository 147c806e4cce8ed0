#include "cadc/cost.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "cadc/common.hpp"

namespace cadc {

void CostParams::validate() const {
    const double energies[] = {e_buffer_read_per_bit, e_buffer_write_per_bit, e_transfer_per_bit,
                               e_add,                 e_mac_crossbar_per_op,  e_codec_compress_per_psum,
                               e_codec_skip_check_per_psum};
    for (double e : energies) {
        if (e < 0.0) throw std::invalid_argument("cost parameters must be >= 0");
    }
    for (double e : e_adc_convert_bits) {
        if (e < 0.0) throw std::invalid_argument("cost parameters must be >= 0");
    }
    const double cycles[] = {clock_period_ns,       accumulate_cycles, transfer_cycles_per_word,
                             buffer_cycles_per_word, crossbar_cycles_per_op,
                             adc_cycles_per_convert, codec_cycles_per_psum};
    for (double c : cycles) {
        if (c < 0.0) throw std::invalid_argument("cost parameters must be >= 0");
    }
    if (transfer_word_bits < 1) throw std::invalid_argument("transfer_word_bits must be >= 1");
    if (psum_width_bits < 1 || psum_width_bits > 32) {
        throw std::invalid_argument("psum_width_bits must be in [1,32]");
    }
}

CostParams CostParams::from_json_text(const std::string& text) {
    const nlohmann::json j = nlohmann::json::parse(text);
    CostParams p;
    const auto& e = j.at("energy_pj");
    p.e_buffer_read_per_bit = e.at("buffer_read_per_bit").get<double>();
    p.e_buffer_write_per_bit = e.at("buffer_write_per_bit").get<double>();
    p.e_transfer_per_bit = e.at("transfer_per_bit").get<double>();
    p.e_add = e.at("add").get<double>();
    p.e_mac_crossbar_per_op = e.at("mac_crossbar_per_op").get<double>();
    const auto& adc = e.at("adc_convert_per_resolution");
    if (adc.size() != 5) {
        throw std::invalid_argument("adc_convert_per_resolution must list 5 values (1..5 bits)");
    }
    for (int i = 0; i < 5; ++i) p.e_adc_convert_bits[i] = adc.at(i).get<double>();
    p.e_codec_compress_per_psum = e.at("codec_compress_per_psum").get<double>();
    p.e_codec_skip_check_per_psum = e.at("codec_skip_check_per_psum").get<double>();

    const auto& l = j.at("latency");
    p.clock_period_ns = l.at("clock_period_ns").get<double>();
    p.accumulate_cycles = l.at("accumulate_cycles").get<double>();
    p.transfer_cycles_per_word = l.at("transfer_cycles_per_word").get<double>();
    p.buffer_cycles_per_word = l.at("buffer_cycles_per_word").get<double>();
    p.crossbar_cycles_per_op = l.at("crossbar_cycles_per_op").get<double>();
    p.adc_cycles_per_convert = l.at("adc_cycles_per_convert").get<double>();
    p.codec_cycles_per_psum = l.at("codec_cycles_per_psum").get<double>();
    p.transfer_word_bits = l.at("transfer_word_bits").get<int>();

    p.psum_width_bits = j.at("psum_width_bits").get<int>();
    p.validate();
    return p;
}

CostParams CostParams::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open cost parameter file: " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return from_json_text(text);
}

std::string CostParams::to_json_text() const {
    nlohmann::json j;
    auto& e = j["energy_pj"];
    e["buffer_read_per_bit"] = e_buffer_read_per_bit;
    e["buffer_write_per_bit"] = e_buffer_write_per_bit;
    e["transfer_per_bit"] = e_transfer_per_bit;
    e["add"] = e_add;
    e["mac_crossbar_per_op"] = e_mac_crossbar_per_op;
    e["adc_convert_per_resolution"] = e_adc_convert_bits;
    e["codec_compress_per_psum"] = e_codec_compress_per_psum;
    e["codec_skip_check_per_psum"] = e_codec_skip_check_per_psum;
    auto& l = j["latency"];
    l["clock_period_ns"] = clock_period_ns;
    l["accumulate_cycles"] = accumulate_cycles;
    l["transfer_cycles_per_word"] = transfer_cycles_per_word;
    l["buffer_cycles_per_word"] = buffer_cycles_per_word;
    l["crossbar_cycles_per_op"] = crossbar_cycles_per_op;
    l["adc_cycles_per_convert"] = adc_cycles_per_convert;
    l["codec_cycles_per_psum"] = codec_cycles_per_psum;
    l["transfer_word_bits"] = transfer_word_bits;
    j["psum_width_bits"] = psum_width_bits;
    return j.dump(2);
}

namespace {

struct PsumAccounting {
    std::uint64_t nonzero = 0;
    std::uint64_t adds = 0;
    std::uint64_t bits = 0;
};

CostReport assemble_report(const LayerCostInput& layer, const PsumAccounting& acct,
                           bool codec_enabled, const CostParams& params) {
    params.validate();
    if (layer.adc_bits < 1 || layer.adc_bits > 5) {
        throw std::invalid_argument(detail::str("adc_bits must be in [1,5], got ",
                                                layer.adc_bits));
    }
    const std::uint64_t blocks = layer.output_positions * layer.c_out;
    const std::uint64_t psums = blocks * layer.s_count;

    CostReport r;
    r.name = layer.name;
    r.psum_total = psums;
    r.blocks = blocks;
    r.sparsity = layer.sparsity;
    r.nonzero_psums = acct.nonzero;
    r.adds = acct.adds;
    r.buffer_bits = acct.bits;

    const double p = static_cast<double>(psums);
    const double bits = static_cast<double>(acct.bits);
    const double adds = static_cast<double>(acct.adds);

    r.energy_pj.crossbar = p * params.e_mac_crossbar_per_op;
    r.energy_pj.adc = p * params.e_adc_convert_bits[layer.adc_bits - 1];
    r.energy_pj.buffer = bits * (params.e_buffer_read_per_bit + params.e_buffer_write_per_bit);
    r.energy_pj.transfer = bits * params.e_transfer_per_bit;
    r.energy_pj.accumulation = adds * params.e_add;
    if (codec_enabled) {
        r.codec_compress_energy_pj = p * params.e_codec_compress_per_psum;
        r.codec_skip_energy_pj = p * params.e_codec_skip_check_per_psum;
        r.energy_pj.codec = r.codec_compress_energy_pj + r.codec_skip_energy_pj;
    }

    const double clk = params.clock_period_ns;
    const double words = std::ceil(bits / params.transfer_word_bits);
    r.latency_ns.crossbar = p * params.crossbar_cycles_per_op * clk;
    r.latency_ns.adc = p * params.adc_cycles_per_convert * clk;
    r.latency_ns.buffer = words * params.buffer_cycles_per_word * clk;
    r.latency_ns.transfer = words * params.transfer_cycles_per_word * clk;
    r.latency_ns.accumulation = adds * params.accumulate_cycles * clk;
    if (codec_enabled) {
        r.latency_ns.codec = p * params.codec_cycles_per_psum * clk;
    }
    return r;
}

}  // namespace

CostReport layer_cost(const LayerCostInput& layer, bool codec_enabled, const CostParams& params) {
    if (layer.sparsity < 0.0 || layer.sparsity > 1.0) {
        throw std::invalid_argument(detail::str("sparsity must be in [0,1], got ",
                                                layer.sparsity));
    }
    if (layer.output_positions == 0 || layer.c_out == 0 || layer.s_count == 0) {
        throw std::invalid_argument("layer dimensions must be positive");
    }
    const std::uint64_t blocks = layer.output_positions * layer.c_out;
    const std::uint64_t psums = blocks * layer.s_count;
    const std::uint64_t width = static_cast<std::uint64_t>(params.psum_width_bits);

    PsumAccounting acct;
    acct.nonzero = static_cast<std::uint64_t>(
        std::llround((1.0 - layer.sparsity) * static_cast<double>(psums)));
    if (codec_enabled) {
        // Even integer spread of nonzeros over blocks: adds collapse to
        // max(nonzero - blocks, 0); bits are exact regardless of the spread.
        acct.adds = acct.nonzero > blocks ? acct.nonzero - blocks : 0;
        acct.bits = blocks * layer.s_count + width * acct.nonzero;
    } else {
        acct.adds = psums - blocks;
        acct.bits = psums * width;
    }
    return assemble_report(layer, acct, codec_enabled, params);
}

CostReport layer_cost_exact(const LayerCostInput& layer,
                            std::span<const std::uint32_t> per_block_nonzeros, bool codec_enabled,
                            const CostParams& params) {
    const std::uint64_t blocks = layer.output_positions * layer.c_out;
    if (per_block_nonzeros.size() != blocks) {
        throw std::invalid_argument(detail::str("expected ", blocks, " per-block counts, got ",
                                                per_block_nonzeros.size()));
    }
    const std::uint64_t width = static_cast<std::uint64_t>(params.psum_width_bits);

    PsumAccounting acct;
    for (std::uint32_t nnz : per_block_nonzeros) {
        if (nnz > layer.s_count) {
            throw std::invalid_argument("per-block nonzero count exceeds segment count");
        }
        acct.nonzero += nnz;
        if (codec_enabled) {
            acct.adds += nnz > 0 ? nnz - 1 : 0;
            acct.bits += layer.s_count + width * nnz;
        }
    }
    if (!codec_enabled) {
        acct.adds = blocks * (layer.s_count - 1);
        acct.bits = blocks * layer.s_count * width;
    }
    return assemble_report(layer, acct, codec_enabled, params);
}

namespace {

void add_components(ComponentCosts& into, const ComponentCosts& from) {
    into.crossbar += from.crossbar;
    into.adc += from.adc;
    into.buffer += from.buffer;
    into.transfer += from.transfer;
    into.accumulation += from.accumulation;
    into.codec += from.codec;
}

}  // namespace

namespace {

void accumulate_total(CostReport& total, CostReport r, std::vector<CostReport>* per_layer);

}  // namespace

CostReport network_cost(std::span<const LayerCostInput> layers, bool codec_enabled,
                        const CostParams& params, std::vector<CostReport>* per_layer) {
    CostReport total;
    total.name = "network";
    for (const LayerCostInput& layer : layers) {
        accumulate_total(total, layer_cost(layer, codec_enabled, params), per_layer);
    }
    if (total.psum_total > 0) {
        total.sparsity = 1.0 - static_cast<double>(total.nonzero_psums) /
                                   static_cast<double>(total.psum_total);
    }
    return total;
}

namespace {

void accumulate_total(CostReport& total, CostReport r, std::vector<CostReport>* per_layer) {
    add_components(total.energy_pj, r.energy_pj);
    add_components(total.latency_ns, r.latency_ns);
    total.codec_compress_energy_pj += r.codec_compress_energy_pj;
    total.codec_skip_energy_pj += r.codec_skip_energy_pj;
    total.psum_total += r.psum_total;
    total.nonzero_psums += r.nonzero_psums;
    total.blocks += r.blocks;
    total.buffer_bits += r.buffer_bits;
    total.adds += r.adds;
    if (per_layer) per_layer->push_back(std::move(r));
}

void fill_reductions(CostComparison& cmp) {
    const auto reduction = [](double base, double with) {
        return base > 0.0 ? 100.0 * (base - with) / base : 0.0;
    };
    cmp.accumulation_energy_reduction_pct =
        reduction(cmp.baseline.energy_pj.accumulation,
                  cmp.dendritic.energy_pj.accumulation + cmp.dendritic.codec_skip_energy_pj);
    cmp.buffer_transfer_energy_reduction_pct = reduction(
        cmp.baseline.energy_pj.buffer + cmp.baseline.energy_pj.transfer,
        cmp.dendritic.energy_pj.buffer + cmp.dendritic.energy_pj.transfer +
            cmp.dendritic.codec_compress_energy_pj);
    cmp.total_energy_reduction_pct =
        reduction(cmp.baseline.energy_pj.total(), cmp.dendritic.energy_pj.total());
    cmp.total_latency_reduction_pct =
        reduction(cmp.baseline.latency_ns.total(), cmp.dendritic.latency_ns.total());
}

}  // namespace

CostComparison compare_cost(std::span<const LayerCostInput> layers, bool codec_enabled,
                            const CostParams& params) {
    CostComparison cmp;
    cmp.dendritic = network_cost(layers, codec_enabled, params);

    std::vector<LayerCostInput> dense(layers.begin(), layers.end());
    for (LayerCostInput& layer : dense) layer.sparsity = 0.0;
    cmp.baseline = network_cost(dense, /*codec_enabled=*/false, params);

    fill_reductions(cmp);
    return cmp;
}

CostComparison compare_cost_exact(std::span<const LayerCostInput> layers,
                                  std::span<const std::vector<std::uint32_t>> per_layer_blocks,
                                  bool codec_enabled, const CostParams& params,
                                  std::vector<CostReport>* per_layer) {
    if (per_layer_blocks.size() != layers.size()) {
        throw std::invalid_argument("one per-block count vector required per layer");
    }
    CostComparison cmp;
    cmp.dendritic.name = "network";
    for (std::size_t i = 0; i < layers.size(); ++i) {
        accumulate_total(cmp.dendritic,
                         layer_cost_exact(layers[i], per_layer_blocks[i], codec_enabled, params),
                         per_layer);
    }
    if (cmp.dendritic.psum_total > 0) {
        cmp.dendritic.sparsity = 1.0 - static_cast<double>(cmp.dendritic.nonzero_psums) /
                                           static_cast<double>(cmp.dendritic.psum_total);
    }

    std::vector<LayerCostInput> dense(layers.begin(), layers.end());
    for (LayerCostInput& layer : dense) layer.sparsity = 0.0;
    cmp.baseline = network_cost(dense, /*codec_enabled=*/false, params);

    fill_reductions(cmp);
    return cmp;
}

}  // namespace cadc
