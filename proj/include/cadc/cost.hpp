// cost.hpp — parameterized energy/latency accounting for crossbar MACs, ADC
// conversions, psum buffering/transfer, accumulation and codec overhead.
//
// This is accounting, not physics: every per-op cost comes from a parameter
// file. Reduction percentages compare a dendritic run (sparse psums, codec on)
// against the vanilla baseline (dense psums, codec off). When reporting
// reductions, codec overhead is attributed to the component it serves:
// skip-check energy counts against accumulation, compression energy against
// buffer+transfer.
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace cadc {

struct CostParams {
    // energy, pJ
    double e_buffer_read_per_bit = 0.004;
    double e_buffer_write_per_bit = 0.004;
    double e_transfer_per_bit = 0.012;
    double e_add = 0.03;
    double e_mac_crossbar_per_op = 0.6;       // one segment-column activation
    double e_adc_convert_bits[5] = {0.05, 0.09, 0.17, 0.33, 0.65};  // index bits-1
    double e_codec_compress_per_psum = 0.0;
    double e_codec_skip_check_per_psum = 0.0;

    // latency, cycles at clock_period_ns
    double clock_period_ns = 5.0;
    double accumulate_cycles = 1.0;
    double transfer_cycles_per_word = 1.0;
    double buffer_cycles_per_word = 1.0;
    double crossbar_cycles_per_op = 8.0;
    double adc_cycles_per_convert = 16.0;
    double codec_cycles_per_psum = 0.25;
    int transfer_word_bits = 32;

    int psum_width_bits = 8;

    void validate() const;
    static CostParams from_file(const std::string& path);
    static CostParams from_json_text(const std::string& text);
    std::string to_json_text() const;
};

struct ComponentCosts {
    double crossbar = 0.0;
    double adc = 0.0;
    double buffer = 0.0;
    double transfer = 0.0;
    double accumulation = 0.0;
    double codec = 0.0;

    double total() const {
        return crossbar + adc + buffer + transfer + accumulation + codec;
    }
};

struct CostReport {
    std::string name;
    ComponentCosts energy_pj;
    ComponentCosts latency_ns;
    double codec_compress_energy_pj = 0.0;  // compress share of energy_pj.codec
    double codec_skip_energy_pj = 0.0;      // skip-check share

    std::uint64_t psum_total = 0;
    std::uint64_t nonzero_psums = 0;
    std::uint64_t blocks = 0;
    std::uint64_t buffer_bits = 0;
    std::uint64_t adds = 0;
    double sparsity = 0.0;
};

// Per-layer accounting inputs. psums = output_positions * c_out * s_count;
// one block of s_count psums per (output position, channel).
struct LayerCostInput {
    std::string name;
    std::uint64_t output_positions = 1;
    std::uint64_t c_out = 1;
    std::uint64_t s_count = 1;
    double sparsity = 0.0;  // post-f exact-zero fraction
    int adc_bits = 4;
};

// Parametric cost: nonzeros = round((1-sparsity) * psums), spread across
// blocks as evenly as integers allow.
CostReport layer_cost(const LayerCostInput& layer, bool codec_enabled, const CostParams& params);

// Exact cost from measured per-block nonzero counts (e.g. from real psum
// tensors); block count must equal output_positions * c_out.
CostReport layer_cost_exact(const LayerCostInput& layer,
                            std::span<const std::uint32_t> per_block_nonzeros, bool codec_enabled,
                            const CostParams& params);

CostReport network_cost(std::span<const LayerCostInput> layers, bool codec_enabled,
                        const CostParams& params, std::vector<CostReport>* per_layer = nullptr);

struct CostComparison {
    CostReport dendritic;  // given sparsity, codec per flag
    CostReport baseline;   // dense psums, codec off
    double accumulation_energy_reduction_pct = 0.0;
    double buffer_transfer_energy_reduction_pct = 0.0;
    double total_energy_reduction_pct = 0.0;
    double total_latency_reduction_pct = 0.0;
};

CostComparison compare_cost(std::span<const LayerCostInput> layers, bool codec_enabled,
                            const CostParams& params);

// Same comparison but with measured per-block nonzero counts per layer
// (layer_cost_exact accounting) instead of the even parametric spread.
CostComparison compare_cost_exact(std::span<const LayerCostInput> layers,
                                  std::span<const std::vector<std::uint32_t>> per_layer_blocks,
                                  bool codec_enabled, const CostParams& params,
                                  std::vector<CostReport>* per_layer = nullptr);

}  // namespace cadc
