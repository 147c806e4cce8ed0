// runner.hpp — experiment orchestration: configured inference with cost
// accounting, crossbar-size sweeps, ADC noise sweeps and deterministic
// JSON/CSV report emission. All run functions are pure given (model, data,
// config); report writers sort rows by key so output bytes never depend on
// evaluation order.
#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cadc/cost.hpp"
#include "cadc/dataset.hpp"
#include "cadc/model.hpp"
#include "cadc/train.hpp"

namespace cadc {

struct NoiseConfig {
    bool enabled = false;
    double mean = -0.11;  // LSB units
    double std = 0.56;
};

// One experiment file drives every subcommand; unused sections are ignored.
// JSON keys (see configs/experiment_toy.json):
//   crossbar_sizes [N...], dendrite_fns [name...] (empty → per-layer fns),
//   mode "cadc"|"vconv", quantized bool, codec bool, seed u64,
//   noise {enabled, mean, std}, noise_grid [std...], adc_bits_grid [bits...],
//   seeds [u64...], cost_params path, out_dir path,
//   dataset {kind "digits"|"blobs", samples, seed, noise_std, dim},
//   train {epochs, batch_size, lr, crossbar_n}
struct ExperimentConfig {
    std::string netspec_path;
    std::string weights_path;  // empty → seeded random init
    std::vector<std::size_t> crossbar_sizes{64};
    std::vector<std::string> dendrite_fns;
    bool vconv = false;
    bool quantized = false;
    bool codec = true;
    std::uint64_t seed = 1;
    NoiseConfig noise;
    std::vector<double> noise_grid{0.0, 0.28, 0.56, 1.12};
    std::vector<int> adc_bits_grid{3, 4, 5};
    std::vector<std::uint64_t> seeds{1, 2, 3};
    std::string cost_params_path;
    std::string out_dir = ".";

    std::string dataset_kind = "digits";
    std::size_t dataset_samples = 1000;
    std::uint64_t dataset_seed = 7;
    double dataset_noise_std = 0.15;
    std::size_t dataset_dim = 8;  // blobs only

    double cost_sparsity = 0.0;        // uniform psum sparsity for cost-report
    bool input_bit_serial = false;     // psum counting: one psum per input bit

    TrainConfig train;

    void validate() const;
    static ExperimentConfig from_file(const std::string& path);
    static ExperimentConfig from_json_text(const std::string& text);
};

Dataset make_dataset(const ExperimentConfig& cfg);
CostParams load_cost_params(const ExperimentConfig& cfg);

struct LayerReport {
    std::string name;
    std::string kind;
    std::size_t s_count = 1;
    std::size_t col_tiles = 1;
    std::uint64_t psums_per_sample = 0;
    std::uint64_t psums_total = 0;
    double raw_zero_fraction = 0.0;
    double post_f_zero_fraction = 0.0;  // ADC-code zero fraction on quantized runs
    double compression_ratio = 0.0;
    Shape3 out_shape;
};

struct InferenceResult {
    std::size_t crossbar_n = 0;
    std::string fn_label;
    bool quantized = false;
    std::vector<int> predictions;
    double accuracy = 0.0;
    std::vector<LayerReport> layers;
    CostComparison cost;
};

InferenceResult run_inference(const Model& model, const Dataset& data,
                              const ExperimentConfig& cfg, const CostParams& params);

struct SweepLayerRow {
    std::size_t crossbar_n = 0;
    std::string fn;
    std::string layer;
    std::size_t s_count = 0;
    std::uint64_t psums_per_sample = 0;
};

struct SweepRow {
    std::size_t crossbar_n = 0;
    std::string fn;
    double accuracy = 0.0;
    double sparsity = 0.0;
    double energy_pj = 0.0;
    double accumulation_reduction_pct = 0.0;
    double buffer_transfer_reduction_pct = 0.0;
};

struct SweepResult {
    std::vector<SweepRow> rows;              // sorted by (crossbar_n, fn)
    std::vector<SweepLayerRow> layer_rows;   // sorted by (crossbar_n, fn, layer order)
};

SweepResult sweep_crossbars(const Model& model, const Dataset& data, const ExperimentConfig& cfg,
                            const CostParams& params);

struct QuantRunConfig {
    std::size_t crossbar_n = 64;
    std::optional<DendriteKind> fn_override;
    bool vconv = false;
    std::optional<int> adc_bits_override;
    NoiseConfig noise;
    std::uint64_t seed = 1;
};

struct QuantizedEvalResult {
    double accuracy = 0.0;
    std::vector<int> predictions;
    std::vector<LayerReport> layers;
    // measured per-block nonzero ADC codes, one vector per net layer
    std::vector<std::vector<std::uint32_t>> per_layer_blocks;
};

// The hardware numeric path: quantized inputs, ternary weights, integer psums,
// per-segment ADC with the dendrite fn folded in, optional code noise.
QuantizedEvalResult quantized_eval(const Model& model, const Dataset& data,
                                   const QuantRunConfig& qcfg);

struct NoiseRow {
    int adc_bits = 4;
    double noise_std = 0.0;
    double mean_accuracy = 0.0;
    double std_accuracy = 0.0;
    std::size_t seed_count = 0;
};

struct PartitionRow {
    std::size_t crossbar_n = 0;
    std::string layer;
    std::string kind;
    std::size_t d = 0;  // unrolled rows
    std::size_t s_count = 0;
    std::size_t pad_rows = 0;
    std::size_t col_tiles = 0;
    std::uint64_t psums_per_sample = 0;
    std::uint64_t psums_unpartitioned = 0;
};

// Static partition geometry per (crossbar size, crossbar layer); no weights
// or data needed.
std::vector<PartitionRow> partition_report(const NetSpec& net,
                                           std::span<const std::size_t> crossbar_sizes,
                                           bool input_bit_serial = false);

// LayerCostInput list for a netspec at uniform sparsity (cost-report path;
// output positions are per sample).
std::vector<LayerCostInput> cost_inputs_for(const NetSpec& net, std::size_t crossbar_n,
                                            double sparsity);
std::string partition_report_json(const std::vector<PartitionRow>& rows);
std::string partition_report_csv(const std::vector<PartitionRow>& rows);

// Accuracy vs (adc_bits, noise std) over cfg.seeds; rows sorted by key.
std::vector<NoiseRow> noise_sweep(const Model& model, const Dataset& data,
                                  const ExperimentConfig& cfg);

// Report emission. JSON objects have sorted keys; CSV numbers use the
// shortest round-trip form, so identical runs write identical bytes.
std::string inference_json(const InferenceResult& result);
std::string inference_layers_csv(const InferenceResult& result);
std::string sweep_json(const SweepResult& result);
std::string sweep_csv(const SweepResult& result);
std::string sweep_layers_csv(const SweepResult& result);
std::string noise_sweep_json(const std::vector<NoiseRow>& rows);
std::string noise_sweep_csv(const std::vector<NoiseRow>& rows);
std::string cost_comparison_json(const CostComparison& cmp, const std::vector<CostReport>& layers);
std::string cost_comparison_csv(const CostComparison& cmp, const std::vector<CostReport>& layers);
std::string train_curve_json(const TrainResult& result);
std::string train_curve_csv(const TrainResult& result);

void write_text_file(const std::string& path, const std::string& text);
std::string format_double(double v);  // shortest round-trip

}  // namespace cadc
