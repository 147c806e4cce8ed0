// cadc — experiment harness CLI. Every subcommand reads one experiment config
// file; --seed/--out-dir/--format override the corresponding config values.
// Errors leave a machine-readable JSON object on stderr and a nonzero exit.
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "cadc/model.hpp"
#include "cadc/netspec.hpp"
#include "cadc/runner.hpp"
#include "cadc/train.hpp"

namespace {

using nlohmann::json;

struct CommonArgs {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out_dir;
    std::string format = "both";  // json | csv | both
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config, "experiment config JSON file")->required();
    cmd->add_option("--seed", args.seed, "override the config seed");
    cmd->add_option("--out-dir", args.out_dir, "override the config output directory");
    cmd->add_option("--format", args.format, "report formats to write")
        ->check(CLI::IsMember({"json", "csv", "both"}));
}

cadc::ExperimentConfig load_config(const CommonArgs& args) {
    auto cfg = cadc::ExperimentConfig::from_file(args.config);
    if (args.seed) {
        cfg.seed = *args.seed;
        cfg.train.seed = *args.seed;
    }
    if (!args.out_dir.empty()) cfg.out_dir = args.out_dir;
    return cfg;
}

cadc::NetSpec load_net(const cadc::ExperimentConfig& cfg) {
    if (cfg.netspec_path.empty()) {
        throw std::invalid_argument("config key 'netspec' is required for this command");
    }
    return cadc::NetSpec::from_file(cfg.netspec_path);
}

cadc::Model load_model(const cadc::NetSpec& net, const cadc::ExperimentConfig& cfg) {
    if (!cfg.weights_path.empty()) {
        return cadc::Model::from_archive(net, cadc::WeightArchive::load(cfg.weights_path));
    }
    return cadc::Model::init(net, cfg.seed);
}

class Emitter {
public:
    Emitter(const std::string& dir, const std::string& format)
        : dir_(dir), json_on_(format != "csv"), csv_on_(format != "json") {
        std::filesystem::create_directories(dir_);
    }

    void json_file(const std::string& name, const std::string& text) {
        if (json_on_) write(name, text);
    }
    void csv_file(const std::string& name, const std::string& text) {
        if (csv_on_) write(name, text);
    }
    void binary_file(const std::string& name) { written_.push_back((dir_ / name).string()); }

    // One status line on stdout; extra headline fields come from the caller.
    void finish(const std::string& command, json headline) {
        headline["command"] = command;
        headline["outputs"] = written_;
        std::cout << headline.dump() << "\n";
    }

    std::filesystem::path path(const std::string& name) const { return dir_ / name; }

private:
    void write(const std::string& name, const std::string& text) {
        const std::string p = (dir_ / name).string();
        cadc::write_text_file(p, text);
        written_.push_back(p);
    }

    std::filesystem::path dir_;
    bool json_on_;
    bool csv_on_;
    std::vector<std::string> written_;
};

void run_partition_report(const CommonArgs& args) {
    const auto cfg = load_config(args);
    const auto net = load_net(cfg);
    const auto rows = cadc::partition_report(net, cfg.crossbar_sizes, cfg.input_bit_serial);
    Emitter out(cfg.out_dir, args.format);
    out.json_file("partition_report.json", cadc::partition_report_json(rows));
    out.csv_file("partition_report.csv", cadc::partition_report_csv(rows));
    out.finish("partition-report", {{"rows", rows.size()}});
}

void run_infer(const CommonArgs& args) {
    const auto cfg = load_config(args);
    const auto net = load_net(cfg);
    const auto model = load_model(net, cfg);
    const auto data = cadc::make_dataset(cfg);
    const auto params = cadc::load_cost_params(cfg);
    const auto result = cadc::run_inference(model, data, cfg, params);
    Emitter out(cfg.out_dir, args.format);
    out.json_file("infer.json", cadc::inference_json(result));
    out.csv_file("infer_layers.csv", cadc::inference_layers_csv(result));
    out.finish("infer", {{"accuracy", result.accuracy}, {"samples", data.size()}});
}

void run_sweep(const CommonArgs& args) {
    const auto cfg = load_config(args);
    const auto net = load_net(cfg);
    const auto model = load_model(net, cfg);
    const auto data = cadc::make_dataset(cfg);
    const auto params = cadc::load_cost_params(cfg);
    const auto result = cadc::sweep_crossbars(model, data, cfg, params);
    Emitter out(cfg.out_dir, args.format);
    out.json_file("sweep.json", cadc::sweep_json(result));
    out.csv_file("sweep.csv", cadc::sweep_csv(result));
    out.csv_file("sweep_layers.csv", cadc::sweep_layers_csv(result));
    out.finish("sweep", {{"rows", result.rows.size()}});
}

void run_train_toy(const CommonArgs& args) {
    const auto cfg = load_config(args);
    const auto net = load_net(cfg);
    const auto data = cadc::make_dataset(cfg);
    const auto result = cadc::train_toy(net, data, cfg.train);
    Emitter out(cfg.out_dir, args.format);
    result.model.to_archive().save(out.path("weights.bin").string());
    out.binary_file("weights.bin");
    out.json_file("train_curve.json", cadc::train_curve_json(result));
    out.csv_file("train_curve.csv", cadc::train_curve_csv(result));
    out.finish("train-toy", {{"final_accuracy", result.final_accuracy},
                             {"epochs", result.curve.size()}});
}

void run_noise_sweep(const CommonArgs& args) {
    const auto cfg = load_config(args);
    const auto net = load_net(cfg);
    const auto model = load_model(net, cfg);
    const auto data = cadc::make_dataset(cfg);
    const auto rows = cadc::noise_sweep(model, data, cfg);
    Emitter out(cfg.out_dir, args.format);
    out.json_file("noise_sweep.json", cadc::noise_sweep_json(rows));
    out.csv_file("noise_sweep.csv", cadc::noise_sweep_csv(rows));
    out.finish("noise-sweep", {{"rows", rows.size()}});
}

void run_cost_report(const CommonArgs& args, const std::optional<double>& sparsity,
                     const std::optional<bool>& codec) {
    auto cfg = load_config(args);
    if (sparsity) cfg.cost_sparsity = *sparsity;
    if (codec) cfg.codec = *codec;
    cfg.validate();
    const auto net = load_net(cfg);
    const auto params = cadc::load_cost_params(cfg);
    const auto inputs = cadc::cost_inputs_for(net, cfg.crossbar_sizes.front(), cfg.cost_sparsity);
    const auto cmp = cadc::compare_cost(inputs, cfg.codec, params);
    std::vector<cadc::CostReport> per_layer;
    cadc::network_cost(inputs, cfg.codec, params, &per_layer);
    Emitter out(cfg.out_dir, args.format);
    out.json_file("cost_report.json", cadc::cost_comparison_json(cmp, per_layer));
    out.csv_file("cost_report.csv", cadc::cost_comparison_csv(cmp, per_layer));
    out.finish("cost-report",
               {{"accumulation_energy_reduction_pct", cmp.accumulation_energy_reduction_pct},
                {"buffer_transfer_energy_reduction_pct",
                 cmp.buffer_transfer_energy_reduction_pct}});
}

int fail(const std::string& type, const std::string& message, int code,
         std::optional<int> epoch = std::nullopt) {
    json err;
    err["error"]["type"] = type;
    err["error"]["message"] = message;
    if (epoch) err["error"]["epoch"] = *epoch;
    std::cerr << err.dump() << "\n";
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"crossbar dendritic convolution simulator"};
    app.require_subcommand(1);

    CommonArgs args;
    std::optional<double> cost_sparsity;
    std::optional<bool> cost_codec;

    auto* partition_cmd =
        app.add_subcommand("partition-report", "kernel partition geometry per crossbar size");
    add_common(partition_cmd, args);
    partition_cmd->callback([&] { run_partition_report(args); });

    auto* infer_cmd = app.add_subcommand("infer", "single-configuration inference with reports");
    add_common(infer_cmd, args);
    infer_cmd->callback([&] { run_infer(args); });

    auto* sweep_cmd = app.add_subcommand("sweep", "crossbar-size x dendrite-fn accuracy sweep");
    add_common(sweep_cmd, args);
    sweep_cmd->callback([&] { run_sweep(args); });

    auto* train_cmd = app.add_subcommand("train-toy", "train a toy net, writing weights + curve");
    add_common(train_cmd, args);
    train_cmd->callback([&] { run_train_toy(args); });

    auto* noise_cmd = app.add_subcommand("noise-sweep", "accuracy vs ADC noise and resolution");
    add_common(noise_cmd, args);
    noise_cmd->callback([&] { run_noise_sweep(args); });

    auto* cost_cmd = app.add_subcommand("cost-report", "energy/latency comparison report");
    add_common(cost_cmd, args);
    cost_cmd->add_option("--sparsity", cost_sparsity, "uniform psum sparsity override");
    cost_cmd->add_flag("--codec,!--no-codec", cost_codec, "toggle the psum codec");
    cost_cmd->callback([&] { run_cost_report(args, cost_sparsity, cost_codec); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        return fail("usage", e.what(), e.get_exit_code());
    } catch (const cadc::TrainDivergenceError& e) {
        return fail("divergence", e.what(), 3, e.epoch);
    } catch (const std::invalid_argument& e) {
        return fail("invalid_argument", e.what(), 4);
    } catch (const std::exception& e) {
        return fail("runtime_error", e.what(), 5);
    }
    return 0;
}
