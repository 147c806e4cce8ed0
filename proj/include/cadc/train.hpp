// train.hpp — mini-batch SGD on toy networks with gradients flowing through
// the dendritic accumulation (or plain accumulation in vconv mode).
#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "cadc/dataset.hpp"
#include "cadc/model.hpp"

namespace cadc {

struct TrainConfig {
    int epochs = 100;
    std::size_t batch_size = 32;
    double lr = 0.05;
    double momentum = 0.0;
    std::uint64_t seed = 1;
    std::size_t crossbar_n = 4;  // small enough that toy kernels really split
    bool vconv = false;
    bool ternary = false;      // straight-through ternary weights in the forward pass
    int ternary_warmup = 0;    // float epochs before the ternary snap engages
    std::optional<DendriteKind> fn_override;
};

struct EpochStats {
    int epoch = 0;
    double loss = 0.0;      // mean batch loss over the epoch
    double accuracy = 0.0;  // full-train-set accuracy after the epoch
};

struct TrainResult {
    Model model;
    std::vector<EpochStats> curve;
    double final_accuracy = 0.0;
};

class TrainDivergenceError : public std::runtime_error {
public:
    TrainDivergenceError(int epoch_in, const std::string& what)
        : std::runtime_error(what), epoch(epoch_in) {}
    int epoch;
};

// Softmax cross-entropy; returns loss and writes softmax(z) - onehot.
double softmax_ce(const std::vector<double>& logits, int label, std::vector<double>* grad);

TrainResult train_toy(const NetSpec& net, const Dataset& data, const TrainConfig& cfg);

}  // namespace cadc
