// quant.hpp — hardware-fidelity numeric path: ternary weight encoding,
// multi-bit input quantization, the in-memory ADC whose transfer function
// embeds the dendritic f(), and Gaussian code-error injection.
//
// Rounding is ties-to-even everywhere. ADC codes are unsigned for every
// clamping f() (code 0 is reserved for analog <= 0); the Identity fn selects
// the signed variant used by vanilla-accumulation comparison runs, with codes
// in [-2^(n-1), 2^(n-1)-1] at the same LSB.
#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "cadc/dendrite.hpp"

namespace cadc {

struct FixedPointFormat {
    int bits = 8;
    bool is_signed = true;
    double scale = 1.0;  // value = code * scale

    std::int64_t min_code() const;
    std::int64_t max_code() const;
};

// Round-half-even quantize with saturation. Throws on non-finite input.
std::int64_t quantize_input(double x, const FixedPointFormat& fmt);
double dequantize(std::int64_t code, const FixedPointFormat& fmt);

// -1 if w < -threshold, +1 if w > threshold, else 0.
int encode_ternary(double weight, double threshold);

struct TernaryQuant {
    std::vector<std::int8_t> codes;
    double scale = 1.0;  // dequantized weight = code * scale
    double threshold = 0.0;
};

// Ternarize with the given threshold; scale is the L2-optimal magnitude for
// that assignment (mean |w| over nonzero codes).
TernaryQuant ternarize(std::span<const double> weights, double threshold);

// Default layer threshold: 0.5 * mean(|w|).
double default_ternary_threshold(std::span<const double> weights);

// Column-wise ternary encoding of a row-major rows x cols weight matrix;
// every output column gets its own threshold and magnitude.
struct TernaryMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<std::int8_t> codes;  // row-major rows x cols
    std::vector<double> scales;      // one magnitude per column
};

TernaryMatrix ternarize_columns(std::size_t rows, std::size_t cols,
                                std::span<const double> weights);

// Scan candidate thresholds and return the one minimizing the L2 error of
// scale * ternary vs the original weights.
struct ThresholdScan {
    double threshold = 0.0;
    double scale = 0.0;
    double l2_error = 0.0;
};
ThresholdScan scan_ternary_threshold(std::span<const double> weights, int candidates = 64);

struct NoiseModel {
    double mean = 0.0;  // LSB units
    double std = 0.0;   // LSB units
    std::uint64_t seed = 0;
};

// Deterministic Gaussian error stream. error_at(i) depends only on (seed, i),
// so conversions may be evaluated in any schedule; next() walks a sequential
// counter over the same stream.
class NoiseStream {
public:
    explicit NoiseStream(const NoiseModel& model) : model_(model) {}

    double error_at(std::uint64_t index) const;
    double next() { return error_at(counter_++); }

    // clamp(round(code + e), min, max)
    std::int64_t apply(std::int64_t code, std::int64_t min_code, std::int64_t max_code);
    std::int64_t apply_at(std::uint64_t index, std::int64_t code, std::int64_t min_code,
                          std::int64_t max_code) const;

    const NoiseModel& model() const { return model_; }

private:
    NoiseModel model_;
    std::uint64_t counter_ = 0;
};

struct AdcModel {
    int resolution_bits = 4;
    double full_scale = 1.0;  // analog value mapped to the max code
    DendriteFn fn;
    std::optional<NoiseModel> noise;

    bool is_signed() const { return fn.kind == DendriteKind::Identity; }
    std::int64_t min_code() const;
    std::int64_t max_code() const;
    double lsb() const;  // full_scale / (2^n - 1)

    void validate() const;
};

// code = round_half_even(f(analog) / lsb), clamped to the code range. For any
// clamping fn, analog <= 0 always yields code 0. Noise is not applied here.
std::int64_t adc_convert(const AdcModel& model, double analog);
double adc_dequant(const AdcModel& model, std::int64_t code);

// Clamped noisy conversion: adc_convert then code-domain error injection.
std::int64_t adc_convert_noisy(const AdcModel& model, double analog, const NoiseStream& stream,
                               std::uint64_t index);

// Ideal analog MAC for one crossbar column: sum_i w_i * in_i * input_scale,
// accumulated exactly in integers before scaling.
double mac_analog(std::span<const std::int8_t> weights, std::span<const std::int64_t> input_codes,
                  double input_scale);

}  // namespace cadc
