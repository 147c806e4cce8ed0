#include "cadc/quant.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "cadc/common.hpp"

namespace cadc {

std::int64_t FixedPointFormat::min_code() const {
    return is_signed ? -(std::int64_t{1} << (bits - 1)) : 0;
}

std::int64_t FixedPointFormat::max_code() const {
    return is_signed ? (std::int64_t{1} << (bits - 1)) - 1 : (std::int64_t{1} << bits) - 1;
}

std::int64_t quantize_input(double x, const FixedPointFormat& fmt) {
    if (fmt.bits < 1 || fmt.bits > 32 || !(fmt.scale > 0.0)) {
        throw std::invalid_argument("invalid fixed point format");
    }
    if (!std::isfinite(x)) {
        throw std::invalid_argument(detail::str("cannot quantize non-finite value ", x));
    }
    const double code = round_half_even(x / fmt.scale);
    const double lo = static_cast<double>(fmt.min_code());
    const double hi = static_cast<double>(fmt.max_code());
    return static_cast<std::int64_t>(std::clamp(code, lo, hi));
}

double dequantize(std::int64_t code, const FixedPointFormat& fmt) {
    return static_cast<double>(code) * fmt.scale;
}

int encode_ternary(double weight, double threshold) {
    if (!(threshold > 0.0)) throw std::invalid_argument("ternary threshold must be > 0");
    if (weight > threshold) return 1;
    if (weight < -threshold) return -1;
    return 0;
}

TernaryQuant ternarize(std::span<const double> weights, double threshold) {
    TernaryQuant q;
    q.threshold = threshold;
    q.codes.resize(weights.size());
    double mag_sum = 0.0;
    std::size_t nonzero = 0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        const int code = encode_ternary(weights[i], threshold);
        q.codes[i] = static_cast<std::int8_t>(code);
        if (code != 0) {
            mag_sum += std::abs(weights[i]);
            ++nonzero;
        }
    }
    q.scale = nonzero > 0 ? mag_sum / static_cast<double>(nonzero) : 1.0;
    return q;
}

double default_ternary_threshold(std::span<const double> weights) {
    if (weights.empty()) throw std::invalid_argument("cannot ternarize an empty weight set");
    double mag_sum = 0.0;
    for (double w : weights) mag_sum += std::abs(w);
    const double t = 0.5 * mag_sum / static_cast<double>(weights.size());
    return t > 0.0 ? t : 1e-12;
}

TernaryMatrix ternarize_columns(std::size_t rows, std::size_t cols,
                                std::span<const double> weights) {
    if (rows == 0 || cols == 0 || weights.size() != rows * cols) {
        throw std::invalid_argument("ternarize_columns: dimension mismatch");
    }
    TernaryMatrix m;
    m.rows = rows;
    m.cols = cols;
    m.codes.resize(rows * cols);
    m.scales.resize(cols);
    std::vector<double> col(rows);
    for (std::size_t c = 0; c < cols; ++c) {
        for (std::size_t r = 0; r < rows; ++r) col[r] = weights[r * cols + c];
        const TernaryQuant q = ternarize(col, default_ternary_threshold(col));
        for (std::size_t r = 0; r < rows; ++r) m.codes[r * cols + c] = q.codes[r];
        m.scales[c] = q.scale;
    }
    return m;
}

namespace {

double ternary_l2_error(std::span<const double> weights, const TernaryQuant& q) {
    double err = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        const double d = weights[i] - q.scale * q.codes[i];
        err += d * d;
    }
    return err;
}

}  // namespace

ThresholdScan scan_ternary_threshold(std::span<const double> weights, int candidates) {
    if (weights.empty()) throw std::invalid_argument("cannot ternarize an empty weight set");
    if (candidates < 1) throw std::invalid_argument("candidate count must be >= 1");
    double max_mag = 0.0;
    for (double w : weights) max_mag = std::max(max_mag, std::abs(w));
    if (max_mag == 0.0) max_mag = 1.0;

    ThresholdScan best;
    best.l2_error = std::numeric_limits<double>::infinity();
    for (int c = 0; c < candidates; ++c) {
        const double t = max_mag * (c + 0.5) / candidates;
        const TernaryQuant q = ternarize(weights, t);
        const double err = ternary_l2_error(weights, q);
        if (err < best.l2_error) {
            best = {t, q.scale, err};
        }
    }
    return best;
}

double NoiseStream::error_at(std::uint64_t index) const {
    const std::uint64_t base = splitmix64(model_.seed ^ splitmix64(index + 1));
    const double u1 = word_to_unit(splitmix64(base));
    const double u2 = word_to_unit(splitmix64(base ^ 0x9e3779b97f4a7c15ULL));
    return model_.mean + model_.std * normal_from_units(u1, u2);
}

std::int64_t NoiseStream::apply(std::int64_t code, std::int64_t min_code, std::int64_t max_code) {
    return apply_at(counter_++, code, min_code, max_code);
}

std::int64_t NoiseStream::apply_at(std::uint64_t index, std::int64_t code, std::int64_t min_code,
                                   std::int64_t max_code) const {
    const double noisy = static_cast<double>(code) + error_at(index);
    const double rounded = std::nearbyint(noisy);
    const double lo = static_cast<double>(min_code);
    const double hi = static_cast<double>(max_code);
    return static_cast<std::int64_t>(std::clamp(rounded, lo, hi));
}

void AdcModel::validate() const {
    if (resolution_bits < 1 || resolution_bits > 5) {
        throw std::invalid_argument(detail::str("ADC resolution must be in [1,5] bits, got ",
                                                resolution_bits));
    }
    if (!(full_scale > 0.0)) throw std::invalid_argument("ADC full_scale must be > 0");
}

std::int64_t AdcModel::min_code() const {
    return is_signed() ? -(std::int64_t{1} << (resolution_bits - 1)) : 0;
}

std::int64_t AdcModel::max_code() const {
    return is_signed() ? (std::int64_t{1} << (resolution_bits - 1)) - 1
                       : (std::int64_t{1} << resolution_bits) - 1;
}

double AdcModel::lsb() const {
    return full_scale / static_cast<double>((std::int64_t{1} << resolution_bits) - 1);
}

std::int64_t adc_convert(const AdcModel& model, double analog) {
    model.validate();
    const double v = apply_f(model.fn, analog);
    if (!model.is_signed() && analog <= 0.0) return 0;
    const double code = round_half_even(v / model.lsb());
    const double lo = static_cast<double>(model.min_code());
    const double hi = static_cast<double>(model.max_code());
    return static_cast<std::int64_t>(std::clamp(code, lo, hi));
}

double adc_dequant(const AdcModel& model, std::int64_t code) {
    return static_cast<double>(code) * model.lsb();
}

std::int64_t adc_convert_noisy(const AdcModel& model, double analog, const NoiseStream& stream,
                               std::uint64_t index) {
    const std::int64_t code = adc_convert(model, analog);
    return stream.apply_at(index, code, model.min_code(), model.max_code());
}

double mac_analog(std::span<const std::int8_t> weights, std::span<const std::int64_t> input_codes,
                  double input_scale) {
    if (weights.size() != input_codes.size()) {
        throw std::invalid_argument(detail::str("mac_analog dim mismatch: ", weights.size(),
                                                " weights vs ", input_codes.size(), " inputs"));
    }
    std::int64_t acc = 0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        acc += static_cast<std::int64_t>(weights[i]) * input_codes[i];
    }
    return static_cast<double>(acc) * input_scale;
}

}  // namespace cadc
