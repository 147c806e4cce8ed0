#include <algorithm>
#include <cfenv>
#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "cadc/quant.hpp"
#include "doctest.h"

using namespace cadc;

namespace {

// Independent scalar ADC: same contract, different rounding implementation
// (nearbyint under the default to-nearest-even mode instead of the remainder
// identity used by the library).
std::int64_t oracle_adc(double analog, const DendriteFn& fn, int bits, double full_scale) {
    const double lsb = full_scale / static_cast<double>((1 << bits) - 1);
    std::int64_t lo, hi;
    if (fn.kind == DendriteKind::Identity) {
        lo = -(std::int64_t{1} << (bits - 1));
        hi = (std::int64_t{1} << (bits - 1)) - 1;
    } else {
        if (analog <= 0.0) return 0;
        lo = 0;
        hi = (std::int64_t{1} << bits) - 1;
    }
    const double code = std::nearbyint(apply_f(fn, analog) / lsb);
    return std::clamp(static_cast<std::int64_t>(code), lo, hi);
}

double sample_mean(const std::vector<double>& xs) {
    double acc = 0.0;
    for (double x : xs) acc += x;
    return acc / static_cast<double>(xs.size());
}

double sample_std(const std::vector<double>& xs) {
    const double m = sample_mean(xs);
    double acc = 0.0;
    for (double x : xs) acc += (x - m) * (x - m);
    return std::sqrt(acc / static_cast<double>(xs.size() - 1));
}

}  // namespace

TEST_CASE("fixed point code ranges") {
    FixedPointFormat s8{8, true, 0.5};
    CHECK(s8.min_code() == -128);
    CHECK(s8.max_code() == 127);
    FixedPointFormat u4{4, false, 1.0};
    CHECK(u4.min_code() == 0);
    CHECK(u4.max_code() == 15);
}

TEST_CASE("input quantization rounds half to even and saturates") {
    FixedPointFormat fmt{8, true, 0.25};
    CHECK(quantize_input(0.0, fmt) == 0);
    CHECK(quantize_input(0.125, fmt) == 0);   // 0.5 LSB tie -> even 0
    CHECK(quantize_input(0.375, fmt) == 2);   // 1.5 LSB tie -> even 2
    CHECK(quantize_input(-0.125, fmt) == 0);
    CHECK(quantize_input(-0.375, fmt) == -2);
    CHECK(quantize_input(1.0, fmt) == 4);
    CHECK(quantize_input(1000.0, fmt) == 127);
    CHECK(quantize_input(-1000.0, fmt) == -128);

    CHECK_THROWS_AS(quantize_input(std::numeric_limits<double>::quiet_NaN(), fmt),
                    std::invalid_argument);
    CHECK_THROWS_AS(quantize_input(std::numeric_limits<double>::infinity(), fmt),
                    std::invalid_argument);
    FixedPointFormat bad = fmt;
    bad.scale = 0.0;
    CHECK_THROWS_AS(quantize_input(1.0, bad), std::invalid_argument);
}

TEST_CASE("quantize/dequantize round-trip error is bounded by half an LSB") {
    std::mt19937_64 gen(139);
    FixedPointFormat fmt{6, true, 0.03125};
    const double lo = static_cast<double>(fmt.min_code()) * fmt.scale;
    const double hi = static_cast<double>(fmt.max_code()) * fmt.scale;
    std::uniform_real_distribution<double> dist(lo, hi);
    for (int i = 0; i < 2000; ++i) {
        const double x = dist(gen);
        const std::int64_t code = quantize_input(x, fmt);
        const double back = dequantize(code, fmt);
        CHECK(std::abs(back - x) <= fmt.scale / 2.0 + 1e-15);
        // requantizing a representable value is exact
        CHECK(quantize_input(back, fmt) == code);
    }
}

TEST_CASE("ternary encoding") {
    CHECK(encode_ternary(0.6, 0.5) == 1);
    CHECK(encode_ternary(-0.6, 0.5) == -1);
    CHECK(encode_ternary(0.4, 0.5) == 0);
    CHECK(encode_ternary(0.5, 0.5) == 0);  // boundary stays zero
    CHECK(encode_ternary(-0.5, 0.5) == 0);
    CHECK_THROWS_AS(encode_ternary(0.1, 0.0), std::invalid_argument);

    const std::vector<double> w = {1.0, -1.0, 0.1};
    TernaryQuant q = ternarize(w, 0.5);
    CHECK(q.codes == std::vector<std::int8_t>{1, -1, 0});
    CHECK(q.scale == doctest::Approx(1.0));
    CHECK(default_ternary_threshold(w) == doctest::Approx(0.35));

    // scale is the mean magnitude over surviving weights only
    const std::vector<double> w2 = {2.0, -4.0, 0.01, 0.02};
    TernaryQuant q2 = ternarize(w2, 1.0);
    CHECK(q2.scale == doctest::Approx(3.0));

    TernaryQuant all_zero = ternarize(std::vector<double>{0.1, -0.2}, 0.5);
    CHECK(all_zero.codes == std::vector<std::int8_t>{0, 0});
    CHECK(all_zero.scale == 1.0);
}

TEST_CASE("threshold scan beats the default threshold on L2 error") {
    std::mt19937_64 gen(149);
    std::normal_distribution<double> dist(0.0, 1.0);
    for (int trial = 0; trial < 30; ++trial) {
        std::vector<double> w(64);
        for (double& v : w) v = dist(gen);

        const ThresholdScan scan = scan_ternary_threshold(w, 64);
        auto l2_at = [&](double threshold) {
            const TernaryQuant q = ternarize(w, threshold);
            double err = 0.0;
            for (std::size_t i = 0; i < w.size(); ++i) {
                const double d = w[i] - q.scale * q.codes[i];
                err += d * d;
            }
            return err;
        };
        CHECK(scan.l2_error == doctest::Approx(l2_at(scan.threshold)));
        CHECK(scan.l2_error <= l2_at(default_ternary_threshold(w)) + 1e-12);
        for (double t : {0.1, 0.3, 0.5, 0.9, 1.4}) {
            CHECK(scan.l2_error <= l2_at(t) + 1e-12);
        }
    }
}

TEST_CASE("column-wise ternarization matches per-column ternarize") {
    std::mt19937_64 gen(151);
    std::normal_distribution<double> dist(0.0, 0.7);
    const std::size_t rows = 18, cols = 5;
    std::vector<double> w(rows * cols);
    for (double& v : w) v = dist(gen);

    const TernaryMatrix m = ternarize_columns(rows, cols, w);
    REQUIRE(m.codes.size() == rows * cols);
    REQUIRE(m.scales.size() == cols);
    for (std::size_t c = 0; c < cols; ++c) {
        std::vector<double> col(rows);
        for (std::size_t r = 0; r < rows; ++r) col[r] = w[r * cols + c];
        const TernaryQuant q = ternarize(col, default_ternary_threshold(col));
        CHECK(m.scales[c] == q.scale);
        for (std::size_t r = 0; r < rows; ++r) {
            CHECK(m.codes[r * cols + c] == q.codes[r]);
        }
    }
    CHECK_THROWS_AS(ternarize_columns(3, 2, std::vector<double>{1.0}), std::invalid_argument);
}

TEST_CASE("adc model validation and geometry") {
    AdcModel m;
    m.resolution_bits = 4;
    m.full_scale = 7.5;
    m.fn = {DendriteKind::ReLU, 1.0};
    CHECK_NOTHROW(m.validate());
    CHECK(m.min_code() == 0);
    CHECK(m.max_code() == 15);
    CHECK(m.lsb() == doctest::Approx(0.5));

    m.fn.kind = DendriteKind::Identity;
    CHECK(m.is_signed());
    CHECK(m.min_code() == -8);
    CHECK(m.max_code() == 7);

    AdcModel bad = m;
    bad.resolution_bits = 0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad.resolution_bits = 6;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = m;
    bad.full_scale = 0.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("adc conversion worked values") {
    AdcModel m;
    m.resolution_bits = 4;
    m.full_scale = 15.0;  // lsb = 1.0
    m.fn = {DendriteKind::ReLU, 1.0};

    CHECK(adc_convert(m, -0.7) == 0);
    CHECK(adc_convert(m, 0.0) == 0);
    CHECK(adc_convert(m, 3.2) == 3);
    CHECK(adc_convert(m, 15.0) == 15);
    CHECK(adc_convert(m, 99.0) == 15);  // saturates
    CHECK(adc_convert(m, 2.5) == 2);    // tie to even
    CHECK(adc_convert(m, 3.5) == 4);

    m.fn = {DendriteKind::Sublinear, 1.0};
    CHECK(adc_convert(m, 9.0) == 3);  // sqrt(9)/1.0

    m.fn = {DendriteKind::Identity, 1.0};
    CHECK(adc_convert(m, -3.0) == -3);
    CHECK(adc_convert(m, -99.0) == -8);
    CHECK(adc_convert(m, 99.0) == 7);
    CHECK(adc_dequant(m, -3) == doctest::Approx(-3.0));
}

TEST_CASE("adc staircase matches the independent scalar oracle") {
    REQUIRE(std::fegetround() == FE_TONEAREST);
    const DendriteFn fns[] = {{DendriteKind::ReLU, 1.0},
                              {DendriteKind::Sublinear, 1.0},
                              {DendriteKind::Supralinear, 0.5},
                              {DendriteKind::Tanh, 1.0},
                              {DendriteKind::Identity, 1.0}};
    for (const DendriteFn& fn : fns) {
        for (int bits : {1, 3, 4, 5}) {
            AdcModel m;
            m.resolution_bits = bits;
            m.full_scale = 2.75;
            m.fn = fn;
            for (int i = 0; i <= 4000; ++i) {
                const double analog = -m.full_scale + static_cast<double>(i) * 0.002;
                CHECK(adc_convert(m, analog) == oracle_adc(analog, fn, bits, m.full_scale));
            }
        }
    }
}

TEST_CASE("adc codes are monotone in the analog input") {
    for (DendriteKind kind : {DendriteKind::ReLU, DendriteKind::Sublinear,
                              DendriteKind::Supralinear, DendriteKind::Tanh,
                              DendriteKind::Identity}) {
        AdcModel m;
        m.resolution_bits = 4;
        m.full_scale = 3.0;
        m.fn = {kind, 1.0};
        std::int64_t prev = std::numeric_limits<std::int64_t>::min();
        for (int i = 0; i <= 3000; ++i) {
            const double analog = -4.0 + static_cast<double>(i) * 0.003;
            const std::int64_t code = adc_convert(m, analog);
            CHECK(code >= prev);
            prev = code;
        }
    }
}

TEST_CASE("non-positive analog always reads code zero for clamping fns") {
    for (DendriteKind kind : {DendriteKind::ReLU, DendriteKind::Sublinear,
                              DendriteKind::Supralinear, DendriteKind::Tanh}) {
        AdcModel m;
        m.resolution_bits = 5;
        m.full_scale = 1.0;
        m.fn = {kind, 2.0};
        for (int i = 0; i <= 10000; ++i) {
            const double analog = -10.0 + static_cast<double>(i) * 0.001;
            if (analog > 0.0) break;
            CHECK(adc_convert(m, analog) == 0);
        }
    }
}

TEST_CASE("adc codes are idempotent through dequantization") {
    AdcModel m;
    m.resolution_bits = 4;
    m.full_scale = 5.0;
    m.fn = {DendriteKind::ReLU, 1.0};
    for (std::int64_t code = 0; code <= 15; ++code) {
        CHECK(adc_convert(m, adc_dequant(m, code)) == code);
    }
    m.fn = {DendriteKind::Identity, 1.0};
    for (std::int64_t code = -8; code <= 7; ++code) {
        CHECK(adc_convert(m, adc_dequant(m, code)) == code);
    }
}

TEST_CASE("noise stream statistics match the configured model") {
    NoiseModel nm{-0.11, 0.56, 42};
    NoiseStream stream(nm);
    std::vector<double> draws(100000);
    for (std::size_t i = 0; i < draws.size(); ++i) draws[i] = stream.error_at(i);
    CHECK(std::abs(sample_mean(draws) - (-0.11)) < 0.02);
    CHECK(std::abs(sample_std(draws) - 0.56) < 0.02);
}

TEST_CASE("noise stream is deterministic and schedule independent") {
    NoiseModel nm{-0.11, 0.56, 7};
    NoiseStream a(nm);
    NoiseStream b(nm);
    // next() walks the same indexed stream
    for (std::uint64_t i = 0; i < 100; ++i) {
        CHECK(a.next() == b.error_at(i));
    }
    // out-of-order queries agree with in-order ones
    NoiseStream c(nm);
    CHECK(c.error_at(99) == b.error_at(99));
    CHECK(c.error_at(0) == b.error_at(0));

    NoiseStream other(NoiseModel{-0.11, 0.56, 8});
    bool all_equal = true;
    for (std::uint64_t i = 0; i < 50; ++i) {
        all_equal = all_equal && (other.error_at(i) == b.error_at(i));
    }
    CHECK_FALSE(all_equal);
}

TEST_CASE("zero-noise streams leave codes unchanged") {
    NoiseStream stream(NoiseModel{0.0, 0.0, 1});
    for (std::int64_t code = 0; code <= 15; ++code) {
        CHECK(stream.apply_at(static_cast<std::uint64_t>(code), code, 0, 15) == code);
    }
}

TEST_CASE("noisy conversion clamps to the code range") {
    NoiseModel nm{-0.11, 0.56, 3};
    NoiseStream stream(nm);
    AdcModel m;
    m.resolution_bits = 3;
    m.full_scale = 7.0;
    m.fn = {DendriteKind::ReLU, 1.0};
    for (std::uint64_t i = 0; i < 5000; ++i) {
        const double analog = static_cast<double>(i % 160) * 0.1 - 4.0;
        const std::int64_t code = adc_convert_noisy(m, analog, stream, i);
        CHECK(code >= 0);
        CHECK(code <= 7);
        // noisy code equals clean code plus the rounded stream error, clamped
        const std::int64_t clean = adc_convert(m, analog);
        const std::int64_t want = std::clamp(
            static_cast<std::int64_t>(std::nearbyint(static_cast<double>(clean) +
                                                     stream.error_at(i))),
            std::int64_t{0}, std::int64_t{7});
        CHECK(code == want);
    }
}

TEST_CASE("mac_analog is an exact scaled integer dot product") {
    const std::vector<std::int8_t> zeros(16, 0);
    std::vector<std::int64_t> codes(16);
    for (std::size_t i = 0; i < codes.size(); ++i) codes[i] = static_cast<std::int64_t>(i) - 8;
    CHECK(mac_analog(zeros, codes, 0.5) == 0.0);

    std::vector<std::int8_t> one(16, 0);
    one[5] = 1;
    CHECK(mac_analog(one, codes, 0.25) == static_cast<double>(codes[5]) * 0.25);

    std::mt19937_64 gen(157);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 1 + gen() % 64;
        std::vector<std::int8_t> w(n);
        std::vector<std::int64_t> x(n);
        for (std::size_t i = 0; i < n; ++i) {
            w[i] = static_cast<std::int8_t>(static_cast<int>(gen() % 3) - 1);
            x[i] = static_cast<std::int64_t>(gen() % 31) - 15;
        }
        std::int64_t dot = 0;
        for (std::size_t i = 0; i < n; ++i) dot += w[i] * x[i];
        CHECK(mac_analog(w, x, 0.125) == static_cast<double>(dot) * 0.125);
    }

    CHECK_THROWS_AS(mac_analog(std::vector<std::int8_t>{1}, codes, 1.0), std::invalid_argument);
}

TEST_CASE("quantized relu matches exact dendritic relu when codes are exact") {
    // With full_scale covering the integer psum range and lsb = input scale,
    // ADC(ReLU) over an exact integer MAC equals apply_f on the analog psum.
    std::mt19937_64 gen(163);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 1 + gen() % 32;
        std::vector<std::int8_t> w(n);
        std::vector<std::int64_t> x(n);
        for (std::size_t i = 0; i < n; ++i) {
            w[i] = static_cast<std::int8_t>(static_cast<int>(gen() % 3) - 1);
            x[i] = static_cast<std::int64_t>(gen() % 8) - 4;
        }
        const double input_scale = 1.0;
        const double analog = mac_analog(w, x, input_scale);

        AdcModel m;
        m.resolution_bits = 5;
        m.full_scale = 31.0;  // lsb = 1.0, covers |psum| <= 4n <= 128... clamp below
        m.fn = {DendriteKind::ReLU, 1.0};
        const double clamped = std::min(apply_f(m.fn, analog), m.full_scale);
        CHECK(adc_dequant(m, adc_convert(m, analog)) == doctest::Approx(clamped));
    }
}
