// common.hpp — shared helpers: message formatting, deterministic RNG transforms,
// round-half-even.
#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>

namespace cadc {
namespace detail {

template <typename... Args>
std::string str(Args&&... args) {
    std::ostringstream os;
    (os << ... << args);
    return os.str();
}

}  // namespace detail

// Ties-to-even rounding, independent of the FP environment's rounding mode.
// remainder(x, 1) is x minus the nearest integer with ties to even, so the
// difference is exactly that integer.
inline double round_half_even(double x) {
    return x - std::remainder(x, 1.0);
}

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Uniform in (0, 1]. Explicit transforms are used instead of the standard
// distributions so that streams are bit-stable across standard library
// implementations (reports must be byte-identical for identical seeds).
inline double word_to_unit(std::uint64_t word) {
    return (static_cast<double>(word >> 11) + 1.0) * 0x1p-53;
}

inline double uniform01(std::mt19937_64& gen) { return word_to_unit(gen()); }

// Standard normal via Box-Muller.
inline double normal_from_units(double u1, double u2) {
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

inline double normal01(std::mt19937_64& gen) {
    const double u1 = uniform01(gen);
    const double u2 = uniform01(gen);
    return normal_from_units(u1, u2);
}

}  // namespace cadc
