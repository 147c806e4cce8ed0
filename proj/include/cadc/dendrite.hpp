// dendrite.hpp — the per-crossbar nonlinearity f() applied to psums before
// cross-segment accumulation. Every kind except Identity clamps x <= 0 to 0;
// Identity is the pass-through used by vanilla accumulation and comparison runs.
#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <string_view>

namespace cadc {

enum class DendriteKind { Identity, ReLU, Sublinear, Supralinear, Tanh };

struct DendriteFn {
    DendriteKind kind = DendriteKind::ReLU;
    double supralinear_k = 1.0;
};

inline double apply_f(const DendriteFn& fn, double x) {
    if (fn.kind == DendriteKind::Identity) return x;
    if (x <= 0.0) return 0.0;
    switch (fn.kind) {
        case DendriteKind::ReLU:
            return x;
        case DendriteKind::Sublinear:
            return std::sqrt(x);
        case DendriteKind::Supralinear:
            return fn.supralinear_k * x * x;
        case DendriteKind::Tanh:
            return std::tanh(x);
        default:
            return x;
    }
}

// Derivative of apply_f wrt x. Subgradient at the x=0 kink is 0 for all
// clamped kinds; the sublinear 1/(2 sqrt(x)) is clamped below x = 1e-12 to
// keep training finite near the singularity.
inline double apply_f_grad(const DendriteFn& fn, double x) {
    if (fn.kind == DendriteKind::Identity) return 1.0;
    if (x <= 0.0) return 0.0;
    switch (fn.kind) {
        case DendriteKind::ReLU:
            return 1.0;
        case DendriteKind::Sublinear:
            return 1.0 / (2.0 * std::sqrt(x < 1e-12 ? 1e-12 : x));
        case DendriteKind::Supralinear:
            return 2.0 * fn.supralinear_k * x;
        case DendriteKind::Tanh: {
            const double t = std::tanh(x);
            return 1.0 - t * t;
        }
        default:
            return 1.0;
    }
}

inline std::string_view dendrite_fn_name(DendriteKind kind) {
    switch (kind) {
        case DendriteKind::Identity:
            return "identity";
        case DendriteKind::ReLU:
            return "relu";
        case DendriteKind::Sublinear:
            return "sublinear";
        case DendriteKind::Supralinear:
            return "supralinear";
        case DendriteKind::Tanh:
            return "tanh";
    }
    return "unknown";
}

inline DendriteFn parse_dendrite_fn(std::string_view name, double supralinear_k = 1.0) {
    DendriteFn fn;
    fn.supralinear_k = supralinear_k;
    if (name == "identity") {
        fn.kind = DendriteKind::Identity;
    } else if (name == "relu") {
        fn.kind = DendriteKind::ReLU;
    } else if (name == "sublinear" || name == "sqrt") {
        fn.kind = DendriteKind::Sublinear;
    } else if (name == "supralinear") {
        fn.kind = DendriteKind::Supralinear;
    } else if (name == "tanh") {
        fn.kind = DendriteKind::Tanh;
    } else {
        throw std::invalid_argument("unknown dendrite fn: " + std::string(name));
    }
    return fn;
}

}  // namespace cadc
