// dataset.hpp — deterministic synthetic datasets for the toy training loop:
// a linearly separable two-blob set and a noisy 8x8 digit-glyph set.
#pragma once

#include <cstdint>
#include <vector>

#include "cadc/netspec.hpp"
#include "cadc/tensor.hpp"

namespace cadc {

struct Dataset {
    Shape3 sample_shape;
    std::size_t classes = 0;
    std::vector<Tensor> samples;  // each [c, h, w]
    std::vector<int> labels;

    std::size_t size() const { return samples.size(); }
};

// Two Gaussian blobs at +mu/-mu with a margin enforced around the separating
// hyperplane through the origin, so the set is strictly linearly separable by
// a bias-free classifier. Samples are [dim, 1, 1].
Dataset make_blobs(std::size_t count, std::size_t dim, std::uint64_t seed,
                   double margin = 0.5);

// Ten 8x8 digit glyphs with per-sample integer shifts in [-max_shift, max_shift]
// and additive Gaussian pixel noise. Samples are [1, 8, 8], labels 0..9.
Dataset make_digits(std::size_t count, std::uint64_t seed, double noise_std = 0.15,
                    int max_shift = 1);

}  // namespace cadc
