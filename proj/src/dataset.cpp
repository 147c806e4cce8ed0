#include "cadc/dataset.hpp"

#include <array>
#include <random>
#include <stdexcept>
#include <string_view>

#include "cadc/common.hpp"

namespace cadc {

Dataset make_blobs(std::size_t count, std::size_t dim, std::uint64_t seed, double margin) {
    if (count < 2 || dim < 1) throw std::invalid_argument("make_blobs needs count >= 2, dim >= 1");
    if (!(margin > 0.0)) throw std::invalid_argument("make_blobs margin must be > 0");

    std::mt19937_64 rng(splitmix64(seed));

    // Unit direction for the class axis.
    std::vector<double> axis(dim);
    double norm = 0.0;
    do {
        norm = 0.0;
        for (auto& a : axis) {
            a = normal01(rng);
            norm += a * a;
        }
    } while (norm < 1e-12);
    norm = std::sqrt(norm);
    for (auto& a : axis) a /= norm;

    Dataset ds;
    ds.sample_shape = {dim, 1, 1};
    ds.classes = 2;
    for (std::size_t i = 0; i < count; ++i) {
        const int label = static_cast<int>(i % 2);
        const double sign = label == 0 ? -1.0 : 1.0;
        std::vector<double> x(dim);
        for (int attempt = 0; attempt < 1000; ++attempt) {
            double proj = 0.0;
            for (std::size_t d = 0; d < dim; ++d) {
                x[d] = sign * 2.0 * axis[d] + 0.6 * normal01(rng);
                proj += axis[d] * x[d];
            }
            if (sign * proj >= margin) break;
        }
        ds.samples.emplace_back(std::vector<std::size_t>{dim, 1, 1}, std::move(x));
        ds.labels.push_back(label);
    }
    return ds;
}

namespace {

constexpr std::array<std::array<std::string_view, 8>, 10> kGlyphs = {{
    {"........",
     "..###...",
     ".#...#..",
     ".#...#..",
     ".#...#..",
     ".#...#..",
     "..###...",
     "........"},
    {"........",
     "...#....",
     "..##....",
     "...#....",
     "...#....",
     "...#....",
     "..###...",
     "........"},
    {"........",
     "..###...",
     ".#...#..",
     "....#...",
     "...#....",
     "..#.....",
     ".#####..",
     "........"},
    {"........",
     "..###...",
     ".....#..",
     "...##...",
     ".....#..",
     ".#...#..",
     "..###...",
     "........"},
    {"........",
     "....#...",
     "...##...",
     "..#.#...",
     ".#..#...",
     ".#####..",
     "....#...",
     "........"},
    {"........",
     ".#####..",
     ".#......",
     ".####...",
     ".....#..",
     ".#...#..",
     "..###...",
     "........"},
    {"........",
     "..###...",
     ".#......",
     ".####...",
     ".#...#..",
     ".#...#..",
     "..###...",
     "........"},
    {"........",
     ".#####..",
     ".....#..",
     "....#...",
     "...#....",
     "..#.....",
     "..#.....",
     "........"},
    {"........",
     "..###...",
     ".#...#..",
     "..###...",
     ".#...#..",
     ".#...#..",
     "..###...",
     "........"},
    {"........",
     "..###...",
     ".#...#..",
     ".#...#..",
     "..####..",
     ".....#..",
     "..###...",
     "........"},
}};

}  // namespace

Dataset make_digits(std::size_t count, std::uint64_t seed, double noise_std, int max_shift) {
    if (count < 10) throw std::invalid_argument("make_digits needs count >= 10");
    if (noise_std < 0.0) throw std::invalid_argument("noise_std must be >= 0");
    if (max_shift < 0 || max_shift > 1) {
        throw std::invalid_argument("max_shift must be 0 or 1 for 8x8 glyphs");
    }

    std::mt19937_64 rng(splitmix64(seed ^ 0x9e3779b97f4a7c15ull));

    Dataset ds;
    ds.sample_shape = {1, 8, 8};
    ds.classes = 10;
    for (std::size_t i = 0; i < count; ++i) {
        const int label = static_cast<int>(i % 10);
        const auto& glyph = kGlyphs[static_cast<std::size_t>(label)];
        const int span = 2 * max_shift + 1;
        const int dy = static_cast<int>(rng() % static_cast<unsigned>(span)) - max_shift;
        const int dx = static_cast<int>(rng() % static_cast<unsigned>(span)) - max_shift;
        std::vector<double> pix(64, 0.0);
        for (int y = 0; y < 8; ++y) {
            for (int x = 0; x < 8; ++x) {
                const int sy = y - dy;
                const int sx = x - dx;
                double v = 0.0;
                if (sy >= 0 && sy < 8 && sx >= 0 && sx < 8 && glyph[sy][sx] == '#') v = 1.0;
                pix[static_cast<std::size_t>(y * 8 + x)] = v + noise_std * normal01(rng);
            }
        }
        ds.samples.emplace_back(std::vector<std::size_t>{1, 8, 8}, std::move(pix));
        ds.labels.push_back(label);
    }
    return ds;
}

}  // namespace cadc
