#include <cmath>
#include <cstring>
#include <limits>
#include <random>
#include <stdexcept>
#include <vector>

#include "cadc/tensor.hpp"
#include "doctest.h"

using namespace cadc;

namespace {

// Brute-force patch extraction, written independently of im2col: walk output
// positions, gather the receptive field with explicit bounds checks.
Tensor oracle_patches(const Tensor& input, const ConvSpec& spec) {
    const std::size_t c_in = input.shape[0];
    const std::size_t h = input.shape[1];
    const std::size_t w = input.shape[2];
    const std::size_t oh = spec.out_h(h);
    const std::size_t ow = spec.out_w(w);
    const std::size_t d = spec.unrolled_dim();
    Tensor out = Tensor::zeros({oh * ow, d});
    for (std::size_t oy = 0; oy < oh; ++oy) {
        for (std::size_t ox = 0; ox < ow; ++ox) {
            const std::size_t p = oy * ow + ox;
            for (std::size_t c = 0; c < c_in; ++c) {
                for (int r = 0; r < spec.k1; ++r) {
                    for (int q = 0; q < spec.k2; ++q) {
                        const long iy = static_cast<long>(oy) * spec.stride + r - spec.padding;
                        const long ix = static_cast<long>(ox) * spec.stride + q - spec.padding;
                        double v = 0.0;
                        if (iy >= 0 && iy < static_cast<long>(h) && ix >= 0 &&
                            ix < static_cast<long>(w)) {
                            v = input.data[(c * h + iy) * w + ix];
                        }
                        const std::size_t row = (c * spec.k1 + r) * spec.k2 + q;
                        out.at(p, row) = v;
                    }
                }
            }
        }
    }
    return out;
}

// Independent triple-loop matrix product.
Tensor oracle_matmul(const Tensor& a, const Tensor& b) {
    Tensor out = Tensor::zeros({a.shape[0], b.shape[1]});
    for (std::size_t i = 0; i < a.shape[0]; ++i) {
        for (std::size_t j = 0; j < b.shape[1]; ++j) {
            double acc = 0.0;
            for (std::size_t k = 0; k < a.shape[1]; ++k) {
                acc += a.at(i, k) * b.at(k, j);
            }
            out.at(i, j) = acc;
        }
    }
    return out;
}

Tensor random_tensor(std::vector<std::size_t> shape, std::mt19937_64& gen) {
    Tensor t = Tensor::zeros(std::move(shape));
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    for (double& v : t.data) v = dist(gen);
    return t;
}

bool bit_identical(const Tensor& a, const Tensor& b) {
    return a.shape == b.shape &&
           std::memcmp(a.data.data(), b.data.data(), a.data.size() * sizeof(double)) == 0;
}

double max_rel_err(const Tensor& a, const Tensor& b) {
    REQUIRE(a.shape == b.shape);
    double worst = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        const double denom = std::max({std::abs(a.data[i]), std::abs(b.data[i]), 1.0});
        worst = std::max(worst, std::abs(a.data[i] - b.data[i]) / denom);
    }
    return worst;
}

}  // namespace

TEST_CASE("tensor construction and validation") {
    Tensor t({2, 3}, {1, 2, 3, 4, 5, 6});
    CHECK(t.numel() == 6);
    CHECK(t.rank() == 2);
    CHECK(t.at(1, 2) == 6.0);

    CHECK(Tensor::zeros({3, 4}).numel() == 12);
    CHECK_THROWS_AS(Tensor({2, 3}, {1.0, 2.0}), std::invalid_argument);
    CHECK_THROWS_AS(Tensor::zeros({0, 4}), std::invalid_argument);
}

TEST_CASE("conv spec geometry") {
    ConvSpec spec{3, 3, 3, 64, 1, 1};
    CHECK(spec.unrolled_dim() == 27);
    CHECK(spec.out_h(32) == 32);
    CHECK(spec.out_w(32) == 32);

    ConvSpec strided{1, 2, 2, 1, 2, 0};
    CHECK(strided.out_h(4) == 2);
    CHECK(strided.out_w(6) == 3);

    ConvSpec bad = spec;
    bad.stride = 0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = spec;
    bad.c_in = 0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("im2col trivial single element") {
    Tensor input({1, 1, 1}, {5.0});
    ConvSpec spec{1, 1, 1, 1, 1, 0};
    Tensor m = im2col(input, spec);
    CHECK(m.shape == std::vector<std::size_t>{1, 1});
    CHECK(m.data[0] == 5.0);
}

TEST_CASE("im2col 2x2 kernel covers the full window in canonical order") {
    Tensor input({1, 2, 2}, {1, 2, 3, 4});
    ConvSpec spec{1, 2, 2, 1, 1, 0};
    Tensor m = im2col(input, spec);
    CHECK(m.shape == std::vector<std::size_t>{1, 4});
    CHECK(m.data == std::vector<double>{1, 2, 3, 4});
}

TEST_CASE("im2col matches the brute-force patch oracle") {
    std::mt19937_64 gen(11);
    const ConvSpec cases[] = {
        {2, 3, 3, 1, 1, 0}, {2, 3, 3, 1, 1, 1}, {3, 2, 2, 1, 2, 0},
        {1, 3, 2, 1, 1, 1}, {4, 1, 1, 1, 1, 0}, {2, 3, 3, 1, 2, 1},
    };
    for (const ConvSpec& spec : cases) {
        for (std::size_t hw : {4u, 5u, 7u}) {
            Tensor input = random_tensor({static_cast<std::size_t>(spec.c_in), hw, hw}, gen);
            Tensor got = im2col(input, spec);
            Tensor want = oracle_patches(input, spec);
            CHECK(bit_identical(got, want));
        }
    }
}

TEST_CASE("im2col row count follows the output-position formula") {
    std::mt19937_64 gen(7);
    for (int trial = 0; trial < 50; ++trial) {
        ConvSpec spec;
        spec.c_in = 1 + static_cast<int>(gen() % 3);
        spec.k1 = 1 + static_cast<int>(gen() % 3);
        spec.k2 = 1 + static_cast<int>(gen() % 3);
        spec.stride = 1 + static_cast<int>(gen() % 2);
        spec.padding = static_cast<int>(gen() % 2);
        const std::size_t h = spec.k1 + gen() % 5;
        const std::size_t w = spec.k2 + gen() % 5;
        Tensor input = random_tensor({static_cast<std::size_t>(spec.c_in), h, w}, gen);
        Tensor m = im2col(input, spec);
        const std::size_t oh = (h + 2 * spec.padding - spec.k1) / spec.stride + 1;
        const std::size_t ow = (w + 2 * spec.padding - spec.k2) / spec.stride + 1;
        CHECK(m.shape[0] == oh * ow);
        CHECK(m.shape[1] == spec.unrolled_dim());
    }
}

TEST_CASE("im2col rejects mismatched inputs") {
    ConvSpec spec{2, 3, 3, 1, 1, 0};
    CHECK_THROWS_AS(im2col(Tensor::zeros({3, 4, 4}), spec), std::invalid_argument);
    CHECK_THROWS_AS(im2col(Tensor::zeros({2, 2, 2}), spec), std::invalid_argument);
    CHECK_THROWS_AS(im2col(Tensor::zeros({2, 4}), spec), std::invalid_argument);
}

TEST_CASE("unrolled kernel layout") {
    // kernel [c_in=2, k1=1, k2=1, c_out=3]; entries chosen so each (row, col)
    // is identifiable: value = 10*c + k for input channel c, output k.
    Tensor kernel({2, 1, 1, 3}, {0, 1, 2, 10, 11, 12});
    UnrolledKernel uk = UnrolledKernel::from_tensor(kernel);
    CHECK(uk.rows == 2);
    CHECK(uk.cols == 3);
    CHECK(uk.at(0, 2) == 2.0);
    CHECK(uk.at(1, 0) == 10.0);
}

TEST_CASE("matmul matches the triple-loop oracle") {
    std::mt19937_64 gen(3);
    Tensor a = random_tensor({5, 7}, gen);
    Tensor b = random_tensor({7, 4}, gen);
    Tensor got = matmul(a, b);
    Tensor want = oracle_matmul(a, b);
    CHECK(max_rel_err(got, want) < 1e-12);

    Tensor one_by_one = matmul(Tensor({1, 1}, {2.0}), Tensor({1, 1}, {3.0}));
    CHECK(one_by_one.data[0] == 6.0);

    Tensor eye = Tensor::zeros({7, 7});
    for (std::size_t i = 0; i < 7; ++i) eye.at(i, i) = 1.0;
    CHECK(bit_identical(matmul(eye, b), b));

    CHECK_THROWS_AS(matmul(Tensor::zeros({2, 3}), Tensor::zeros({4, 2})), std::invalid_argument);
}

TEST_CASE("matmul is deterministic and parallel matches serial bit for bit") {
    std::mt19937_64 gen(19);
    Tensor a = random_tensor({33, 65}, gen);
    Tensor b = random_tensor({65, 17}, gen);
    Tensor first = matmul(a, b);
    Tensor second = matmul(a, b);
    CHECK(bit_identical(first, second));
    CHECK(bit_identical(first, matmul_serial(a, b)));
}

TEST_CASE("conv_reference equals im2col times unrolled kernel") {
    std::mt19937_64 gen(23);
    const ConvSpec cases[] = {
        {2, 3, 3, 2, 1, 1}, {3, 2, 2, 4, 2, 0}, {1, 1, 1, 3, 1, 0}, {2, 3, 2, 1, 1, 1},
    };
    for (const ConvSpec& spec : cases) {
        Tensor input = random_tensor({static_cast<std::size_t>(spec.c_in), 5, 5}, gen);
        Tensor kernel = random_tensor({static_cast<std::size_t>(spec.c_in),
                                       static_cast<std::size_t>(spec.k1),
                                       static_cast<std::size_t>(spec.k2),
                                       static_cast<std::size_t>(spec.c_out)},
                                      gen);
        Tensor direct = conv_reference(input, kernel, spec);
        UnrolledKernel uk = UnrolledKernel::from_tensor(kernel);
        Tensor via_matmul = matmul(im2col(input, spec), Tensor({uk.rows, uk.cols}, uk.data));
        CHECK(max_rel_err(direct, via_matmul) < 1e-9);
    }
}

TEST_CASE("conv_reference identity and zero kernels") {
    std::mt19937_64 gen(29);
    Tensor input = random_tensor({1, 4, 4}, gen);
    ConvSpec spec{1, 1, 1, 1, 1, 0};

    Tensor ident = conv_reference(input, Tensor({1, 1, 1, 1}, {1.0}), spec);
    CHECK(ident.data == input.data);

    Tensor zero = conv_reference(input, Tensor({1, 1, 1, 1}, {0.0}), spec);
    for (double v : zero.data) CHECK(v == 0.0);
}

TEST_CASE("col2im_add is the adjoint of im2col") {
    // <im2col(x), g> == <x, col2im_add(g)> for all g; checked on random pairs.
    std::mt19937_64 gen(31);
    const ConvSpec cases[] = {{2, 3, 3, 1, 1, 1}, {1, 2, 2, 1, 2, 0}, {3, 3, 2, 1, 1, 0}};
    for (const ConvSpec& spec : cases) {
        const std::size_t h = 5, w = 6;
        Tensor x = random_tensor({static_cast<std::size_t>(spec.c_in), h, w}, gen);
        Tensor unrolled = im2col(x, spec);
        Tensor g = random_tensor(unrolled.shape, gen);
        Tensor back = col2im_add(g, spec, h, w);
        double lhs = 0.0, rhs = 0.0;
        for (std::size_t i = 0; i < unrolled.data.size(); ++i) lhs += unrolled.data[i] * g.data[i];
        for (std::size_t i = 0; i < x.data.size(); ++i) rhs += x.data[i] * back.data[i];
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
    }
}

TEST_CASE("finite difference gradient sanity") {
    auto sum_sq = [](const Tensor& t) {
        double acc = 0.0;
        for (double v : t.data) acc += v * v;
        return acc;
    };
    Tensor at({2}, {1.0, 2.0});
    Tensor grad = finite_diff_grad(sum_sq, at, 1e-5);
    CHECK(grad.data[0] == doctest::Approx(2.0).epsilon(1e-6));
    CHECK(grad.data[1] == doctest::Approx(4.0).epsilon(1e-6));

    Tensor flat = finite_diff_grad([](const Tensor&) { return 3.0; }, at, 1e-5);
    CHECK(flat.data[0] == 0.0);
    CHECK(flat.data[1] == 0.0);

    auto bad = [](const Tensor&) { return std::numeric_limits<double>::quiet_NaN(); };
    CHECK_THROWS_AS(finite_diff_grad(bad, at, 1e-5), std::runtime_error);
}
