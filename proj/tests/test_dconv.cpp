#include <cmath>
#include <cstring>
#include <random>
#include <vector>

#include "cadc/dconv.hpp"
#include "doctest.h"

using namespace cadc;

namespace {

UnrolledKernel random_kernel(std::size_t rows, std::size_t cols, std::mt19937_64& gen) {
    UnrolledKernel uk;
    uk.rows = rows;
    uk.cols = cols;
    uk.data.resize(rows * cols);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    for (double& v : uk.data) v = dist(gen);
    return uk;
}

Tensor random_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& gen) {
    Tensor t = Tensor::zeros({rows, cols});
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    for (double& v : t.data) v = dist(gen);
    return t;
}

// Scalar CADC oracle: raw psums by explicit per-row loops over the segment
// ranges of the *original* kernel, then f() per segment and a plain sum.
// Shares nothing with segment_psums/cadc_forward beyond the segment map.
double oracle_cadc_output(const UnrolledKernel& uk, const SegmentMap& map, const Tensor& input,
                          std::size_t p, std::size_t k, const DendriteFn& fn) {
    double y = 0.0;
    for (const auto& range : map.segments) {
        double psum = 0.0;
        for (std::size_t i = range.begin; i < range.end; ++i) {
            psum += uk.at(i, k) * input.at(p, i);
        }
        y += apply_f(fn, psum);
    }
    return y;
}

bool bit_identical(const Tensor& a, const Tensor& b) {
    return a.shape == b.shape &&
           std::memcmp(a.data.data(), b.data.data(), a.data.size() * sizeof(double)) == 0;
}

double rel_err(double got, double want) {
    return std::abs(got - want) / std::max({std::abs(got), std::abs(want), 1.0});
}

CadcLayer make_layer(const UnrolledKernel& uk, int n_rows, DendriteKind kind,
                     double k_supra = 1.0) {
    CrossbarConfig xbar;
    xbar.n_rows = n_rows;
    xbar.n_cols = static_cast<int>(uk.cols);
    return CadcLayer::make(partition(uk, xbar), DendriteFn{kind, k_supra});
}

}  // namespace

TEST_CASE("dendrite fn values") {
    CHECK(apply_f({DendriteKind::ReLU, 1.0}, -3.0) == 0.0);
    CHECK(apply_f({DendriteKind::ReLU, 1.0}, 2.5) == 2.5);
    CHECK(apply_f({DendriteKind::Sublinear, 1.0}, 4.0) == 2.0);
    CHECK(apply_f({DendriteKind::Supralinear, 0.5}, 2.0) == 2.0);
    CHECK(apply_f({DendriteKind::Tanh, 1.0}, 1.0) == doctest::Approx(std::tanh(1.0)));
    CHECK(apply_f({DendriteKind::Identity, 1.0}, -3.0) == -3.0);

    // every clamping kind maps x <= 0 to exactly 0
    for (DendriteKind kind : {DendriteKind::ReLU, DendriteKind::Sublinear,
                              DendriteKind::Supralinear, DendriteKind::Tanh}) {
        for (double x : {-5.0, -1e-9, 0.0}) {
            CHECK(apply_f({kind, 1.0}, x) == 0.0);
        }
    }
}

TEST_CASE("dendrite fn names round-trip") {
    for (DendriteKind kind : {DendriteKind::Identity, DendriteKind::ReLU, DendriteKind::Sublinear,
                              DendriteKind::Supralinear, DendriteKind::Tanh}) {
        CHECK(parse_dendrite_fn(dendrite_fn_name(kind)).kind == kind);
    }
    CHECK(parse_dendrite_fn("sqrt").kind == DendriteKind::Sublinear);
    CHECK_THROWS_AS(parse_dendrite_fn("cube"), std::invalid_argument);
}

TEST_CASE("segment psums sum to the reference convolution") {
    std::mt19937_64 gen(53);
    ConvSpec spec{3, 3, 3, 4, 1, 1};
    Tensor image = Tensor::zeros({3, 6, 6});
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    for (double& v : image.data) v = dist(gen);

    Tensor kernel = Tensor::zeros({3, 3, 3, 4});
    for (double& v : kernel.data) v = dist(gen);

    UnrolledKernel uk = UnrolledKernel::from_tensor(kernel);
    Tensor unrolled = im2col(image, spec);
    Tensor want = conv_reference(image, kernel, spec);

    for (int n_rows : {5, 8, 27, 64}) {
        CadcLayer layer = make_layer(uk, n_rows, DendriteKind::Identity);
        PsumTensor psums = segment_psums(layer, unrolled);
        CHECK(psums.stage == PsumTensor::Stage::Raw);
        CHECK(psums.s_count == layer.partitioned.map.s_count);
        for (std::size_t p = 0; p < psums.positions; ++p) {
            for (std::size_t k = 0; k < psums.channels; ++k) {
                double total = 0.0;
                for (std::size_t s = 0; s < psums.s_count; ++s) total += psums.at(s, p, k);
                CHECK(rel_err(total, want.at(p, k)) < 1e-9);
            }
        }
    }
}

TEST_CASE("segment psums: zero input gives zero psums") {
    std::mt19937_64 gen(59);
    UnrolledKernel uk = random_kernel(20, 3, gen);
    CadcLayer layer = make_layer(uk, 8, DendriteKind::ReLU);
    PsumTensor psums = segment_psums(layer, Tensor::zeros({4, 20}));
    for (double v : psums.data) CHECK(v == 0.0);
}

TEST_CASE("parallel segment psums match serial bit for bit") {
    std::mt19937_64 gen(61);
    UnrolledKernel uk = random_kernel(130, 7, gen);
    Tensor input = random_matrix(23, 130, gen);
    CadcLayer layer = make_layer(uk, 32, DendriteKind::ReLU);

    PsumTensor par = segment_psums(layer, input);
    PsumTensor ser = segment_psums_serial(layer, input);
    REQUIRE(par.data.size() == ser.data.size());
    CHECK(std::memcmp(par.data.data(), ser.data.data(), par.data.size() * sizeof(double)) == 0);

    CadcForwardResult fpar = cadc_forward(layer, input);
    CadcForwardResult fser = cadc_forward_serial(layer, input);
    CHECK(bit_identical(fpar.output, fser.output));
    CHECK(std::memcmp(fpar.post_f.data.data(), fser.post_f.data.data(),
                      fpar.post_f.data.size() * sizeof(double)) == 0);
}

TEST_CASE("vconv equals the reference convolution") {
    std::mt19937_64 gen(67);
    ConvSpec spec{2, 3, 3, 3, 1, 0};
    Tensor image = Tensor::zeros({2, 5, 5});
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    for (double& v : image.data) v = dist(gen);
    Tensor kernel = Tensor::zeros({2, 3, 3, 3});
    for (double& v : kernel.data) v = dist(gen);

    Tensor want = conv_reference(image, kernel, spec);
    Tensor unrolled = im2col(image, spec);
    UnrolledKernel uk = UnrolledKernel::from_tensor(kernel);

    for (int n_rows : {4, 7, 18, 100}) {
        CadcLayer layer = make_layer(uk, n_rows, DendriteKind::ReLU);
        Tensor got = vconv_forward(layer, unrolled);
        REQUIRE(got.shape == want.shape);
        for (std::size_t i = 0; i < got.data.size(); ++i) {
            CHECK(rel_err(got.data[i], want.data[i]) < 1e-9);
        }
    }
}

TEST_CASE("identity dendrite reproduces vconv bit for bit") {
    std::mt19937_64 gen(71);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t d = 1 + gen() % 90;
        const std::size_t cols = 1 + gen() % 5;
        const std::size_t positions = 1 + gen() % 12;
        UnrolledKernel uk = random_kernel(d, cols, gen);
        Tensor input = random_matrix(positions, d, gen);
        CadcLayer layer = make_layer(uk, static_cast<int>(1 + gen() % 40),
                                     DendriteKind::Identity);

        Tensor plain = vconv_forward(layer, input);
        CadcForwardResult dend = cadc_forward(layer, input);
        CHECK(bit_identical(plain, dend.output));
    }
}

TEST_CASE("relu dendrite with non-negative operands degenerates to vconv") {
    std::mt19937_64 gen(73);
    UnrolledKernel uk = random_kernel(30, 4, gen);
    for (double& v : uk.data) v = std::abs(v);
    Tensor input = random_matrix(9, 30, gen);
    for (double& v : input.data) v = std::abs(v);

    CadcLayer layer = make_layer(uk, 8, DendriteKind::ReLU);
    CadcForwardResult dend = cadc_forward(layer, input);
    Tensor plain = vconv_forward(layer, input);
    for (std::size_t i = 0; i < plain.data.size(); ++i) {
        CHECK(rel_err(dend.output.data[i], plain.data[i]) < 1e-12);
    }
}

TEST_CASE("cadc forward matches the scalar oracle for every fn") {
    std::mt19937_64 gen(79);
    for (DendriteKind kind : {DendriteKind::ReLU, DendriteKind::Sublinear,
                              DendriteKind::Supralinear, DendriteKind::Tanh,
                              DendriteKind::Identity}) {
        UnrolledKernel uk = random_kernel(45, 3, gen);
        Tensor input = random_matrix(11, 45, gen);
        CadcLayer layer = make_layer(uk, 10, kind, 0.7);

        CadcForwardResult got = cadc_forward(layer, input);
        CHECK(got.post_f.stage == PsumTensor::Stage::PostF);
        for (std::size_t p = 0; p < 11; ++p) {
            for (std::size_t k = 0; k < 3; ++k) {
                const double want =
                    oracle_cadc_output(uk, layer.partitioned.map, input, p, k, layer.fn);
                CHECK(rel_err(got.output.at(p, k), want) < 1e-9);
            }
        }
    }
}

TEST_CASE("cadc forward honors soma weights") {
    std::mt19937_64 gen(83);
    UnrolledKernel uk = random_kernel(12, 2, gen);
    Tensor input = random_matrix(4, 12, gen);
    CadcLayer layer = make_layer(uk, 4, DendriteKind::ReLU);
    REQUIRE(layer.soma_weights.size() == 3);
    for (double w : layer.soma_weights) CHECK(w == 1.0);

    layer.soma_weights = {2.0, 0.0, 1.0};
    CadcForwardResult got = cadc_forward(layer, input);
    for (std::size_t p = 0; p < 4; ++p) {
        for (std::size_t k = 0; k < 2; ++k) {
            const double want = 2.0 * got.post_f.at(0, p, k) + 0.0 * got.post_f.at(1, p, k) +
                                1.0 * got.post_f.at(2, p, k);
            CHECK(rel_err(got.output.at(p, k), want) < 1e-12);
        }
    }
}

TEST_CASE("post-f psums are non-negative for clamping fns") {
    std::mt19937_64 gen(89);
    UnrolledKernel uk = random_kernel(40, 5, gen);
    Tensor input = random_matrix(16, 40, gen);
    for (DendriteKind kind : {DendriteKind::ReLU, DendriteKind::Sublinear,
                              DendriteKind::Supralinear, DendriteKind::Tanh}) {
        CadcLayer layer = make_layer(uk, 8, kind);
        CadcForwardResult got = cadc_forward(layer, input);
        for (double v : got.post_f.data) CHECK(v >= 0.0);
    }
}

TEST_CASE("sparsity stats") {
    PsumTensor t = PsumTensor::zeros(2, 2, 2, PsumTensor::Stage::Raw);
    SparsityStats all_zero = sparsity_stats(t);
    CHECK(all_zero.zero_fraction == 1.0);
    CHECK(all_zero.total == 8);
    CHECK(all_zero.zeros == 8);

    t.at(0, 0, 0) = 1.5;
    t.at(1, 1, 1) = -0.25;
    SparsityStats mixed = sparsity_stats(t);
    CHECK(mixed.zeros == 6);
    CHECK(mixed.zero_fraction == doctest::Approx(0.75));
    REQUIRE(mixed.per_segment.size() == 2);
    CHECK(mixed.per_segment[0] == doctest::Approx(0.75));
    CHECK(mixed.per_segment[1] == doctest::Approx(0.75));
}

TEST_CASE("relu psum sparsity equals the raw non-positive fraction") {
    std::mt19937_64 gen(97);
    UnrolledKernel uk = random_kernel(64, 8, gen);
    Tensor input = random_matrix(50, 64, gen);
    CadcLayer layer = make_layer(uk, 16, DendriteKind::ReLU);

    PsumTensor raw = segment_psums(layer, input);
    CadcForwardResult fwd = cadc_forward(layer, input);

    std::size_t nonpositive = 0;
    for (double v : raw.data) nonpositive += (v <= 0.0) ? 1 : 0;

    SparsityStats post = sparsity_stats(fwd.post_f);
    CHECK(post.zeros == nonpositive);

    // symmetric random operands: about half the raw psums fall at or below 0
    const double frac = static_cast<double>(nonpositive) / static_cast<double>(raw.data.size());
    CHECK(frac > 0.4);
    CHECK(frac < 0.6);

    SparsityStats raw_stats = sparsity_stats(raw);
    CHECK(post.zero_fraction >= raw_stats.zero_fraction);
}

TEST_CASE("cadc backward: identity reduces to plain convolution gradients") {
    std::mt19937_64 gen(101);
    UnrolledKernel uk = random_kernel(25, 3, gen);
    Tensor input = random_matrix(7, 25, gen);
    Tensor upstream = random_matrix(7, 3, gen);

    CadcLayer layer = make_layer(uk, 9, DendriteKind::Identity);
    CadcGradients grads = cadc_backward(layer, input, upstream);

    // grad_w = x^T g, grad_x = g W^T, independent closed forms
    for (std::size_t i = 0; i < 25; ++i) {
        for (std::size_t k = 0; k < 3; ++k) {
            double want = 0.0;
            for (std::size_t p = 0; p < 7; ++p) want += input.at(p, i) * upstream.at(p, k);
            CHECK(rel_err(grads.grad_weights.at(i, k), want) < 1e-9);
        }
    }
    for (std::size_t p = 0; p < 7; ++p) {
        for (std::size_t i = 0; i < 25; ++i) {
            double want = 0.0;
            for (std::size_t k = 0; k < 3; ++k) want += upstream.at(p, k) * uk.at(i, k);
            CHECK(rel_err(grads.grad_input.at(p, i), want) < 1e-9);
        }
    }
}

TEST_CASE("cadc backward matches finite differences for smooth fns") {
    std::mt19937_64 gen(103);
    for (DendriteKind kind : {DendriteKind::Tanh, DendriteKind::Supralinear}) {
        UnrolledKernel uk = random_kernel(14, 2, gen);
        Tensor input = random_matrix(5, 14, gen);
        Tensor upstream = random_matrix(5, 2, gen);
        CadcLayer layer = make_layer(uk, 6, kind, 0.8);

        CadcGradients grads = cadc_backward(layer, input, upstream);

        auto loss_of_weights = [&](const Tensor& w) {
            CadcLayer probe = layer;
            UnrolledKernel pw = uk;
            pw.data = w.data;
            probe.partitioned = partition(pw, CrossbarConfig{6, 2, 2, 4});
            CadcForwardResult out = cadc_forward(probe, input);
            double acc = 0.0;
            for (std::size_t i = 0; i < out.output.data.size(); ++i) {
                acc += out.output.data[i] * upstream.data[i];
            }
            return acc;
        };
        Tensor w_tensor({14, 2}, uk.data);
        Tensor fd_w = finite_diff_grad(loss_of_weights, w_tensor, 1e-6);
        for (std::size_t i = 0; i < fd_w.data.size(); ++i) {
            CHECK(rel_err(grads.grad_weights.data[i], fd_w.data[i]) < 1e-4);
        }

        auto loss_of_input = [&](const Tensor& x) {
            CadcForwardResult out = cadc_forward(layer, x);
            double acc = 0.0;
            for (std::size_t i = 0; i < out.output.data.size(); ++i) {
                acc += out.output.data[i] * upstream.data[i];
            }
            return acc;
        };
        Tensor fd_x = finite_diff_grad(loss_of_input, input, 1e-6);
        for (std::size_t i = 0; i < fd_x.data.size(); ++i) {
            CHECK(rel_err(grads.grad_input.data[i], fd_x.data[i]) < 1e-4);
        }
    }
}

TEST_CASE("cadc backward matches finite differences for relu away from kinks") {
    std::mt19937_64 gen(107);
    UnrolledKernel uk = random_kernel(10, 2, gen);
    Tensor input = random_matrix(4, 10, gen);
    CadcLayer layer = make_layer(uk, 5, DendriteKind::ReLU);

    // keep every raw psum off the kink so central differences are valid
    PsumTensor raw = segment_psums(layer, input);
    bool safe = true;
    for (double v : raw.data) safe = safe && std::abs(v) > 1e-3;
    if (!safe) {
        for (double& v : input.data) v += 0.37;
        raw = segment_psums(layer, input);
        for (double v : raw.data) REQUIRE(std::abs(v) > 1e-5);
    }

    Tensor upstream = random_matrix(4, 2, gen);
    CadcGradients grads = cadc_backward(layer, input, upstream);

    auto loss_of_input = [&](const Tensor& x) {
        CadcForwardResult out = cadc_forward(layer, x);
        double acc = 0.0;
        for (std::size_t i = 0; i < out.output.data.size(); ++i) {
            acc += out.output.data[i] * upstream.data[i];
        }
        return acc;
    };
    Tensor fd_x = finite_diff_grad(loss_of_input, input, 1e-7);
    for (std::size_t i = 0; i < fd_x.data.size(); ++i) {
        CHECK(rel_err(grads.grad_input.data[i], fd_x.data[i]) < 1e-4);
    }
}

TEST_CASE("cadc backward soma gradients") {
    std::mt19937_64 gen(109);
    UnrolledKernel uk = random_kernel(12, 3, gen);
    Tensor input = random_matrix(6, 12, gen);
    Tensor upstream = random_matrix(6, 3, gen);
    CadcLayer layer = make_layer(uk, 4, DendriteKind::Tanh);

    CadcGradients grads = cadc_backward(layer, input, upstream);
    CadcForwardResult fwd = cadc_forward(layer, input);

    REQUIRE(grads.grad_soma.size() == layer.partitioned.map.s_count);
    for (std::size_t s = 0; s < grads.grad_soma.size(); ++s) {
        double want = 0.0;
        for (std::size_t p = 0; p < 6; ++p) {
            for (std::size_t k = 0; k < 3; ++k) {
                want += fwd.post_f.at(s, p, k) * upstream.at(p, k);
            }
        }
        CHECK(rel_err(grads.grad_soma[s], want) < 1e-9);
    }
}
