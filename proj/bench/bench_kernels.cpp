// Serial vs OpenMP-parallel kernel comparison. The parallel paths must stay
// bit-identical to the serial ones, so the interesting number here is speedup
// alone.
#include <benchmark/benchmark.h>

#include <random>

#include "cadc/common.hpp"
#include "cadc/dconv.hpp"
#include "cadc/partition.hpp"
#include "cadc/tensor.hpp"

namespace {

cadc::Tensor random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
    cadc::Tensor t = cadc::Tensor::zeros({rows, cols});
    std::mt19937_64 rng(cadc::splitmix64(seed));
    for (auto& v : t.data) v = cadc::normal01(rng);
    return t;
}

cadc::CadcLayer random_layer(std::size_t d, std::size_t c_out, int n, std::uint64_t seed) {
    cadc::UnrolledKernel k;
    k.rows = d;
    k.cols = c_out;
    k.data.resize(d * c_out);
    std::mt19937_64 rng(cadc::splitmix64(seed));
    for (auto& v : k.data) v = cadc::normal01(rng);
    cadc::CrossbarConfig xbar;
    xbar.n_rows = n;
    xbar.n_cols = n;
    return cadc::CadcLayer::make(cadc::partition(k, xbar),
                                 cadc::DendriteFn{cadc::DendriteKind::ReLU, 1.0});
}

void bm_matmul_serial(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto a = random_matrix(n, n, 11);
    const auto b = random_matrix(n, n, 13);
    for (auto _ : state) {
        benchmark::DoNotOptimize(cadc::matmul_serial(a, b));
    }
}

void bm_matmul_parallel(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto a = random_matrix(n, n, 11);
    const auto b = random_matrix(n, n, 13);
    for (auto _ : state) {
        benchmark::DoNotOptimize(cadc::matmul(a, b));
    }
}

void bm_segment_psums_serial(benchmark::State& state) {
    const auto p = static_cast<std::size_t>(state.range(0));
    const auto layer = random_layer(576, 64, 64, 17);
    const auto x = random_matrix(p, 576, 19);
    for (auto _ : state) {
        benchmark::DoNotOptimize(cadc::segment_psums_serial(layer, x));
    }
}

void bm_segment_psums_parallel(benchmark::State& state) {
    const auto p = static_cast<std::size_t>(state.range(0));
    const auto layer = random_layer(576, 64, 64, 17);
    const auto x = random_matrix(p, 576, 19);
    for (auto _ : state) {
        benchmark::DoNotOptimize(cadc::segment_psums(layer, x));
    }
}

void bm_cadc_forward_serial(benchmark::State& state) {
    const auto p = static_cast<std::size_t>(state.range(0));
    const auto layer = random_layer(576, 64, 64, 23);
    const auto x = random_matrix(p, 576, 29);
    for (auto _ : state) {
        benchmark::DoNotOptimize(cadc::cadc_forward_serial(layer, x));
    }
}

void bm_cadc_forward_parallel(benchmark::State& state) {
    const auto p = static_cast<std::size_t>(state.range(0));
    const auto layer = random_layer(576, 64, 64, 23);
    const auto x = random_matrix(p, 576, 29);
    for (auto _ : state) {
        benchmark::DoNotOptimize(cadc::cadc_forward(layer, x));
    }
}

}  // namespace

BENCHMARK(bm_matmul_serial)->Arg(64)->Arg(256);
BENCHMARK(bm_matmul_parallel)->Arg(64)->Arg(256);
BENCHMARK(bm_segment_psums_serial)->Arg(64)->Arg(256);
BENCHMARK(bm_segment_psums_parallel)->Arg(64)->Arg(256);
BENCHMARK(bm_cadc_forward_serial)->Arg(64)->Arg(256);
BENCHMARK(bm_cadc_forward_parallel)->Arg(64)->Arg(256);

BENCHMARK_MAIN();
