#include <benchmark/benchmark.h>

#include "dfl/numerics.hpp"

using namespace dfl;

namespace {

Matrix2 random_matrix(std::size_t side, RngStream& rng) {
    Matrix2 m(side, side);
    for (double& x : m.data) {
        x = sample_gaussian(0.0, 1.0, rng);
    }
    return m;
}

}  // namespace

static void BM_conv2d_valid(benchmark::State& state) {
    RngStream rng(1);
    const Matrix2 input = random_matrix(static_cast<std::size_t>(state.range(0)), rng);
    const Matrix2 kernel = random_matrix(3, rng);
    for (auto _ : state) {
        benchmark::DoNotOptimize(conv2d_valid(input, kernel, false));
    }
}
BENCHMARK(BM_conv2d_valid)->Arg(14)->Arg(28);

static void BM_conv2d_full(benchmark::State& state) {
    RngStream rng(2);
    const Matrix2 input = random_matrix(static_cast<std::size_t>(state.range(0)), rng);
    const Matrix2 kernel = random_matrix(3, rng);
    for (auto _ : state) {
        benchmark::DoNotOptimize(conv2d_full(input, kernel));
    }
}
BENCHMARK(BM_conv2d_full)->Arg(12)->Arg(26);

static void BM_softmax(benchmark::State& state) {
    RngStream rng(3);
    std::vector<double> z(static_cast<std::size_t>(state.range(0)));
    for (double& x : z) {
        x = sample_gaussian(0.0, 4.0, rng);
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(softmax(z));
    }
}
BENCHMARK(BM_softmax)->Arg(36);

static void BM_gaussian_sampling(benchmark::State& state) {
    RngStream rng(4);
    for (auto _ : state) {
        benchmark::DoNotOptimize(sample_gaussian(0.0, 1.0, rng));
    }
}
BENCHMARK(BM_gaussian_sampling);
