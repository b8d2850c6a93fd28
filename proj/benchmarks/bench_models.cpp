#include <benchmark/benchmark.h>

#include "dfl/autoencoder.hpp"
#include "dfl/crbm.hpp"

using namespace dfl;

namespace {

Maps random_maps(std::size_t n, std::size_t side, RngStream& rng) {
    Maps v(n, Matrix2(side, side));
    for (auto& m : v) {
        for (double& x : m.data) {
            x = sample_gaussian(0.0, 1.0, rng);
        }
    }
    return v;
}

}  // namespace

static void BM_pool_posterior(benchmark::State& state) {
    RngStream rng(1);
    const Crbm m = make_crbm(28, 3, 28, 1, 2, VisibleMode::gaussian, rng);
    const Maps v = random_maps(1, 28, rng);
    for (auto _ : state) {
        benchmark::DoNotOptimize(pool_posterior(m, v));
    }
}
BENCHMARK(BM_pool_posterior);

static void BM_cd_step_layer1(benchmark::State& state) {
    RngStream rng(2);
    Crbm m = make_crbm(28, 3, 28, 1, 2, VisibleMode::gaussian, rng);
    std::vector<Maps> batch;
    for (int i = 0; i < 20; ++i) {
        batch.push_back(random_maps(1, 28, rng));
    }
    CdParams params;
    RngStream step_rng(3);
    for (auto _ : state) {
        cd_step(m, batch, params, step_rng);
    }
}
BENCHMARK(BM_cd_step_layer1)->Unit(benchmark::kMillisecond);

static void BM_cd_step_layer2(benchmark::State& state) {
    RngStream rng(4);
    Crbm m = make_crbm(14, 3, 36, 28, 2, VisibleMode::binary, rng);
    std::vector<Maps> batch;
    for (int i = 0; i < 20; ++i) {
        batch.push_back(random_maps(28, 14, rng));
    }
    CdParams params;
    RngStream step_rng(5);
    for (auto _ : state) {
        cd_step(m, batch, params, step_rng);
    }
}
BENCHMARK(BM_cd_step_layer2)->Unit(benchmark::kMillisecond);

static void BM_finetune_epoch(benchmark::State& state) {
    RngStream rng(6);
    PretrainSpec off;
    off.enabled = false;
    AutoencoderNet net = init_from_pretraining(144, {64, 25}, {}, off, rng);
    std::vector<std::vector<double>> data(100, std::vector<double>(144));
    for (auto& v : data) {
        for (double& x : v) {
            x = sample_gaussian(0.0, 1.0, rng);
        }
    }
    RngStream ft_rng(7);
    for (auto _ : state) {
        finetune(net, data, 1, 0.01, 20, ft_rng);
    }
}
BENCHMARK(BM_finetune_epoch)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
