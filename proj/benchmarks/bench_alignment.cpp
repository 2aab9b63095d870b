// Micro-benchmarks for the alignment losses and one training step.
// Complexity fits are reported by google-benchmark (oN / oNSquared).

#include <benchmark/benchmark.h>

#include "wahmvc/bench.hpp"
#include "wahmvc/dataset.hpp"
#include "wahmvc/geometry.hpp"
#include "wahmvc/training.hpp"

using namespace wahmvc;

namespace {

std::vector<Eigen::MatrixXd> random_views(Eigen::Index b, std::size_t views = 2, Eigen::Index r = 32) {
    const geometry::Curvature k;
    std::vector<Eigen::MatrixXd> out;
    for (std::size_t m = 0; m < views; ++m)
        out.push_back(geometry::wrapped_normal_sample(geometry::origin(r, k), 1.0, b, k, 17 + m));
    return out;
}

void BM_hhsw(benchmark::State& state) {
    const auto views = random_views(state.range(0));
    bench::BenchConfig cfg;
    for (auto _ : state) benchmark::DoNotOptimize(bench::alignment_once(bench::LossKind::hhsw, views, cfg));
    state.SetComplexityN(state.range(0));
}

void BM_hcl(benchmark::State& state) {
    const auto views = random_views(state.range(0));
    bench::BenchConfig cfg;
    for (auto _ : state) benchmark::DoNotOptimize(bench::alignment_once(bench::LossKind::hcl, views, cfg));
    state.SetComplexityN(state.range(0));
}

void BM_hhsw_views(benchmark::State& state) {
    const auto views = random_views(512, static_cast<std::size_t>(state.range(0)));
    bench::BenchConfig cfg;
    for (auto _ : state) benchmark::DoNotOptimize(bench::alignment_once(bench::LossKind::hhsw, views, cfg));
    state.counters["pairs"] = static_cast<double>(bench::pair_count(views.size()));
}

void BM_train_step(benchmark::State& state) {
    const auto data = data::generate_synthetic({});
    training::TrainConfig cfg;
    cfg.batch_size = state.range(0);
    training::TrainState ts = training::init_state(data, cfg);
    training::MultiViewBatch batch;
    for (const auto& v : data.views) batch.views.push_back(v.topRows(cfg.batch_size));
    const auto dirs = geometry::sample_directions(cfg.sw.directions, cfg.latent_dim, 1);
    for (auto _ : state) benchmark::DoNotOptimize(training::train_step(ts, batch, cfg, dirs).total);
}

}  // namespace

BENCHMARK(BM_hhsw)->RangeMultiplier(2)->Range(256, 4096)->Complexity(benchmark::oN)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_hcl)->RangeMultiplier(2)->Range(256, 4096)->Complexity(benchmark::oNSquared)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_hhsw_views)->DenseRange(2, 4, 1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_train_step)->Arg(32)->Arg(128)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
