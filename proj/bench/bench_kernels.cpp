// Serial reference against the OpenMP paths for the two hot loops: the per-batch gradient
// and batched prediction. Thread count is the benchmark argument for the parallel variants.

#include <benchmark/benchmark.h>

#include <omp.h>

#include "glimmer/nn/batch.hpp"
#include "glimmer/nn/train.hpp"
#include "glimmer/random.hpp"

namespace {

using namespace glimmer;

std::vector<data::WindowSample> make_windows(std::size_t n) {
    const nn::ArchConfig arch;
    Rng rng(1);
    std::vector<data::WindowSample> out(n);
    for (auto& w : out) {
        w.x = Matrix(arch.input_len, arch.input_features);
        for (auto& v : w.x.data()) v = rng.normal();
        w.y.resize(arch.output_len);
        for (auto& v : w.y) v = rng.uniform(40, 400);
    }
    return out;
}

const nn::ModelParams& params() {
    static const nn::ModelParams p = [] {
        Rng rng(2);
        return nn::init_params(nn::ArchConfig{}, rng, 150.0);
    }();
    return p;
}

void BM_BatchGradientSerial(benchmark::State& state) {
    const auto windows = make_windows(48);
    std::vector<const data::WindowSample*> batch;
    for (const auto& w : windows) batch.push_back(&w);
    const loss::WeightedRegionLoss fn(loss::kPublishedWeights, {});
    nn::BatchWorkspace ws;
    for (auto _ : state) benchmark::DoNotOptimize(nn::batch_gradient_serial(params(), batch, fn, ws));
    state.SetItemsProcessed(state.iterations() * 48);
}

void BM_BatchGradientParallel(benchmark::State& state) {
    omp_set_num_threads(static_cast<int>(state.range(0)));
    const auto windows = make_windows(48);
    std::vector<const data::WindowSample*> batch;
    for (const auto& w : windows) batch.push_back(&w);
    const loss::WeightedRegionLoss fn(loss::kPublishedWeights, {});
    nn::BatchWorkspace ws;
    for (auto _ : state) benchmark::DoNotOptimize(nn::batch_gradient_parallel(params(), batch, fn, ws));
    state.SetItemsProcessed(state.iterations() * 48);
}

void BM_PredictSerial(benchmark::State& state) {
    const auto windows = make_windows(256);
    for (auto _ : state) benchmark::DoNotOptimize(nn::predict_batch_serial(params(), windows));
    state.SetItemsProcessed(state.iterations() * 256);
}

void BM_PredictParallel(benchmark::State& state) {
    omp_set_num_threads(static_cast<int>(state.range(0)));
    const auto windows = make_windows(256);
    for (auto _ : state) benchmark::DoNotOptimize(nn::predict_batch_parallel(params(), windows));
    state.SetItemsProcessed(state.iterations() * 256);
}

void thread_counts(benchmark::internal::Benchmark* b) {
    const int max = omp_get_num_procs();
    for (int t = 1; t <= max; t *= 2) b->Arg(t);
    if ((max & (max - 1)) != 0) b->Arg(max);
}

}  // namespace

BENCHMARK(BM_BatchGradientSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BatchGradientParallel)->Apply(thread_counts)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_PredictSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PredictParallel)->Apply(thread_counts)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
