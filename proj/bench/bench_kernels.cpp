// Microbenchmarks for the hot kernels: the serial and OpenMP variants of the
// tail-recursion row update, and the aggregated per-site particle evolution.
#include <benchmark/benchmark.h>

#include <vector>

#include "brw/exact.hpp"
#include "brw/mc.hpp"
#include "brw/model.hpp"
#include "brw/rng.hpp"

namespace {

brw::BrwParams bench_params(long long n) {
    return brw::make_params<double>(
        n, 0.0, brw::near_critical_family("binary", 0.0, n),
        brw::simple_step<double>());
}

std::vector<double> seed_row(long long width) {
    std::vector<double> row(static_cast<std::size_t>(width));
    for (long long i = 0; i < width; ++i)
        row[static_cast<std::size_t>(i)] = 1.0 / (1.0 + static_cast<double>(i));
    return row;
}

void BM_w_step_serial(benchmark::State& state) {
    const auto params = bench_params(100);
    const auto prev = seed_row(state.range(0));
    std::vector<double> next(prev.size());
    for (auto _ : state) {
        brw::w_step_serial(prev, params, next);
        benchmark::DoNotOptimize(next.data());
        benchmark::ClobberMemory();
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_w_step_parallel(benchmark::State& state) {
    const auto params = bench_params(100);
    const auto prev = seed_row(state.range(0));
    std::vector<double> next(prev.size());
    for (auto _ : state) {
        brw::w_step_parallel(prev, params, next);
        benchmark::DoNotOptimize(next.data());
        benchmark::ClobberMemory();
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_evolve_generations(benchmark::State& state) {
    const auto params = bench_params(state.range(0));
    brw::Philox4x32 gen(12345, 0);
    const int gens = 10;
    for (auto _ : state) {
        brw::Population pop(params.n);
        bool alive = true;
        for (int g = 0; g < gens && alive; ++g)
            alive = brw::evolve_generation(pop, params, gen,
                                           brw::kDefaultParticleCap);
        benchmark::DoNotOptimize(pop.total());
    }
    state.SetItemsProcessed(state.iterations() * gens);
}

}  // namespace

BENCHMARK(BM_w_step_serial)->Arg(1 << 12)->Arg(1 << 15)->Arg(1 << 18);
BENCHMARK(BM_w_step_parallel)->Arg(1 << 12)->Arg(1 << 15)->Arg(1 << 18);
BENCHMARK(BM_evolve_generations)->Arg(1000)->Arg(100000);

BENCHMARK_MAIN();
