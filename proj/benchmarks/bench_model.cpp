#include <benchmark/benchmark.h>

#include "ltear/analytic.hpp"
#include "ltear/oracles.hpp"
#include "ltear/sim.hpp"

namespace {

void BM_SolveTotalRate(benchmark::State& state) {
    ltear::SystemConfig cfg;
    cfg.rao_period = static_cast<int>(state.range(0));
    const double rate = state.range(1) / 1000.0;
    for (auto _ : state) benchmark::DoNotOptimize(ltear::analytic::solve_total_rate(rate, cfg));
}
BENCHMARK(BM_SolveTotalRate)->Args({5, 1000})->Args({5, 2500})->Args({1, 3000});

void BM_ChainClosedForm(benchmark::State& state) {
    const int w = static_cast<int>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(ltear::analytic::chain_steady_state(0.3, 0.1, 9, w));
}
BENCHMARK(BM_ChainClosedForm)->Arg(20)->Arg(200);

void BM_ChainLinearSolve(benchmark::State& state) {
    const int w = static_cast<int>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(ltear::oracles::chain_linear_solve(0.3, 0.1, 9, w));
}
BENCHMARK(BM_ChainLinearSolve)->Arg(5)->Arg(20)->Unit(benchmark::kMillisecond);

// one simulated second
void BM_SimSecond(benchmark::State& state) {
    ltear::sim::SimConfig cfg;
    cfg.duration = 1000;
    cfg.warmup = 0;
    const double rate = state.range(0) / 1000.0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(ltear::sim::run(cfg, rate));
        ++cfg.seed;
    }
}
BENCHMARK(BM_SimSecond)->Arg(1000)->Arg(2500)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
