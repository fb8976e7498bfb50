#include "droopkit/looptune.hpp"
#include "droopkit/simcore.hpp"
#include "droopkit/stability.hpp"

#include <benchmark/benchmark.h>

using namespace droopkit;

namespace {

Scenario droop_scenario(double t_end) {
    Scenario s;
    s.dt = 1e-6;
    s.t_end = t_end;
    s.p_load = 3600.0;
    s.droop_mode = DroopMode::vp;
    s.droop_coef = 10.0 / 3600.0;
    return s;
}

void BM_SimulateStep(benchmark::State& state) {
    const auto sc = droop_scenario(0.05);
    std::size_t steps = 0;
    for (auto _ : state) {
        auto tr = run_scenario(sc);
        benchmark::DoNotOptimize(tr.v_bus.data());
        steps += static_cast<std::size_t>(sc.t_end / sc.dt);
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(steps));
}
BENCHMARK(BM_SimulateStep)->Unit(benchmark::kMillisecond);

void BM_BodeSweep(benchmark::State& state) {
    const auto d = design_loops(ConverterParams{});
    for (auto _ : state) {
        auto sweep = bode(d.tv, 1.0, 1e6);
        benchmark::DoNotOptimize(sweep.data());
    }
}
BENCHMARK(BM_BodeSweep);

void BM_DesignLoops(benchmark::State& state) {
    const ConverterParams p;
    for (auto _ : state) benchmark::DoNotOptimize(design_loops(p));
}
BENCHMARK(BM_DesignLoops);

void BM_PredictInstability(benchmark::State& state) {
    const ConverterParams p;
    for (auto _ : state) benchmark::DoNotOptimize(predict_instability_power(p, 760e-6, 30.8e-6, 1.0));
}
BENCHMARK(BM_PredictInstability);

}  // namespace

BENCHMARK_MAIN();
