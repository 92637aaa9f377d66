#include <benchmark/benchmark.h>

#include <vector>

#include "shbkit/config.hpp"

using namespace shbkit;

namespace {

std::vector<double> linspace(double lo, double hi, std::size_t n) {
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i)
        out[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    return out;
}

void BM_PredictHolePattern(benchmark::State& state) {
    HyperfineModel model;
    for (auto _ : state)
        benchmark::DoNotOptimize(predict_hole_pattern(model, 2.0, true));
}
BENCHMARK(BM_PredictHolePattern);

void BM_SynthesizeSpectrum(benchmark::State& state) {
    const auto pattern = predict_hole_pattern(HyperfineModel{}, 2.0, false);
    BroadeningParams broadening;
    ClassLifetimes lifetimes;
    const auto grid = linspace(-1e8, 1e8, state.range(0));
    for (auto _ : state)
        benchmark::DoNotOptimize(
            synthesize_spectrum(pattern, broadening, 1e-5, lifetimes, grid, 1.12, 0.3));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SynthesizeSpectrum)->Arg(201)->Arg(2001)->Arg(20001);

void BM_IntegratePumpWaitRead(benchmark::State& state) {
    RateParams params;
    const PumpSchedule schedule{1e-3 * state.range(0), 10e-3, 1.2e-3};
    for (auto _ : state)
        benchmark::DoNotOptimize(integrate(params, schedule, PopulationState{}));
}
BENCHMARK(BM_IntegratePumpWaitRead)->Arg(1)->Arg(10)->Arg(100);

void BM_HoleArea(benchmark::State& state) {
    RateParams params;
    for (auto _ : state)
        benchmark::DoNotOptimize(hole_area(params, {50e-3, 10e-3, 1.2e-3}));
}
BENCHMARK(BM_HoleArea);

void BM_SynthesizeFid(benchmark::State& state) {
    EnsembleSpec spec;
    const double tau = tau_fid(spec.gamma_hom_hz, spec.gamma_laser_hz);
    const auto times = linspace(0.0, 5.0 * tau, state.range(0));
    for (auto _ : state)
        benchmark::DoNotOptimize(synthesize_fid(spec, times));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SynthesizeFid)->Arg(16)->Arg(64)->Arg(256);

void BM_FitHole(benchmark::State& state) {
    const std::vector<double> truth{1.0e5, 746.10e3, -0.4, 1.12};
    Dataset data;
    for (double x : linspace(-5e6, 5e6, 201)) {
        data.x.push_back(x);
        data.y.push_back(models::lorentzian(x, truth));
    }
    for (auto _ : state)
        benchmark::DoNotOptimize(fit_hole(data.x, data.y));
}
BENCHMARK(BM_FitHole);

void BM_PhaseMemoryCurve(benchmark::State& state) {
    SdParams params;
    for (auto _ : state) {
        double acc = 0.0;
        for (double b = 0.0; b <= 2.0; b += 0.01) acc += t_m(b, 1.7, params);
        benchmark::DoNotOptimize(acc);
    }
}
BENCHMARK(BM_PhaseMemoryCurve);

void BM_FitSd(benchmark::State& state) {
    SdParams table;
    std::vector<CoherencePoint> data;
    for (double b : {0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0}) {
        const double t2 = t_m(b, 1.7, table);
        data.push_back({b, 1.7, t2, 0.01 * t2, CoherenceMethod::HoleBurning});
    }
    SdParams init = table;
    init.b_f *= 1.5;
    init.gamma0_hz *= 1.2;
    for (auto _ : state)
        benchmark::DoNotOptimize(fit_sd(data, init, {"a_d", "c0", "g_env"}));
}
BENCHMARK(BM_FitSd);

}  // namespace

BENCHMARK_MAIN();
