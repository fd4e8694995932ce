#include "meanforce/langevin.hpp"
#include "meanforce/oracle.hpp"
#include "meanforce/response.hpp"
#include "meanforce/thermo.hpp"

#include "support/reference_models.hpp"

#include <benchmark/benchmark.h>

using namespace meanforce;

namespace {

void BM_GreenTensor(benchmark::State& state) {
    const auto model = testing::reference_model();
    double w = 0.1;
    for (auto _ : state) {
        benchmark::DoNotOptimize(green_tensor(model, w));
        w = w < 10.0 ? w * 1.01 : 0.1;
    }
}
BENCHMARK(BM_GreenTensor);

void BM_TraceKernel(benchmark::State& state) {
    const auto model = testing::reference_model();
    for (auto _ : state) benchmark::DoNotOptimize(mean_force_trace_kernel(model, 1.3));
}
BENCHMARK(BM_TraceKernel);

void BM_InternalEnergy(benchmark::State& state) {
    const auto model = testing::reference_model();
    for (auto _ : state) benchmark::DoNotOptimize(internal_energy_mean_force(model, 1.0));
}
BENCHMARK(BM_InternalEnergy)->Unit(benchmark::kMillisecond);

void BM_ThermoPoint(benchmark::State& state) {
    const auto model = testing::reference_model();
    for (auto _ : state) benchmark::DoNotOptimize(thermo_point(model, 1.0));
}
BENCHMARK(BM_ThermoPoint)->Unit(benchmark::kMillisecond);

void BM_Diagonalize(benchmark::State& state) {
    const auto model = testing::reference_model();
    const auto bath = build_discrete_bath(model, static_cast<int>(state.range(0)), default_bath_cutoff(model));
    for (auto _ : state) benchmark::DoNotOptimize(diagonalize(bath));
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Diagonalize)->Arg(250)->Arg(500)->Arg(1000)->Arg(2000)->Arg(4000)->Complexity()->Unit(benchmark::kMillisecond);

void BM_DiagonalizeDense(benchmark::State& state) {
    const auto model = testing::reference_model();
    const auto bath = build_discrete_bath(model, static_cast<int>(state.range(0)), default_bath_cutoff(model));
    for (auto _ : state) benchmark::DoNotOptimize(diagonalize_dense(bath));
}
BENCHMARK(BM_DiagonalizeDense)->Arg(100)->Arg(200)->Unit(benchmark::kMillisecond);

void BM_ExplicitBathSteps(benchmark::State& state) {
    const auto model = testing::reference_model();
    const auto bath = build_discrete_bath(model, static_cast<int>(state.range(0)), 54.0);
    BasicPhaseState<3> s;
    s.q = Vec3(1.0, 0.0, 0.0);
    s.bath = sample_bath_initials(bath, 10.0, 1);
    const int steps = 1000;
    for (auto _ : state) benchmark::DoNotOptimize(integrate_explicit_bath(bath, s, 0.02, steps));
    state.SetItemsProcessed(state.iterations() * steps);
}
BENCHMARK(BM_ExplicitBathSteps)->Arg(300)->Arg(1000)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
