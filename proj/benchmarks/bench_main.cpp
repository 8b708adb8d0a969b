#include "ckrf/cone_smoothing.hpp"
#include "ckrf/flow_engine.hpp"
#include "ckrf/ke_solver.hpp"
#include "ckrf/torus_field.hpp"

#include <benchmark/benchmark.h>

#include <cmath>
#include <numbers>

using namespace ckrf;

namespace {

ScalarField smooth(const Grid& g) {
    return ScalarField::from_function(g, [](Point s) {
        return std::sin(2 * std::numbers::pi * s.x) * std::cos(4 * std::numbers::pi * s.y);
    });
}

void BM_Laplacian(benchmark::State& st) {
    const Grid g(static_cast<int>(st.range(0)));
    const ScalarField f = smooth(g);
    for (auto _ : st) benchmark::DoNotOptimize(laplacian(f));
    st.SetComplexityN(st.range(0) * st.range(0));
}
BENCHMARK(BM_Laplacian)->RangeMultiplier(2)->Range(64, 512)->Complexity();

void BM_PoissonSolve(benchmark::State& st) {
    const Grid g(static_cast<int>(st.range(0)));
    const ScalarField f = smooth(g);
    for (auto _ : st) benchmark::DoNotOptimize(solve_poisson(f));
}
BENCHMARK(BM_PoissonSolve)->RangeMultiplier(2)->Range(64, 512);

void BM_Chi(benchmark::State& st) {
    double x = 0.0;
    for (auto _ : st) {
        x = x < 1.0 ? x + 1e-3 : 1e-4;
        benchmark::DoNotOptimize(chi(0.05, x, 0.3));
    }
}
BENCHMARK(BM_Chi);

void BM_NewtonSolve(benchmark::State& st) {
    const KEProblem p = make_problem(FibrationModel{}, Grid(static_cast<int>(st.range(0))), 0.1);
    for (auto _ : st) benchmark::DoNotOptimize(newton_solve(p, ScalarField(p.bg.grid)));
    st.SetLabel("product model, eps 0.1");
}
BENCHMARK(BM_NewtonSolve)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_FlowStep(benchmark::State& st) {
    const KEProblem p = make_problem(FibrationModel{}, Grid(128), 0.1);
    const auto scheme = static_cast<Scheme>(st.range(0));
    FlowState s0{ScalarField(p.bg.grid), 0.0, p.epsilon, 0.05};
    if (scheme == Scheme::rk4_explicit) s0.dt = 0.5 * rk4_stable_dt(s0, p);
    for (auto _ : st) benchmark::DoNotOptimize(step(s0, p, scheme));
    st.SetLabel(to_string(scheme));
}
BENCHMARK(BM_FlowStep)
    ->Arg(static_cast<int>(Scheme::backward_euler_newton))
    ->Arg(static_cast<int>(Scheme::rk4_explicit))
    ->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
