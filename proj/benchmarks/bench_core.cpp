// Timings for the main numerical kernels on the heat and wave instances.

#include "bilinctl/dynamics.hpp"
#include "bilinctl/objective.hpp"
#include "bilinctl/problems.hpp"

#include <benchmark/benchmark.h>

#include <cmath>

namespace {

using namespace bilinctl;

ProblemInstance heat_instance(int n, int m) {
    HeatConfig c;
    c.N = n;
    c.M = m;
    return build_heat(c);
}

ProblemInstance wave_instance(int m) {
    WaveConfig c;
    c.M = m;
    return build_wave(c);
}

ControlSignal smooth_control(const TimeGrid& grid, double offset, double amp, double freq) {
    Eigen::VectorXd u(grid.nodes());
    for (int i = 0; i <= grid.M; ++i) u[i] = offset + amp * std::sin(freq * grid.node(i));
    return ControlSignal(grid, u);
}

void BM_HeatStateSolve(benchmark::State& state) {
    const ProblemInstance p = heat_instance(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)));
    const ControlSignal u = smooth_control(p.grid, 0.2, 0.3, 3.0);
    for (auto _ : state) benchmark::DoNotOptimize(solve_state(p, u));
}
BENCHMARK(BM_HeatStateSolve)->Args({8, 1024})->Args({16, 1024})->Args({8, 4096});

void BM_HeatGradient(benchmark::State& state) {
    const ProblemInstance p = heat_instance(8, static_cast<int>(state.range(0)));
    const ControlSignal u = smooth_control(p.grid, 0.2, 0.3, 3.0);
    for (auto _ : state) {
        const Trajectory psi = solve_state(p, u);
        const AdjointSolution adj = solve_adjoint(p, u, psi);
        benchmark::DoNotOptimize(discrete_gradient_density(p, u, psi, adj.multiplier));
    }
}
BENCHMARK(BM_HeatGradient)->Arg(256)->Arg(1024);

void BM_HeatGohEquivalence(benchmark::State& state) {
    const ProblemInstance p = heat_instance(8, static_cast<int>(state.range(0)));
    const ControlSignal u = smooth_control(p.grid, 0.2, 0.3, 3.0);
    const ControlSignal v = smooth_control(p.grid, 0.0, 1.0, 2.0 * M_PI);
    for (auto _ : state) benchmark::DoNotOptimize(goh_equivalence(p, u, v));
}
BENCHMARK(BM_HeatGohEquivalence)->Arg(256)->Arg(1024);

void BM_WaveStateSolve(benchmark::State& state) {
    const ProblemInstance p = wave_instance(static_cast<int>(state.range(0)));
    const ControlSignal u = smooth_control(p.grid, 0.2, 0.3, 3.0);
    for (auto _ : state) benchmark::DoNotOptimize(solve_state(p, u));
}
BENCHMARK(BM_WaveStateSolve)->Arg(256)->Arg(1024);

}  // namespace

BENCHMARK_MAIN();
