#include <memory>
#include <random>

#include <benchmark/benchmark.h>

#include "fracspec/forward_solver.hpp"
#include "fracspec/recovery.hpp"
#include "fracspec/wave_bridge.hpp"

using namespace fracspec;

namespace {

struct Setup {
    std::shared_ptr<const SpectralManifold> m;
    Patch patch;
    TimeGrid grid;
    SpaceTimeSource src;
};

Setup make_setup(int n_steps, double t_max) {
    ManifoldSpec spec;
    spec.n_modes = 121;
    auto m = std::make_shared<const SpectralManifold>(build_manifold(spec));
    RegionSpec r;
    r.kind = RegionSpec::Kind::Rectangle;
    r.hi1 = 3.141592653589793;
    r.hi2 = 3.141592653589793;
    Patch p = make_patch(m, r);
    const TimeGrid g{t_max, n_steps};
    std::mt19937_64 rng(5);
    std::normal_distribution<double> nd;
    Eigen::VectorXd xi(p.size());
    for (int i = 0; i < p.size(); ++i) xi(i) = nd(rng);
    SpaceTimeSource f(p, g);
    const ProbeProfile a = bump_probe(0.1 * t_max, 0.6 * t_max);
    f.add_term({a.a, a.a_dot, xi});
    return {m, p, g, f};
}

void BM_ForwardSolve(benchmark::State& state) {
    const auto exec = state.range(0) ? Execution::Parallel : Execution::Serial;
    const Setup s = make_setup(static_cast<int>(state.range(1)), 1.0);
    const ForwardSolver solver(s.m, 0.5, 1.0, s.grid, exec);
    for (auto _ : state) benchmark::DoNotOptimize(solver.solve(s.src).coeffs.data());
}

void BM_SolverSetup(benchmark::State& state) {
    const auto exec = state.range(0) ? Execution::Parallel : Execution::Serial;
    const Setup s = make_setup(static_cast<int>(state.range(1)), 1.0);
    for (auto _ : state) {
        ForwardSolver solver(s.m, 0.5, 1.0, s.grid, exec);
        benchmark::DoNotOptimize(&solver);
    }
}

void BM_HypApply(benchmark::State& state) {
    const auto exec = state.range(0) ? Execution::Parallel : Execution::Serial;
    const Setup s = make_setup(static_cast<int>(state.range(1)), 6.0);
    const SpectralData ex = exact_spectral_data(s.patch, 1.0);
    for (auto _ : state) benchmark::DoNotOptimize(hyp_apply(ex, s.src, exec).values.data());
}

void BM_WaveOracle(benchmark::State& state) {
    const auto exec = state.range(0) ? Execution::Parallel : Execution::Serial;
    const Setup s = make_setup(static_cast<int>(state.range(1)), 6.0);
    for (auto _ : state) benchmark::DoNotOptimize(wave_oracle(s.src, exec).values.data());
}

}  // namespace

// Arg 0: 0 serial, 1 parallel. Arg 1: n_steps.
BENCHMARK(BM_ForwardSolve)->ArgsProduct({{0, 1}, {1024, 2048}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SolverSetup)->ArgsProduct({{0, 1}, {1024, 2048}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_HypApply)->ArgsProduct({{0, 1}, {2048}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_WaveOracle)->ArgsProduct({{0, 1}, {2048}})->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
