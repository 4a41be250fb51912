#include "spikebox/extension.hpp"
#include "spikebox/linear.hpp"
#include "spikebox/operators.hpp"
#include "spikebox/semilinear.hpp"

#include <benchmark/benchmark.h>

using namespace spikebox;

static void BM_TransformRoundTrip(benchmark::State& state) {
  auto dom = RectDomain::unit_box(2, static_cast<int>(state.range(0)));
  SpectralField u = random_bandlimited(dom, dom->cutoff(0), 1);
  for (auto _ : state) {
    SpectralField back = to_spectral(to_nodal(u));
    benchmark::DoNotOptimize(back.coeff.data());
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_TransformRoundTrip)->RangeMultiplier(2)->Range(32, 256)->Complexity();

static void BM_FracApply(benchmark::State& state) {
  auto dom = RectDomain::unit_box(2, 128);
  SpectralField u = random_bandlimited(dom, 128, 2);
  for (auto _ : state) {
    SpectralField v = frac_apply(u, 0.3, 0.5);
    benchmark::DoNotOptimize(v.coeff.data());
  }
}
BENCHMARK(BM_FracApply);

static void BM_SubordinationRoute(benchmark::State& state) {
  auto dom = RectDomain::unit_box(2, 64);
  SpectralField u = random_bandlimited(dom, 24, 3);
  for (auto _ : state) {
    auto v = semigroup_route_frac_half(u, 0.3);
    benchmark::DoNotOptimize(v.field.coeff.data());
  }
}
BENCHMARK(BM_SubordinationRoute);

static void BM_HeatKernelEval(benchmark::State& state) {
  auto dom = RectDomain::unit_box(2, 64);
  const std::vector<double> x{0.387, 0.544}, z{0.21, 0.9};
  double t = 1e-3;
  for (auto _ : state) {
    benchmark::DoNotOptimize(heat_kernel(*dom, t, x, z).value);
  }
}
BENCHMARK(BM_HeatKernelEval);

static void BM_PoissonSubordinated(benchmark::State& state) {
  auto dom = RectDomain::unit_box(2, 64);
  const std::vector<double> x{0.387, 0.544}, z{0.21, 0.9};
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        poisson_kernel(*dom, 0.05, x, z, PoissonRoute::subordinated).value);
  }
}
BENCHMARK(BM_PoissonSubordinated);

static void BM_GradEnergy(benchmark::State& state) {
  auto dom = RectDomain::unit_box(2, static_cast<int>(state.range(0)));
  SpectralField u = random_bandlimited(dom, 16, 4);
  u.coeff[0] = 1.0;
  for (auto _ : state) {
    SpectralField g = grad_energy(u, 0.05, 2.0);
    benchmark::DoNotOptimize(g.coeff.data());
  }
}
BENCHMARK(BM_GradEnergy)->Arg(64)->Arg(128);

static void BM_SolveSpike(benchmark::State& state) {
  SemilinearConfig cfg;
  cfg.domain = RectDomain::unit_box(2, static_cast<int>(state.range(0)));
  cfg.eps = 0.05;
  cfg.p = 2.0;
  for (auto _ : state) {
    SolutionReport rep = solve(cfg);
    benchmark::DoNotOptimize(rep.energy);
  }
}
BENCHMARK(BM_SolveSpike)->Arg(48)->Unit(benchmark::kMillisecond)->Iterations(1);

BENCHMARK_MAIN();
