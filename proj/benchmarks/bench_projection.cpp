// Micro-benchmarks for the projection kernels: exact one- and
// two-dimensional KKT searches and the Dykstra iteration, across input
// sizes.  Inputs are deterministic; targets are taken from a feasible box
// point so every projection succeeds.

#include <benchmark/benchmark.h>

#include <cstdint>
#include <vector>

#include "mdbgp/projection.hpp"
#include "mdbgp/rng.hpp"
#include "mdbgp/weights.hpp"

namespace {

std::vector<double> uniform(std::size_t n, double lo, double hi,
                            std::uint64_t seed, std::uint64_t salt) {
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) {
    v[i] = lo + (hi - lo) * mdbgp::rng::counter_uniform(seed, salt, i);
  }
  return v;
}

struct Fixture {
  std::vector<double> y, w1, w2;
  double c1 = 0.0, c2 = 0.0;
  mdbgp::WeightSet ws;

  explicit Fixture(std::size_t n, std::size_t d) {
    y = uniform(n, -2.0, 2.0, 77, 1);
    w1 = uniform(n, 0.05, 1.0, 77, 2);
    w2 = uniform(n, 0.05, 1.0, 77, 3);
    const std::vector<double> x0 = uniform(n, -1.0, 1.0, 77, 4);
    for (std::size_t i = 0; i < n; ++i) {
      c1 += w1[i] * x0[i];
      c2 += w2[i] * x0[i];
    }
    ws.n = n;
    ws.append_row(w1, "w1");
    if (d > 1) ws.append_row(w2, "w2");
  }
};

void BM_ProjectExact1D(benchmark::State& state) {
  const Fixture fx(static_cast<std::size_t>(state.range(0)), 1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        mdbgp::project_exact_1d(fx.y, fx.w1, fx.c1));
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_ProjectExact1D)->RangeMultiplier(4)->Range(1 << 10, 1 << 20)
    ->Complexity(benchmark::oNLogN);

void BM_ProjectExact2D(benchmark::State& state) {
  const Fixture fx(static_cast<std::size_t>(state.range(0)), 2);
  std::uint64_t seed = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        mdbgp::project_exact_2d(fx.y, fx.w1, fx.w2, fx.c1, fx.c2, seed++));
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_ProjectExact2D)->RangeMultiplier(4)->Range(1 << 10, 1 << 20)
    ->Complexity(benchmark::oNLogN);

void BM_Dykstra(benchmark::State& state) {
  const Fixture fx(static_cast<std::size_t>(state.range(0)), 2);
  mdbgp::BalanceSpec spec;
  spec.weights = &fx.ws;
  spec.epsilon = 0.05;
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        mdbgp::dykstra_projection(fx.y, spec, 1e-8, 400000));
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Dykstra)->RangeMultiplier(4)->Range(1 << 10, 1 << 18)
    ->Complexity();

}  // namespace
