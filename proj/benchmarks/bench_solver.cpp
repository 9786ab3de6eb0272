// Micro-benchmarks for the solver building blocks: the adjacency
// matrix-vector product that dominates each gradient step, and full solver
// iterations on random graphs.

#include <benchmark/benchmark.h>

#include <cstdint>
#include <vector>

#include "mdbgp/graph.hpp"
#include "mdbgp/rng.hpp"
#include "mdbgp/solver.hpp"
#include "mdbgp/weights.hpp"

namespace {

mdbgp::Graph random_graph(std::size_t n, std::size_t target_m,
                          std::uint64_t seed) {
  std::vector<std::pair<mdbgp::VertexId, mdbgp::VertexId>> edges;
  edges.reserve(target_m);
  for (std::uint64_t i = 0; edges.size() < target_m; ++i) {
    const auto u = static_cast<mdbgp::VertexId>(mdbgp::rng::derive(seed, 2 * i) % n);
    const auto v =
        static_cast<mdbgp::VertexId>(mdbgp::rng::derive(seed, 2 * i + 1) % n);
    if (u != v) edges.emplace_back(u, v);
  }
  return mdbgp::graph_from_edges(n, edges);
}

void BM_AdjacencyMultiply(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  const mdbgp::Graph g = random_graph(n, 10 * n, 11);
  std::vector<double> x(g.n), out(g.n);
  for (std::size_t i = 0; i < g.n; ++i) {
    x[i] = 2.0 * mdbgp::rng::counter_uniform(12, 0, i) - 1.0;
  }
  for (auto _ : state) {
    mdbgp::adjacency_multiply(g, x, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) *
                          static_cast<std::int64_t>(g.m));
}
BENCHMARK(BM_AdjacencyMultiply)->RangeMultiplier(4)->Range(1 << 10, 1 << 18);

void BM_SolverIterations(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  const mdbgp::Graph g = random_graph(n, 10 * n, 13);
  const mdbgp::WeightSet ws = mdbgp::make_weight_set(g, "unit,degree");
  mdbgp::GdConfig cfg;
  cfg.iterations = 10;
  cfg.epsilon = 0.05;
  std::uint64_t seed = 0;
  for (auto _ : state) {
    cfg.seed = seed++;
    benchmark::DoNotOptimize(mdbgp::run_gd(g, ws, cfg));
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) * 10);
}
BENCHMARK(BM_SolverIterations)->RangeMultiplier(4)->Range(1 << 10, 1 << 16);

}  // namespace

BENCHMARK_MAIN();
