#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "mdbgp/graph.hpp"
#include "mdbgp/solver.hpp"
#include "mdbgp/weights.hpp"

// Turning fractional solutions into partitions: randomized rounding for two
// parts, recursive bisection for general k, and the hashing baseline.

namespace mdbgp {

struct Partition {
  std::size_t k = 1;
  std::vector<std::uint32_t> assignment;  // per-vertex part index in [0, k)
  // Provenance.
  std::string algorithm;
  std::uint64_t seed = 0;
  std::string config_digest;
};

// Round a fractional point to two parts: vertex i lands in part 0 with
// probability (1 + x_i) / 2, independently, via counter-based randomness
// (deterministic in (seed, salt), thread-count invariant).
Partition randomized_round(std::span<const double> x, std::uint64_t seed,
                           std::uint64_t salt = 0);

struct RoundOutcome {
  Partition partition;
  // All per-dimension deviations |<w^j,s> - b_j| / W_j (s = +-1 signs) met
  // the acceptance slack epsilon + 4*sqrt(max_i w^j_i / W_j).
  bool satisfied = false;
  double worst_excess = 0.0;  // max_j (deviation_j - slack_j), <= 0 when satisfied
  std::size_t uncut = 0;
};

// Best of `trials` independent roundings: among those meeting the balance
// slack, the one keeping the most edges; otherwise the least-violating one
// with satisfied=false.  Trial salts are 0..trials-1 over `seed`.  The
// default per-dimension acceptance threshold is the rounding slack
// epsilon + 4*sqrt(max_i w^j_i / W_j); a non-empty `allowance` replaces it
// with explicit thresholds on the normalized deviations (the recursive
// partitioner passes epsilon + 1e-9 so the splits it commits to stay
// strictly within the requested tolerance).
RoundOutcome round_best_of(const Graph& g, const WeightSet& ws,
                           std::span<const double> shifts, double epsilon,
                           std::span<const double> x, std::size_t trials,
                           std::uint64_t seed,
                           std::span<const double> allowance = {});

struct PartitionConfig {
  GdConfig gd;
  std::size_t round_trials = 32;
};

// Recursive bisection to k parts.  Each node splits its k into
// kl = ceil(k/2) and kr = floor(k/2) parts, solving a bisection whose slab
// centers are shifted to b_j = ((kl - kr) / k) * W_j(subgraph) so the two
// sides receive kl/k and kr/k of each weight total; children recurse on the
// induced subgraphs with seeds (root_seed XOR path-code), path codes 0 at
// the root, then 2p+1 / 2p+2.  The node's rounding uses
// rng::derive(node_seed, 1).  k=1 returns the single-part partition without
// solving.  Infeasible subproblems raise InfeasibleError naming the path.
// When root_trace is non-null it receives the root bisection's iteration
// trace (empty for k=1).
Partition recursive_partition(const Graph& g, const WeightSet& ws,
                              std::size_t k, const PartitionConfig& cfg,
                              IterationTrace* root_trace = nullptr);

// Baseline: part = mix(seed, external_id) mod k with a fixed splitmix-style
// 64-bit finalizer, reproducible across platforms.
Partition hash_partition(const Graph& g, std::size_t k, std::uint64_t seed);

// TSV "external_id<TAB>part_index", one vertex per line, sorted by external
// id.
void save_partition(const Graph& g, const Partition& p, std::ostream& out);

// Inverse of save_partition; every graph vertex must appear exactly once.
// k is taken as max part index + 1 (or `expect_k` when nonzero, validated).
Partition load_partition(std::istream& in, const Graph& g,
                         std::size_t expect_k = 0);

}  // namespace mdbgp
