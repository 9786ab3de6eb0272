#include "mdbgp/partition.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "mdbgp/errors.hpp"
#include "mdbgp/metrics.hpp"
#include "mdbgp/parallel.hpp"
#include "mdbgp/rng.hpp"

namespace mdbgp {

Partition randomized_round(std::span<const double> x, std::uint64_t seed,
                           std::uint64_t salt) {
  Partition p;
  p.k = 2;
  p.algorithm = "randomized-round";
  p.seed = seed;
  p.assignment.resize(x.size());
  par::parallel_for(x.size(), [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      const double prob0 = 0.5 * (1.0 + x[i]);
      const double u = rng::counter_uniform(seed, salt, i);
      p.assignment[i] = u < prob0 ? 0U : 1U;
    }
  });
  return p;
}

RoundOutcome round_best_of(const Graph& g, const WeightSet& ws,
                           std::span<const double> shifts, double epsilon,
                           std::span<const double> x, std::size_t trials,
                           std::uint64_t seed,
                           std::span<const double> allowance) {
  if (trials < 1) throw ValidationError("round_best_of: trials must be >= 1");
  if (x.size() != ws.n || ws.n != g.n) {
    throw ValidationError("round_best_of: size mismatch");
  }
  const std::size_t d = ws.dims();
  if (!shifts.empty() && shifts.size() != d) {
    throw ValidationError("round_best_of: shifts size mismatch");
  }
  if (!allowance.empty() && allowance.size() != d) {
    throw ValidationError("round_best_of: allowance size mismatch");
  }

  // Acceptance threshold per dimension: by default epsilon plus the
  // concentration width of independent +-w_i coordinate sums.
  std::vector<double> slack(d);
  for (std::size_t j = 0; j < d; ++j) {
    if (!allowance.empty()) {
      slack[j] = allowance[j];
      continue;
    }
    double maxw = 0.0;
    for (double w : ws.rows[j]) maxw = std::max(maxw, w);
    slack[j] =
        epsilon + (ws.totals[j] > 0.0 ? 4.0 * std::sqrt(maxw / ws.totals[j])
                                      : 0.0);
  }

  RoundOutcome best;
  bool have = false;
  for (std::size_t trial = 0; trial < trials; ++trial) {
    Partition p = randomized_round(x, seed, trial);
    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < d; ++j) {
      double s = 0.0;
      for (std::size_t i = 0; i < ws.n; ++i) {
        s += p.assignment[i] == 0 ? ws.rows[j][i] : -ws.rows[j][i];
      }
      const double b = shifts.empty() ? 0.0 : shifts[j];
      const double dev =
          ws.totals[j] > 0.0 ? std::abs(s - b) / ws.totals[j] : 0.0;
      worst = std::max(worst, dev - slack[j]);
    }
    const bool ok = worst <= 0.0;
    const std::size_t uncut = count_uncut(g, p.assignment);

    const bool take =
        !have ||
        (ok && (!best.satisfied || uncut > best.uncut)) ||
        (!ok && !best.satisfied && worst < best.worst_excess);
    if (take) {
      best.partition = std::move(p);
      best.satisfied = ok;
      best.worst_excess = worst;
      best.uncut = uncut;
      have = true;
    }
  }
  best.partition.algorithm = "round-best-of";
  best.partition.config_digest = "trials=" + std::to_string(trials);
  return best;
}

namespace {

struct RecursionCtx {
  const PartitionConfig* cfg = nullptr;
  std::vector<std::uint32_t>* assignment = nullptr;
  IterationTrace* root_trace = nullptr;
};

// Partition `sub` (whose vertices map to original ids via to_parent) into
// parts [part_base, part_base + k).
void bisect_node(const RecursionCtx& ctx, const Graph& sub,
                 const WeightSet& ws, const std::vector<VertexId>& to_parent,
                 std::size_t k, std::uint32_t part_base, std::uint64_t path) {
  if (k == 1 || sub.n == 0) {
    for (VertexId v : to_parent) (*ctx.assignment)[v] = part_base;
    return;
  }
  const std::size_t kl = (k + 1) / 2;
  const std::size_t kr = k - kl;
  const std::size_t d = ws.dims();

  std::vector<double> beta(d);
  const double prop = static_cast<double>(kl - kr) / static_cast<double>(k);
  for (std::size_t j = 0; j < d; ++j) beta[j] = prop * ws.totals[j];

  GdConfig gd = ctx.cfg->gd;
  gd.seed = ctx.cfg->gd.seed ^ path;
  gd.shifts = beta;

  // The split committed to the recursion must honor the slab strictly, not
  // just the rounding's statistical slack: pick the best trial among the
  // strictly balanced ones.  None strictly balanced means the requested
  // tolerance is unreachable here (e.g. splitting an odd unit total in half
  // with epsilon = 0) or the trial budget was too small.
  const std::vector<double> strict(d, gd.epsilon + 1e-9);
  RoundOutcome rounded;
  try {
    GdOutput run = run_gd(sub, ws, gd);
    if (path == 0 && ctx.root_trace != nullptr) {
      *ctx.root_trace = std::move(run.trace);
    }
    rounded = round_best_of(sub, ws, beta, gd.epsilon, run.solution.x,
                            ctx.cfg->round_trials, rng::derive(gd.seed, 1),
                            strict);
  } catch (const InfeasibleError& e) {
    throw InfeasibleError(std::string(e.what()) + " [recursion path " +
                          std::to_string(path) + ", k=" + std::to_string(k) +
                          "]");
  }
  if (!rounded.satisfied) {
    throw InfeasibleError(
        "recursive_partition: no rounding met the balance tolerance "
        "(worst normalized deviation " +
        std::to_string(rounded.worst_excess + gd.epsilon) +
        " of epsilon " + std::to_string(gd.epsilon) +
        "; more rounding trials may help) [recursion path " +
        std::to_string(path) + ", k=" + std::to_string(k) + "]");
  }

  std::vector<VertexId> left, right;
  left.reserve(sub.n);
  for (std::size_t i = 0; i < sub.n; ++i) {
    (rounded.partition.assignment[i] == 0 ? left : right)
        .push_back(static_cast<VertexId>(i));
  }

  const auto recurse = [&](const std::vector<VertexId>& members, std::size_t kk,
                           std::uint32_t base, std::uint64_t child_path) {
    if (members.empty()) return;  // empty side: its parts stay empty
    Subgraph child = induced_subgraph(sub, members);
    WeightSet child_ws = restrict_weights(ws, members);
    std::vector<VertexId> child_parent(members.size());
    for (std::size_t i = 0; i < members.size(); ++i) {
      child_parent[i] = to_parent[members[i]];
    }
    bisect_node(ctx, child.graph, child_ws, child_parent, kk, base, child_path);
  };
  recurse(left, kl, part_base, 2 * path + 1);
  recurse(right, kr, part_base + static_cast<std::uint32_t>(kl), 2 * path + 2);
}

}  // namespace

Partition recursive_partition(const Graph& g, const WeightSet& ws,
                              std::size_t k, const PartitionConfig& cfg,
                              IterationTrace* root_trace) {
  if (k < 1) throw ValidationError("recursive_partition: k must be >= 1");
  if (k > std::max<std::size_t>(g.n, 1)) {
    throw ValidationError("recursive_partition: k exceeds vertex count");
  }
  if (ws.n != g.n) {
    throw ValidationError("recursive_partition: weights do not match graph");
  }

  Partition p;
  p.k = k;
  p.algorithm = "gd-recursive-bisection";
  p.seed = cfg.gd.seed;
  p.config_digest = "iterations=" + std::to_string(cfg.gd.iterations) +
                    ",epsilon=" + std::to_string(cfg.gd.epsilon) +
                    ",projection=" + to_string(cfg.gd.projection) +
                    ",trials=" + std::to_string(cfg.round_trials);
  p.assignment.assign(g.n, 0);
  if (root_trace != nullptr) root_trace->records.clear();
  if (k == 1 || g.n == 0) return p;

  std::vector<VertexId> all(g.n);
  for (std::size_t i = 0; i < g.n; ++i) all[i] = static_cast<VertexId>(i);
  RecursionCtx ctx{&cfg, &p.assignment, root_trace};
  bisect_node(ctx, g, ws, all, k, 0, 0);
  return p;
}

Partition hash_partition(const Graph& g, std::size_t k, std::uint64_t seed) {
  if (k < 1) throw ValidationError("hash_partition: k must be >= 1");
  Partition p;
  p.k = k;
  p.algorithm = "hash";
  p.seed = seed;
  p.assignment.resize(g.n);
  par::parallel_for(g.n, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      p.assignment[i] =
          static_cast<std::uint32_t>(rng::derive(seed, g.external_ids[i]) % k);
    }
  });
  return p;
}

void save_partition(const Graph& g, const Partition& p, std::ostream& out) {
  if (p.assignment.size() != g.n) {
    throw ValidationError("save_partition: assignment does not match graph");
  }
  std::vector<std::pair<ExternalId, std::uint32_t>> rows(g.n);
  for (std::size_t i = 0; i < g.n; ++i) {
    rows[i] = {g.external_ids[i], p.assignment[i]};
  }
  std::sort(rows.begin(), rows.end());
  for (const auto& [ext, part] : rows) {
    out << ext << '\t' << part << '\n';
  }
}

Partition load_partition(std::istream& in, const Graph& g,
                         std::size_t expect_k) {
  Partition p;
  p.algorithm = "loaded";
  p.assignment.assign(g.n, 0);
  std::vector<std::uint8_t> seen(g.n, 0);
  std::string line;
  std::size_t lineno = 0, assigned = 0;
  std::uint32_t max_part = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    ExternalId ext = 0;
    std::uint64_t part = 0;
    if (!(ls >> ext >> part)) {
      throw ParseError("partition line " + std::to_string(lineno) +
                       ": expected \"external_id part_index\"");
    }
    std::string extra;
    if (ls >> extra) {
      throw ParseError("partition line " + std::to_string(lineno) +
                       ": trailing content \"" + extra + "\"");
    }
    const auto it = g.external_to_internal.find(ext);
    if (it == g.external_to_internal.end()) {
      throw ValidationError("partition line " + std::to_string(lineno) +
                            ": vertex " + std::to_string(ext) +
                            " is not in the graph");
    }
    if (seen[it->second]) {
      throw ValidationError("partition line " + std::to_string(lineno) +
                            ": vertex " + std::to_string(ext) +
                            " assigned twice");
    }
    if (part > 0xFFFFFFFFULL) {
      throw ValidationError("partition line " + std::to_string(lineno) +
                            ": part index out of range");
    }
    seen[it->second] = 1;
    p.assignment[it->second] = static_cast<std::uint32_t>(part);
    max_part = std::max(max_part, static_cast<std::uint32_t>(part));
    ++assigned;
  }
  if (assigned != g.n) {
    throw ValidationError("partition file covers " + std::to_string(assigned) +
                          " of " + std::to_string(g.n) + " vertices");
  }
  p.k = g.n == 0 ? std::max<std::size_t>(1, expect_k) : max_part + 1;
  if (expect_k != 0) {
    if (p.k > expect_k) {
      throw ValidationError("partition uses part index " +
                            std::to_string(max_part) + " but k=" +
                            std::to_string(expect_k));
    }
    p.k = expect_k;
  }
  return p;
}

}  // namespace mdbgp
