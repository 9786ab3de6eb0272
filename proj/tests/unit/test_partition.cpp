#include <algorithm>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "doctest.h"
#include "mdbgp/errors.hpp"
#include "mdbgp/metrics.hpp"
#include "mdbgp/partition.hpp"
#include "mdbgp/rng.hpp"
#include "test_util.hpp"

using namespace mdbgp;

namespace {

std::size_t count_uncut_edges(const Graph& g,
                              const std::vector<std::uint32_t>& parts) {
  std::size_t uncut = 0;
  for (std::size_t u = 0; u < g.n; ++u) {
    for (VertexId v : g.adjacent(static_cast<VertexId>(u))) {
      if (v > u && parts[u] == parts[v]) ++uncut;
    }
  }
  return uncut;
}

}  // namespace

TEST_CASE("randomized_round: integral points are deterministic") {
  const std::vector<double> plus(6, 1.0), minus(6, -1.0);
  const Partition a = randomized_round(plus, 123);
  const Partition b = randomized_round(minus, 123);
  for (std::size_t i = 0; i < 6; ++i) {
    CHECK(a.assignment[i] == 0);  // probability (1+1)/2 = 1
    CHECK(b.assignment[i] == 1);  // probability (1-1)/2 = 0
  }
  CHECK(a.k == 2);
}

TEST_CASE("randomized_round: unbiased at the origin") {
  const std::size_t n = 10000;
  const Graph g = testutil::er_graph(n, 20000, 13);
  const std::vector<double> x(n, 0.0);
  const std::size_t trials = 1000;

  double sum_size = 0.0, sum_uncut = 0.0, sum_uncut2 = 0.0;
  for (std::size_t t = 0; t < trials; ++t) {
    const Partition p = randomized_round(x, 7, t);
    std::size_t size0 = 0;
    for (std::uint32_t a : p.assignment) size0 += a == 0 ? 1 : 0;
    const std::size_t uncut = count_uncut_edges(g, p.assignment);
    sum_size += static_cast<double>(size0);
    sum_uncut += static_cast<double>(uncut);
    sum_uncut2 += static_cast<double>(uncut) * static_cast<double>(uncut);
  }
  const double mean_size = sum_size / static_cast<double>(trials);
  CHECK(mean_size >= 4950.0);
  CHECK(mean_size <= 5050.0);

  // Mean kept-edge count matches the fractional objective m/2 at x = 0.
  const double mean_uncut = sum_uncut / static_cast<double>(trials);
  const double var =
      (sum_uncut2 - sum_uncut * mean_uncut) / static_cast<double>(trials - 1);
  const double se = std::sqrt(std::max(var, 1.0) / static_cast<double>(trials));
  CHECK(std::abs(mean_uncut - 0.5 * static_cast<double>(g.m)) <= 4.0 * se);
}

TEST_CASE("randomized_round: deterministic in seed and salt") {
  const std::vector<double> x =
      testutil::random_vector(50, -0.9, 0.9, 600, 0);
  CHECK(randomized_round(x, 1, 2).assignment ==
        randomized_round(x, 1, 2).assignment);
  CHECK(randomized_round(x, 1, 2).assignment !=
        randomized_round(x, 1, 3).assignment);
}

TEST_CASE("round_best_of: one trial reduces to a single rounding") {
  const Graph g = testutil::er_graph(40, 100, 2);
  const WeightSet ws = testutil::unit_ws(g);
  const std::vector<double> x =
      testutil::random_vector(g.n, -0.8, 0.8, 601, 0);
  const RoundOutcome out = round_best_of(g, ws, {}, 0.1, x, 1, 99);
  const Partition direct = randomized_round(x, 99, 0);
  CHECK(out.partition.assignment == direct.assignment);
  CHECK(out.uncut == count_uncut_edges(g, direct.assignment));
}

TEST_CASE("round_best_of: integral input is returned verbatim") {
  const Graph g = testutil::dumbbell_k4();
  const WeightSet ws = testutil::unit_ws(g);
  std::vector<double> x(g.n, 1.0);
  for (std::size_t i = 4; i < 8; ++i) x[i] = -1.0;
  const RoundOutcome out = round_best_of(g, ws, {}, 0.0, x, 4, 0);
  CHECK(out.satisfied);
  CHECK(out.uncut == 12);  // only the bridge is cut
  for (std::size_t i = 0; i < 8; ++i) {
    CHECK(out.partition.assignment[i] == (i < 4 ? 0u : 1u));
  }
}

TEST_CASE("round_best_of: best-of-many finds a good balanced split") {
  const Graph g = testutil::path_graph(4);
  const WeightSet ws = testutil::unit_ws(g);
  // Fractional point leaning toward {0,1} vs {2,3}.
  const std::vector<double> x{0.8, 0.8, -0.8, -0.8};
  const RoundOutcome out = round_best_of(g, ws, {}, 0.0, x, 32, 5);
  CHECK(out.satisfied);
  CHECK(out.uncut >= 2);
}

TEST_CASE("round_best_of: an explicit allowance replaces the slack rule") {
  // One edge, x at the origin: every rounding is equally likely.  Under the
  // default slack (4*sqrt(1/2) at n=2) both same-side outcomes count as
  // satisfied, so the best-of keeps the edge and lands imbalanced.  A strict
  // allowance instead forces the balanced split.
  const Graph g = testutil::path_graph(2);
  const WeightSet ws = testutil::unit_ws(g);
  const std::vector<double> x{0.0, 0.0};

  const RoundOutcome loose = round_best_of(g, ws, {}, 0.0, x, 64, 21);
  CHECK(loose.satisfied);
  CHECK(loose.uncut == 1);
  CHECK(loose.partition.assignment[0] == loose.partition.assignment[1]);

  const std::vector<double> strict{1e-9};
  const RoundOutcome tight = round_best_of(g, ws, {}, 0.0, x, 64, 21, strict);
  CHECK(tight.satisfied);
  CHECK(tight.uncut == 0);
  CHECK(tight.partition.assignment[0] != tight.partition.assignment[1]);
}

TEST_CASE("round_best_of: validation") {
  const Graph g = testutil::path_graph(3);
  const WeightSet ws = testutil::unit_ws(g);
  const std::vector<double> x(3, 0.0);
  CHECK_THROWS_AS(round_best_of(g, ws, {}, 0.1, x, 0, 0), ValidationError);
  const std::vector<double> bad(2, 0.0);
  CHECK_THROWS_AS(round_best_of(g, ws, {}, 0.1, bad, 1, 0), ValidationError);
  const std::vector<double> shifts{0.0, 0.0};  // d = 1
  CHECK_THROWS_AS(round_best_of(g, ws, shifts, 0.1, x, 1, 0),
                  ValidationError);
  const std::vector<double> allowance{0.1, 0.1};  // d = 1
  CHECK_THROWS_AS(round_best_of(g, ws, {}, 0.1, x, 1, 0, allowance),
                  ValidationError);
}

TEST_CASE("recursive_partition: k = 1 is the trivial partition") {
  const Graph g = testutil::er_graph(20, 40, 4);
  const WeightSet ws = testutil::unit_ws(g);
  PartitionConfig cfg;
  IterationTrace trace;
  const Partition p = recursive_partition(g, ws, 1, cfg, &trace);
  CHECK(p.k == 1);
  for (std::uint32_t a : p.assignment) CHECK(a == 0);
  CHECK(trace.records.empty());
}

TEST_CASE("recursive_partition: four cliques separate at k = 4") {
  // Four disjoint 5-cliques; the ideal 4-way partition keeps every edge.
  std::vector<std::pair<VertexId, VertexId>> edges;
  for (VertexId c = 0; c < 4; ++c) {
    for (VertexId i = 0; i < 5; ++i) {
      for (VertexId j = i + 1; j < 5; ++j) {
        edges.emplace_back(5 * c + i, 5 * c + j);
      }
    }
  }
  const Graph g = graph_from_edges(20, edges);
  const WeightSet ws = testutil::unit_ws(g);

  bool perfect = false;
  for (std::uint64_t seed = 0; seed < 5 && !perfect; ++seed) {
    PartitionConfig cfg;
    cfg.gd.epsilon = 0.05;
    cfg.gd.seed = seed;
    const Partition p = recursive_partition(g, ws, 4, cfg);
    perfect = count_uncut_edges(g, p.assignment) == g.m;
  }
  CHECK(perfect);
}

TEST_CASE("recursive_partition: k = 2 equals one solve plus one rounding") {
  const Graph g = testutil::er_graph(40, 120, 3);
  const WeightSet ws = testutil::unit_ws(g);
  PartitionConfig cfg;
  cfg.gd.iterations = 40;
  cfg.gd.epsilon = 0.1;
  cfg.gd.seed = 5;
  cfg.round_trials = 8;

  const Partition whole = recursive_partition(g, ws, 2, cfg);

  GdConfig gd = cfg.gd;          // root path code is 0: seed ^ 0 = seed
  gd.shifts = {0.0};             // even split
  const GdOutput run = run_gd(g, ws, gd);
  const std::vector<double> strict{gd.epsilon + 1e-9};
  const RoundOutcome round =
      round_best_of(g, ws, gd.shifts, gd.epsilon, run.solution.x,
                    cfg.round_trials, rng::derive(gd.seed, 1), strict);
  REQUIRE(round.satisfied);
  CHECK(whole.assignment == round.partition.assignment);
}

TEST_CASE("recursive_partition: compounded balance at k = 4") {
  const Graph g = testutil::er_graph(200, 600, 77);
  const WeightSet ws = testutil::unit_ws(g);
  PartitionConfig cfg;
  cfg.gd.epsilon = 0.04;
  cfg.gd.seed = 1;
  const Partition p = recursive_partition(g, ws, 4, cfg);
  REQUIRE(p.k == 4);
  REQUIRE(p.assignment.size() == g.n);

  std::vector<std::size_t> sizes(4, 0);
  for (std::uint32_t a : p.assignment) {
    REQUIRE(a < 4);
    ++sizes[a];
  }
  std::size_t total = 0;
  for (std::size_t s : sizes) total += s;
  CHECK(total == g.n);  // every vertex lands in exactly one part
  // Per-level tolerance 0.04 compounds to at most (1.04)^2 - 1 < 0.085.
  for (std::size_t s : sizes) {
    CHECK(static_cast<double>(s) >= 50.0 * (1.0 - 0.085) - 1e-9);
    CHECK(static_cast<double>(s) <= 50.0 * (1.0 + 0.085) + 1e-9);
  }
}

TEST_CASE("recursive_partition: unsplittable odd total is infeasible") {
  const Graph g = testutil::path_graph(3);
  const WeightSet ws = testutil::unit_ws(g);
  PartitionConfig cfg;
  cfg.gd.epsilon = 0.0;
  bool threw = false;
  try {
    recursive_partition(g, ws, 2, cfg);
  } catch (const InfeasibleError& e) {
    threw = true;
    const std::string msg = e.what();
    CHECK(msg.find("path") != std::string::npos);
    CHECK(msg.find("k=2") != std::string::npos);
  }
  CHECK(threw);
}

TEST_CASE("recursive_partition: validation") {
  const Graph g = testutil::path_graph(3);
  const WeightSet ws = testutil::unit_ws(g);
  PartitionConfig cfg;
  CHECK_THROWS_AS(recursive_partition(g, ws, 0, cfg), ValidationError);
  CHECK_THROWS_AS(recursive_partition(g, ws, 4, cfg), ValidationError);
}

TEST_CASE("hash_partition") {
  const Graph g = testutil::er_graph(10000, 30000, 8);

  SUBCASE("k = 1 puts everything in part 0") {
    const Partition p = hash_partition(g, 1, 5);
    for (std::uint32_t a : p.assignment) CHECK(a == 0);
  }
  SUBCASE("valid, seed-stable, seed-sensitive") {
    const Partition a = hash_partition(g, 8, 5);
    const Partition b = hash_partition(g, 8, 5);
    const Partition c = hash_partition(g, 8, 6);
    CHECK(a.assignment == b.assignment);
    CHECK(a.assignment != c.assignment);
    for (std::uint32_t v : a.assignment) CHECK(v < 8);
  }
  SUBCASE("near-uniform part sizes") {
    const Partition p = hash_partition(g, 8, 5);
    std::vector<std::size_t> sizes(8, 0);
    for (std::uint32_t a : p.assignment) ++sizes[a];
    for (std::size_t s : sizes) {
      CHECK(static_cast<double>(s) >= 1250.0 * 0.9);
      CHECK(static_cast<double>(s) <= 1250.0 * 1.1);
    }
  }
  SUBCASE("keyed on external ids") {
    // The induced subgraph keeps external ids, so assignments transfer.
    std::vector<VertexId> members;
    for (VertexId v = 0; v < 500; ++v) members.push_back(v * 7 % 2000);
    std::sort(members.begin(), members.end());
    members.erase(std::unique(members.begin(), members.end()), members.end());
    const Subgraph sg = induced_subgraph(g, members);
    const Partition whole = hash_partition(g, 8, 5);
    const Partition part = hash_partition(sg.graph, 8, 5);
    for (std::size_t i = 0; i < members.size(); ++i) {
      CHECK(part.assignment[i] == whole.assignment[members[i]]);
    }
  }
}

TEST_CASE("partition files round-trip") {
  const Graph g = testutil::er_graph(30, 60, 1);
  const Partition p = hash_partition(g, 3, 2);

  std::ostringstream os;
  save_partition(g, p, os);

  SUBCASE("load restores the assignment") {
    std::istringstream is(os.str());
    const Partition q = load_partition(is, g, 3);
    CHECK(q.assignment == p.assignment);
    CHECK(q.k == 3);
  }
  SUBCASE("inferred k is max part + 1") {
    std::istringstream is(os.str());
    const Partition q = load_partition(is, g);
    CHECK(q.k == 3);
  }
  SUBCASE("part index beyond expect_k is rejected") {
    std::istringstream is(os.str());
    CHECK_THROWS_AS(load_partition(is, g, 2), ValidationError);
  }
  SUBCASE("unknown vertex is rejected") {
    std::istringstream is("999 0\n");
    CHECK_THROWS_AS(load_partition(is, g), ValidationError);
  }
  SUBCASE("duplicate vertex is rejected") {
    std::istringstream is("0 0\n0 1\n");
    CHECK_THROWS_AS(load_partition(is, g), ValidationError);
  }
  SUBCASE("missing vertices are rejected") {
    std::istringstream is("0 0\n1 1\n");
    CHECK_THROWS_AS(load_partition(is, g), ValidationError);
  }
  SUBCASE("malformed line is a parse error") {
    std::istringstream is("0 zero\n");
    CHECK_THROWS_AS(load_partition(is, g), ParseError);
  }
}
