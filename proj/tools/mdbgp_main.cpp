// mdbgp: balanced multi-weight graph partitioning from the command line.
//
//   mdbgp partition --graph edges.tsv --k 8 --epsilon 0.05 > parts.tsv
//   mdbgp metrics   --graph edges.tsv --partition parts.tsv
//   mdbgp weights   --graph edges.tsv --spec unit,degree --out weights.tsv
//
// Exit codes: 0 success, 2 infeasible balance constraints, 1 anything else
// (bad flags, malformed files, validation failures).

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"

#include "mdbgp/errors.hpp"
#include "mdbgp/graph.hpp"
#include "mdbgp/metrics.hpp"
#include "mdbgp/parallel.hpp"
#include "mdbgp/partition.hpp"
#include "mdbgp/projection.hpp"
#include "mdbgp/solver.hpp"
#include "mdbgp/weights.hpp"

namespace {

using namespace mdbgp;

struct PartitionArgs {
  std::string graph_path;
  std::size_t k = 2;
  double epsilon = 0.05;
  std::string weights_path;
  std::string weight_spec = "unit,degree";
  std::size_t iters = 100;
  std::string projection = "alternating-one-shot";
  std::uint64_t seed = 0;
  std::string out_path;
  std::string trace_path;
  std::size_t round_trials = 8;
  bool drop_isolated = false;
};

struct MetricsArgs {
  std::string graph_path;
  std::string partition_path;
  std::string weights_path;
  std::string weight_spec = "unit,degree";
  std::size_t k = 0;  // 0: infer from the partition file
};

struct WeightsArgs {
  std::string graph_path;
  std::string spec = "unit,degree";
  std::string out_path;
};

std::ofstream open_output(const std::string& path) {
  std::ofstream f(path);
  if (!f) throw Error("cannot open output file: " + path);
  return f;
}

void run_partition(const PartitionArgs& a) {
  const Graph g = load_edge_list_file(a.graph_path);

  // Optionally trim isolated vertices out of the solve; they cost no edges
  // and are re-inserted round-robin afterwards.
  std::vector<VertexId> members;
  Subgraph sub;
  bool restricted = false;
  if (a.drop_isolated) {
    for (VertexId v = 0; v < g.n; ++v)
      if (g.degree(v) > 0) members.push_back(v);
    if (members.empty() && g.n > 0)
      throw ValidationError(
          "--drop-isolated removed every vertex; the graph has no edges");
    if (members.size() < g.n) {
      sub = induced_subgraph(g, members);
      restricted = true;
    }
  }
  const Graph& sg = restricted ? sub.graph : g;

  WeightSet ws;
  if (!a.weights_path.empty()) {
    WeightSet full = load_weights_file(a.weights_path, g);
    ws = restricted ? restrict_weights(full, members) : std::move(full);
  } else {
    ws = make_weight_set(sg, a.weight_spec);
  }

  PartitionConfig cfg;
  cfg.gd.iterations = a.iters;
  cfg.gd.epsilon = a.epsilon;
  cfg.gd.projection = projection_method_from_string(a.projection);
  cfg.gd.seed = a.seed;
  cfg.round_trials = a.round_trials;

  IterationTrace trace;
  const Partition solved = recursive_partition(
      sg, ws, a.k, cfg, a.trace_path.empty() ? nullptr : &trace);

  Partition result = solved;
  if (restricted) {
    result.assignment.assign(g.n, 0);
    for (std::size_t i = 0; i < members.size(); ++i)
      result.assignment[members[i]] = solved.assignment[i];
    std::vector<VertexId> isolated;
    for (VertexId v = 0; v < g.n; ++v)
      if (g.degree(v) == 0) isolated.push_back(v);
    std::sort(isolated.begin(), isolated.end(), [&](VertexId u, VertexId v) {
      return g.external_ids[u] < g.external_ids[v];
    });
    for (std::size_t i = 0; i < isolated.size(); ++i)
      result.assignment[isolated[i]] = static_cast<std::uint32_t>(i % a.k);
  }

  if (!a.trace_path.empty()) {
    std::ofstream f = open_output(a.trace_path);
    write_trace_csv(trace, f);
  }

  if (a.out_path.empty()) {
    save_partition(g, result, std::cout);
  } else {
    std::ofstream f = open_output(a.out_path);
    save_partition(g, result, f);
  }

  // Quality report on the instance that was actually solved (the trimmed
  // subgraph under --drop-isolated, since generated weights such as
  // `degree` only exist there); stdout stays reserved for the partition.
  const MetricsReport report =
      make_metrics_report(sg, ws, solved.assignment, a.k);
  std::cerr << metrics_report_json(report) << "\n";
}

void run_metrics(const MetricsArgs& a) {
  const Graph g = load_edge_list_file(a.graph_path);
  std::ifstream pf(a.partition_path);
  if (!pf) throw Error("cannot open partition file: " + a.partition_path);
  const Partition p = load_partition(pf, g, a.k);
  const WeightSet ws = a.weights_path.empty()
                           ? make_weight_set(g, a.weight_spec)
                           : load_weights_file(a.weights_path, g);
  const MetricsReport report = make_metrics_report(g, ws, p.assignment, p.k);
  std::cout << metrics_report_json(report) << "\n";
}

void run_weights(const WeightsArgs& a) {
  const Graph g = load_edge_list_file(a.graph_path);
  const WeightSet ws = make_weight_set(g, a.spec);
  if (a.out_path.empty()) {
    save_weights(ws, g, std::cout);
  } else {
    std::ofstream f = open_output(a.out_path);
    save_weights(ws, g, f);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Balanced multi-weight graph partitioning"};
  app.require_subcommand(1);

  int threads = 0;
  app.add_option("--threads", threads,
                 "Cap on worker threads (0: hardware concurrency)")
      ->check(CLI::NonNegativeNumber);

  PartitionArgs pa;
  MetricsArgs ma;
  WeightsArgs wa;

  CLI::App* part =
      app.add_subcommand("partition", "Partition a graph into k parts with "
                                      "balanced weight totals");
  part->fallthrough();
  part->add_option("--graph", pa.graph_path, "Edge-list file, one 'u v' per line")
      ->required();
  part->add_option("--k", pa.k, "Number of parts")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  part->add_option("--epsilon", pa.epsilon,
                   "Relative balance tolerance per weight dimension")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  CLI::Option* wfile =
      part->add_option("--weights", pa.weights_path, "Vertex weight file (TSV)");
  CLI::Option* wspec =
      part->add_option("--weight-spec", pa.weight_spec,
                       "Generated weights, comma list of "
                       "unit|degree|pagerank|nbrdeg")
          ->capture_default_str();
  wfile->excludes(wspec);
  wspec->excludes(wfile);
  part->add_option("--iters", pa.iters, "Gradient iterations per bisection")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  part->add_option("--projection", pa.projection, "Projection method")
      ->check(CLI::IsMember({"exact", "alternating", "alternating-one-shot",
                             "dykstra", "nested"}))
      ->capture_default_str();
  part->add_option("--seed", pa.seed, "Random seed")->capture_default_str();
  part->add_option("--out", pa.out_path, "Partition output file (default stdout)");
  part->add_option("--trace", pa.trace_path,
                   "Write the root bisection's iteration trace (CSV)");
  part->add_option("--round-trials", pa.round_trials,
                   "Independent roundings per bisection, best kept")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  part->add_flag("--drop-isolated", pa.drop_isolated,
                 "Solve on the non-isolated subgraph; spread isolated "
                 "vertices round-robin");

  CLI::App* metr = app.add_subcommand(
      "metrics", "Score an existing partition (JSON on stdout)");
  metr->fallthrough();
  metr->add_option("--graph", ma.graph_path, "Edge-list file")->required();
  metr->add_option("--partition", ma.partition_path,
                   "Partition file, 'external_id<TAB>part' per line")
      ->required();
  CLI::Option* mfile =
      metr->add_option("--weights", ma.weights_path, "Vertex weight file (TSV)");
  CLI::Option* mspec =
      metr->add_option("--weight-spec", ma.weight_spec,
                       "Generated weights, comma list of "
                       "unit|degree|pagerank|nbrdeg")
          ->capture_default_str();
  mfile->excludes(mspec);
  mspec->excludes(mfile);
  metr->add_option("--k", ma.k,
                   "Expected part count (default: infer from the file)")
      ->check(CLI::PositiveNumber);

  CLI::App* wts = app.add_subcommand(
      "weights", "Generate vertex weights for a graph (TSV)");
  wts->fallthrough();
  wts->add_option("--graph", wa.graph_path, "Edge-list file")->required();
  wts->add_option("--spec", wa.spec,
                  "Comma list of unit|degree|pagerank|nbrdeg")
      ->capture_default_str();
  wts->add_option("--out", wa.out_path, "Output file (default stdout)");

  part->callback([&] {
    par::set_max_threads(threads);
    run_partition(pa);
  });
  metr->callback([&] {
    par::set_max_threads(threads);
    run_metrics(ma);
  });
  wts->callback([&] {
    par::set_max_threads(threads);
    run_weights(wa);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    const CLI::App* scope = &app;
    const auto parsed = app.get_subcommands();
    if (!parsed.empty()) scope = parsed.front();
    std::cerr << "error: " << e.what() << "\n\n" << scope->help();
    return 1;
  } catch (const InfeasibleError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
