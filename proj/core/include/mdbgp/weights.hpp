#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "mdbgp/graph.hpp"

// The d per-vertex weight functions defining the balance constraints.
// Every weight is strictly positive; row totals W_j are maintained alongside
// the rows because slab widths are expressed as fractions of them.

namespace mdbgp {

struct WeightSet {
  std::size_t n = 0;
  std::vector<std::vector<double>> rows;  // d rows, each of length n
  std::vector<double> totals;             // totals[j] = sum of rows[j]
  std::vector<std::string> labels;        // human-readable row names

  std::size_t dims() const { return rows.size(); }

  // Validate and append one row: length n, strictly positive entries.
  // Throws ValidationError naming the offending vertex position otherwise.
  void append_row(std::vector<double> row, std::string label);
};

// All-ones row. n = 0 is rejected (an empty graph has no weight rows).
std::vector<double> unit_weights(std::size_t n);

// row[v] = deg(v); total is exactly 2m.  Isolated vertices violate
// positivity; the error names the vertex by external id.
std::vector<double> degree_weights(const Graph& g);

// Fixed-iteration power method on the undirected graph: each vertex spreads
// its score equally over its neighbors, with teleport (1-damping)/n.  The
// result is normalized to sum to 1.  Requires no isolated vertices.
std::vector<double> pagerank_weights(const Graph& g, double damping = 0.85,
                                     std::size_t iterations = 30);

// row[v] = sum of deg(u) over u adjacent to v.  Requires no isolated
// vertices.
std::vector<double> neighbor_degree_sum_weights(const Graph& g);

// Build a WeightSet from a comma-separated spec: tokens are
//   unit | degree | nbrdeg | pagerank[:damping[:iterations]]
// e.g. "unit,degree" or "pagerank:0.9:50".  Unknown tokens raise ParseError.
WeightSet make_weight_set(const Graph& g, const std::string& spec);

// Tabular weight file: one line per vertex, "external_id w1 ... wd",
// whitespace-separated, '#' comment lines allowed.  Every vertex of g must
// appear exactly once; weights must be strictly positive.  Column labels
// are "w1".."wd".
WeightSet load_weights(std::istream& in, const Graph& g);
WeightSet load_weights_file(const std::string& path, const Graph& g);
void save_weights(const WeightSet& ws, const Graph& g, std::ostream& out);
void save_weights_file(const WeightSet& ws, const Graph& g,
                       const std::string& path);

// WeightSet restricted to a subset of vertices (ascending parent indices,
// as produced by induced_subgraph); totals are recomputed.
WeightSet restrict_weights(const WeightSet& ws,
                           std::span<const VertexId> members);

}  // namespace mdbgp
