#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

// Immutable undirected simple graph in compressed sparse row form.
// Houses the adjacency operator A whose matrix-vector product is the
// gradient kernel of the partitioning objective.

namespace mdbgp {

using VertexId = std::uint32_t;     // dense internal index
using ExternalId = std::uint64_t;   // id as it appears in input files

struct Graph {
  std::size_t n = 0;  // vertex count
  std::size_t m = 0;  // undirected edge count (each edge counted once)

  // CSR adjacency: neighbors of v are
  // neighbors[offsets[v] .. offsets[v+1]), sorted ascending, no duplicates,
  // no self entries.  offsets has length n+1 and offsets[n] == 2m.
  std::vector<std::size_t> offsets;
  std::vector<VertexId> neighbors;

  // Bijection between external ids (arbitrary 64-bit) and internal indices.
  // external_ids[v] is the id vertex v carried in the input; internal order
  // is first appearance in the input.
  std::vector<ExternalId> external_ids;
  std::unordered_map<ExternalId, VertexId> external_to_internal;

  // Ingestion statistics.
  std::uint64_t self_loops_dropped = 0;
  std::uint64_t duplicate_edges_dropped = 0;

  std::size_t degree(VertexId v) const { return offsets[v + 1] - offsets[v]; }
  std::span<const VertexId> adjacent(VertexId v) const {
    return {neighbors.data() + offsets[v], degree(v)};
  }
};

// Parse a line-oriented edge list: one "u v" pair of non-negative integer
// ids per line, arbitrary whitespace, lines whose first non-blank character
// is '#' ignored.  Duplicate edges (either orientation) collapse to one;
// self-loops are dropped and counted.  External ids are remapped to dense
// internal indices in order of first appearance.
// Throws ParseError with a line number on malformed input.
Graph load_edge_list(std::istream& in);
Graph load_edge_list_file(const std::string& path);

// Write one "u v" line per edge using external ids.  load(save(g)) is
// isomorphic to g with the identical degree multiset.
void save_edge_list(const Graph& g, std::ostream& out);
void save_edge_list_file(const Graph& g, const std::string& path);

// out = A x where A is the 0/1 adjacency matrix: out[i] = sum of x[j] over
// j adjacent to i.  Lengths must equal g.n; throws ValidationError
// otherwise.  May run in parallel over disjoint output ranges; the result
// does not depend on the thread count.
void adjacency_multiply(const Graph& g, std::span<const double> x,
                        std::span<double> out);
std::vector<double> adjacency_multiply(const Graph& g,
                                       std::span<const double> x);

// Construct an in-place graph from internal-index edge pairs (test and
// generator plumbing; external id of vertex v is v itself).
Graph graph_from_edges(std::size_t n,
                       const std::vector<std::pair<VertexId, VertexId>>& edges);

struct Subgraph {
  Graph graph;
  // to_parent[i] is the parent-graph internal index of subgraph vertex i;
  // strictly increasing.
  std::vector<VertexId> to_parent;
};

// Subgraph induced by `members` (parent internal indices, any order; must be
// in range and duplicate-free).  Keeps exactly the edges with both endpoints
// in `members`; subgraph vertices keep their parent external ids.
Subgraph induced_subgraph(const Graph& g, std::span<const VertexId> members);

}  // namespace mdbgp
