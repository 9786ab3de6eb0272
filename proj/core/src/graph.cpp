#include "mdbgp/graph.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <utility>

#include "mdbgp/errors.hpp"
#include "mdbgp/parallel.hpp"

namespace mdbgp {

namespace {

// Build CSR from internal-index pairs, dropping self-loops and duplicates.
Graph assemble(std::size_t n, std::vector<ExternalId> external_ids,
               std::unordered_map<ExternalId, VertexId> ext_to_int,
               std::vector<std::pair<VertexId, VertexId>>& pairs,
               std::uint64_t self_loops) {
  Graph g;
  g.n = n;
  g.external_ids = std::move(external_ids);
  g.external_to_internal = std::move(ext_to_int);
  g.self_loops_dropped = self_loops;

  for (auto& [u, v] : pairs) {
    if (u > v) std::swap(u, v);
  }
  std::sort(pairs.begin(), pairs.end());
  const auto last = std::unique(pairs.begin(), pairs.end());
  g.duplicate_edges_dropped =
      static_cast<std::uint64_t>(std::distance(last, pairs.end()));
  pairs.erase(last, pairs.end());
  g.m = pairs.size();

  std::vector<std::size_t> deg(n, 0);
  for (const auto& [u, v] : pairs) {
    ++deg[u];
    ++deg[v];
  }
  g.offsets.assign(n + 1, 0);
  for (std::size_t v = 0; v < n; ++v) g.offsets[v + 1] = g.offsets[v] + deg[v];
  g.neighbors.resize(2 * g.m);
  std::vector<std::size_t> cursor(g.offsets.begin(), g.offsets.end() - 1);
  for (const auto& [u, v] : pairs) {
    g.neighbors[cursor[u]++] = v;
    g.neighbors[cursor[v]++] = u;
  }
  // Pairs were processed in sorted order, so each adjacency list of
  // second endpoints is ascending already; first-endpoint entries need a
  // sort because v receives u out of order.
  for (std::size_t v = 0; v < n; ++v) {
    std::sort(g.neighbors.begin() + static_cast<std::ptrdiff_t>(g.offsets[v]),
              g.neighbors.begin() + static_cast<std::ptrdiff_t>(g.offsets[v + 1]));
  }
  return g;
}

bool parse_u64(const char*& p, const char* end, std::uint64_t& out) {
  while (p < end && (*p == ' ' || *p == '\t' || *p == '\r')) ++p;
  if (p >= end || !std::isdigit(static_cast<unsigned char>(*p))) return false;
  std::uint64_t v = 0;
  while (p < end && std::isdigit(static_cast<unsigned char>(*p))) {
    const std::uint64_t digit = static_cast<std::uint64_t>(*p - '0');
    if (v > (UINT64_MAX - digit) / 10) return false;  // overflow
    v = v * 10 + digit;
    ++p;
  }
  out = v;
  return true;
}

bool only_blank(const char* p, const char* end) {
  while (p < end) {
    if (*p != ' ' && *p != '\t' && *p != '\r') return false;
    ++p;
  }
  return true;
}

}  // namespace

Graph load_edge_list(std::istream& in) {
  std::vector<ExternalId> external_ids;
  std::unordered_map<ExternalId, VertexId> ext_to_int;
  std::vector<std::pair<VertexId, VertexId>> pairs;
  std::uint64_t self_loops = 0;

  const auto intern = [&](ExternalId id) -> VertexId {
    const auto [it, inserted] =
        ext_to_int.emplace(id, static_cast<VertexId>(external_ids.size()));
    if (inserted) external_ids.push_back(id);
    return it->second;
  };

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const char* p = line.data();
    const char* end = p + line.size();
    while (p < end && (*p == ' ' || *p == '\t' || *p == '\r')) ++p;
    if (p == end) continue;      // blank line
    if (*p == '#') continue;     // comment line
    std::uint64_t a = 0, b = 0;
    if (!parse_u64(p, end, a) || !parse_u64(p, end, b) || !only_blank(p, end)) {
      throw ParseError("edge list: malformed line " + std::to_string(line_no) +
                       ": expected two non-negative integer ids, got \"" +
                       line + "\"");
    }
    const VertexId u = intern(a);
    const VertexId v = intern(b);
    if (u == v) {
      ++self_loops;
      continue;
    }
    pairs.emplace_back(u, v);
  }
  const std::size_t n = external_ids.size();
  return assemble(n, std::move(external_ids), std::move(ext_to_int), pairs,
                  self_loops);
}

Graph load_edge_list_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open edge list file: " + path);
  return load_edge_list(in);
}

void save_edge_list(const Graph& g, std::ostream& out) {
  for (VertexId u = 0; u < g.n; ++u) {
    for (VertexId v : g.adjacent(u)) {
      if (v > u) {
        out << g.external_ids[u] << ' ' << g.external_ids[v] << '\n';
      }
    }
  }
}

void save_edge_list_file(const Graph& g, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot open output file: " + path);
  save_edge_list(g, out);
  out.flush();
  if (!out) throw ParseError("failed writing edge list file: " + path);
}

void adjacency_multiply(const Graph& g, std::span<const double> x,
                        std::span<double> out) {
  if (x.size() != g.n || out.size() != g.n) {
    throw ValidationError("adjacency_multiply: vector length " +
                          std::to_string(x.size()) + " does not match n=" +
                          std::to_string(g.n));
  }
  par::parallel_for(g.n, [&](std::size_t begin, std::size_t end) {
    for (std::size_t v = begin; v < end; ++v) {
      double s = 0.0;
      const std::size_t lo = g.offsets[v], hi = g.offsets[v + 1];
      for (std::size_t e = lo; e < hi; ++e) s += x[g.neighbors[e]];
      out[v] = s;
    }
  });
}

std::vector<double> adjacency_multiply(const Graph& g,
                                       std::span<const double> x) {
  std::vector<double> out(g.n);
  adjacency_multiply(g, x, out);
  return out;
}

Graph graph_from_edges(std::size_t n,
                       const std::vector<std::pair<VertexId, VertexId>>& edges) {
  std::vector<ExternalId> external_ids(n);
  std::unordered_map<ExternalId, VertexId> ext_to_int;
  ext_to_int.reserve(n);
  for (std::size_t v = 0; v < n; ++v) {
    external_ids[v] = v;
    ext_to_int.emplace(v, static_cast<VertexId>(v));
  }
  std::vector<std::pair<VertexId, VertexId>> pairs;
  pairs.reserve(edges.size());
  std::uint64_t self_loops = 0;
  for (const auto& [u, v] : edges) {
    if (u >= n || v >= n) {
      throw ValidationError("graph_from_edges: endpoint out of range");
    }
    if (u == v) {
      ++self_loops;
      continue;
    }
    pairs.emplace_back(u, v);
  }
  return assemble(n, std::move(external_ids), std::move(ext_to_int), pairs,
                  self_loops);
}

Subgraph induced_subgraph(const Graph& g, std::span<const VertexId> members) {
  std::vector<VertexId> sorted(members.begin(), members.end());
  std::sort(sorted.begin(), sorted.end());
  if (!sorted.empty() && sorted.back() >= g.n) {
    throw ValidationError("induced_subgraph: member " +
                          std::to_string(sorted.back()) + " out of range n=" +
                          std::to_string(g.n));
  }
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw ValidationError("induced_subgraph: duplicate member");
  }

  constexpr VertexId kAbsent = static_cast<VertexId>(-1);
  std::vector<VertexId> to_child(g.n, kAbsent);
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    to_child[sorted[i]] = static_cast<VertexId>(i);
  }

  Subgraph sub;
  sub.to_parent = sorted;
  Graph& s = sub.graph;
  s.n = sorted.size();
  s.external_ids.resize(s.n);
  s.external_to_internal.reserve(s.n);
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    s.external_ids[i] = g.external_ids[sorted[i]];
    s.external_to_internal.emplace(s.external_ids[i],
                                   static_cast<VertexId>(i));
  }

  s.offsets.assign(s.n + 1, 0);
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    std::size_t deg = 0;
    for (VertexId w : g.adjacent(sorted[i])) {
      if (to_child[w] != kAbsent) ++deg;
    }
    s.offsets[i + 1] = s.offsets[i] + deg;
  }
  s.neighbors.resize(s.offsets[s.n]);
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    std::size_t cursor = s.offsets[i];
    for (VertexId w : g.adjacent(sorted[i])) {
      if (to_child[w] != kAbsent) s.neighbors[cursor++] = to_child[w];
    }
    // Parent adjacency is ascending and to_child is monotone on members,
    // so each subgraph adjacency list is already sorted.
  }
  s.m = s.offsets[s.n] / 2;
  return sub;
}

}  // namespace mdbgp
