#include "mdbgp/weights.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "mdbgp/errors.hpp"
#include "mdbgp/parallel.hpp"

namespace mdbgp {

void WeightSet::append_row(std::vector<double> row, std::string label) {
  if (rows.empty() && n == 0) n = row.size();
  if (row.size() != n) {
    throw ValidationError("weights: row \"" + label + "\" has length " +
                          std::to_string(row.size()) + ", expected " +
                          std::to_string(n));
  }
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (!(row[i] > 0.0)) {
      throw ValidationError("weights: row \"" + label + "\" is not strictly "
                            "positive at vertex position " + std::to_string(i));
    }
  }
  totals.push_back(par::sum(row));
  rows.push_back(std::move(row));
  labels.push_back(std::move(label));
}

std::vector<double> unit_weights(std::size_t n) {
  if (n == 0) throw ValidationError("unit_weights: empty graph");
  return std::vector<double>(n, 1.0);
}

std::vector<double> degree_weights(const Graph& g) {
  std::vector<double> row(g.n);
  for (VertexId v = 0; v < g.n; ++v) {
    const std::size_t deg = g.degree(v);
    if (deg == 0) {
      throw ValidationError(
          "degree_weights: vertex " + std::to_string(g.external_ids[v]) +
          " is isolated; degree weights must be strictly positive "
          "(drop isolated vertices first)");
    }
    row[v] = static_cast<double>(deg);
  }
  return row;
}

std::vector<double> pagerank_weights(const Graph& g, double damping,
                                     std::size_t iterations) {
  if (!(damping > 0.0 && damping < 1.0)) {
    throw ValidationError("pagerank_weights: damping must lie in (0,1)");
  }
  if (iterations == 0) {
    throw ValidationError("pagerank_weights: iterations must be >= 1");
  }
  if (g.n == 0) throw ValidationError("pagerank_weights: empty graph");
  for (VertexId v = 0; v < g.n; ++v) {
    if (g.degree(v) == 0) {
      throw ValidationError(
          "pagerank_weights: vertex " + std::to_string(g.external_ids[v]) +
          " is isolated; dangling vertices are not supported");
    }
  }

  const double teleport = (1.0 - damping) / static_cast<double>(g.n);
  std::vector<double> rank(g.n, 1.0 / static_cast<double>(g.n));
  std::vector<double> shared(g.n), next(g.n);
  for (std::size_t it = 0; it < iterations; ++it) {
    par::parallel_for(g.n, [&](std::size_t b, std::size_t e) {
      for (std::size_t v = b; v < e; ++v) {
        shared[v] = rank[v] / static_cast<double>(g.degree(v));
      }
    });
    par::parallel_for(g.n, [&](std::size_t b, std::size_t e) {
      for (std::size_t v = b; v < e; ++v) {
        double s = 0.0;
        for (VertexId u : g.adjacent(static_cast<VertexId>(v))) s += shared[u];
        next[v] = teleport + damping * s;
      }
    });
    rank.swap(next);
  }
  // Power iteration preserves total mass up to float drift; normalize so the
  // sum-to-one contract holds at any graph size.
  const double total = par::sum(rank);
  par::parallel_for(g.n, [&](std::size_t b, std::size_t e) {
    for (std::size_t v = b; v < e; ++v) rank[v] /= total;
  });
  return rank;
}

std::vector<double> neighbor_degree_sum_weights(const Graph& g) {
  std::vector<double> row(g.n);
  for (VertexId v = 0; v < g.n; ++v) {
    if (g.degree(v) == 0) {
      throw ValidationError(
          "neighbor_degree_sum_weights: vertex " +
          std::to_string(g.external_ids[v]) + " is isolated");
    }
    double s = 0.0;
    for (VertexId u : g.adjacent(v)) s += static_cast<double>(g.degree(u));
    row[v] = s;
  }
  return row;
}

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::size_t begin = 0;
  while (true) {
    const std::size_t pos = s.find(sep, begin);
    if (pos == std::string::npos) {
      parts.push_back(s.substr(begin));
      return parts;
    }
    parts.push_back(s.substr(begin, pos - begin));
    begin = pos + 1;
  }
}

double parse_real(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError("weight spec: bad " + what + " \"" + s + "\"");
  }
}

std::size_t parse_count(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(s, &used);
    if (used != s.size() || v < 1) throw std::invalid_argument(s);
    return static_cast<std::size_t>(v);
  } catch (const std::exception&) {
    throw ParseError("weight spec: bad " + what + " \"" + s + "\"");
  }
}

}  // namespace

WeightSet make_weight_set(const Graph& g, const std::string& spec) {
  WeightSet ws;
  ws.n = g.n;
  for (const std::string& token : split(spec, ',')) {
    if (token.empty()) throw ParseError("weight spec: empty token in \"" + spec + "\"");
    const std::vector<std::string> parts = split(token, ':');
    const std::string& name = parts[0];
    if (name == "unit" && parts.size() == 1) {
      ws.append_row(unit_weights(g.n), "unit");
    } else if (name == "degree" && parts.size() == 1) {
      ws.append_row(degree_weights(g), "degree");
    } else if (name == "nbrdeg" && parts.size() == 1) {
      ws.append_row(neighbor_degree_sum_weights(g), "nbrdeg");
    } else if (name == "pagerank" && parts.size() <= 3) {
      const double damping = parts.size() >= 2
                                 ? parse_real(parts[1], "pagerank damping")
                                 : 0.85;
      const std::size_t iters = parts.size() >= 3
                                    ? parse_count(parts[2], "pagerank iterations")
                                    : 30;
      ws.append_row(pagerank_weights(g, damping, iters), token);
    } else {
      throw ParseError("weight spec: unknown token \"" + token +
                       "\" (expected unit, degree, nbrdeg, or "
                       "pagerank[:damping[:iters]])");
    }
  }
  if (ws.dims() == 0) throw ParseError("weight spec: no weight rows in \"" + spec + "\"");
  return ws;
}

WeightSet load_weights(std::istream& in, const Graph& g) {
  std::vector<std::vector<double>> columns;  // d columns built row-by-row
  std::vector<char> seen(g.n, 0);
  std::size_t rows_seen = 0;

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream fields(line);
    std::string first;
    if (!(fields >> first)) continue;  // blank
    if (first[0] == '#') continue;     // comment

    ExternalId id = 0;
    try {
      std::size_t used = 0;
      id = std::stoull(first, &used);
      if (used != first.size()) throw std::invalid_argument(first);
    } catch (const std::exception&) {
      throw ParseError("weights file line " + std::to_string(line_no) +
                       ": bad vertex id \"" + first + "\"");
    }
    const auto it = g.external_to_internal.find(id);
    if (it == g.external_to_internal.end()) {
      throw ParseError("weights file line " + std::to_string(line_no) +
                       ": vertex id " + std::to_string(id) +
                       " does not occur in the graph");
    }
    const VertexId v = it->second;
    if (seen[v]) {
      throw ParseError("weights file line " + std::to_string(line_no) +
                       ": duplicate vertex id " + std::to_string(id));
    }
    seen[v] = 1;
    ++rows_seen;

    std::vector<double> vals;
    double w = 0.0;
    while (fields >> w) vals.push_back(w);
    if (!fields.eof()) {
      throw ParseError("weights file line " + std::to_string(line_no) +
                       ": non-numeric weight token");
    }
    if (vals.empty()) {
      throw ParseError("weights file line " + std::to_string(line_no) +
                       ": no weight columns");
    }
    if (columns.empty()) {
      columns.assign(vals.size(), std::vector<double>(g.n));
    } else if (vals.size() != columns.size()) {
      throw ParseError("weights file line " + std::to_string(line_no) +
                       ": expected " + std::to_string(columns.size()) +
                       " weight columns, got " + std::to_string(vals.size()));
    }
    for (std::size_t j = 0; j < vals.size(); ++j) {
      if (!(vals[j] > 0.0)) {
        throw ParseError("weights file line " + std::to_string(line_no) +
                         ": non-positive weight in column " +
                         std::to_string(j + 1));
      }
      columns[j][v] = vals[j];
    }
  }
  if (rows_seen != g.n) {
    for (VertexId v = 0; v < g.n; ++v) {
      if (!seen[v]) {
        throw ParseError("weights file: missing vertex id " +
                         std::to_string(g.external_ids[v]));
      }
    }
  }
  WeightSet ws;
  ws.n = g.n;
  for (std::size_t j = 0; j < columns.size(); ++j) {
    ws.append_row(std::move(columns[j]), "w" + std::to_string(j + 1));
  }
  return ws;
}

WeightSet load_weights_file(const std::string& path, const Graph& g) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open weights file: " + path);
  return load_weights(in, g);
}

void save_weights(const WeightSet& ws, const Graph& g, std::ostream& out) {
  if (ws.n != g.n) {
    throw ValidationError("save_weights: weight set size does not match graph");
  }
  char buf[32];
  for (VertexId v = 0; v < g.n; ++v) {
    out << g.external_ids[v];
    for (std::size_t j = 0; j < ws.dims(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", ws.rows[j][v]);
      out << '\t' << buf;
    }
    out << '\n';
  }
}

void save_weights_file(const WeightSet& ws, const Graph& g,
                       const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot open output file: " + path);
  save_weights(ws, g, out);
  out.flush();
  if (!out) throw ParseError("failed writing weights file: " + path);
}

WeightSet restrict_weights(const WeightSet& ws,
                           std::span<const VertexId> members) {
  WeightSet out;
  out.n = members.size();
  for (std::size_t j = 0; j < ws.dims(); ++j) {
    std::vector<double> row(members.size());
    for (std::size_t i = 0; i < members.size(); ++i) {
      if (members[i] >= ws.n) {
        throw ValidationError("restrict_weights: member out of range");
      }
      row[i] = ws.rows[j][members[i]];
    }
    out.append_row(std::move(row), ws.labels[j]);
  }
  return out;
}

}  // namespace mdbgp
