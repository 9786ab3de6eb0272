#include "mdbgp/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "mdbgp/errors.hpp"
#include "mdbgp/parallel.hpp"

namespace mdbgp {

namespace {

void check_cover(const Graph& g, std::span<const std::uint32_t> parts) {
  if (parts.size() != g.n) {
    throw ValidationError("metrics: assignment length does not match graph");
  }
}

}  // namespace

std::size_t count_uncut(const Graph& g, std::span<const std::uint32_t> parts) {
  check_cover(g, parts);
  if (g.m == 0) return 0;
  // Per-vertex partial counts keep the tally exact and thread-invariant.
  std::vector<double> local(g.n, 0.0);
  par::parallel_for(g.n, [&](std::size_t b, std::size_t e) {
    for (std::size_t u = b; u < e; ++u) {
      std::size_t c = 0;
      for (VertexId v : g.adjacent(static_cast<VertexId>(u))) {
        if (v > u && parts[v] == parts[u]) ++c;
      }
      local[u] = static_cast<double>(c);
    }
  });
  return static_cast<std::size_t>(std::llround(par::sum(local)));
}

double edge_locality(const Graph& g, std::span<const std::uint32_t> parts) {
  check_cover(g, parts);
  if (g.m == 0) return 1.0;
  return static_cast<double>(count_uncut(g, parts)) / static_cast<double>(g.m);
}

std::size_t cut_size(const Graph& g, std::span<const std::uint32_t> parts) {
  return g.m - count_uncut(g, parts);
}

std::vector<double> imbalance(const WeightSet& ws,
                              std::span<const std::uint32_t> parts,
                              std::size_t k) {
  if (parts.size() != ws.n) {
    throw ValidationError("imbalance: assignment length does not match weights");
  }
  if (k < 1) throw ValidationError("imbalance: k must be >= 1");
  for (std::uint32_t p : parts) {
    if (p >= k) throw ValidationError("imbalance: part index out of range");
  }
  const std::size_t d = ws.dims();
  std::vector<double> out(d, 0.0);
  std::vector<double> mass(k);
  for (std::size_t j = 0; j < d; ++j) {
    std::fill(mass.begin(), mass.end(), 0.0);
    for (std::size_t i = 0; i < ws.n; ++i) mass[parts[i]] += ws.rows[j][i];
    const double avg = ws.totals[j] / static_cast<double>(k);
    if (avg > 0.0) {
      out[j] = *std::max_element(mass.begin(), mass.end()) / avg - 1.0;
    }
  }
  return out;
}

MetricsReport make_metrics_report(const Graph& g, const WeightSet& ws,
                                  std::span<const std::uint32_t> parts,
                                  std::size_t k) {
  MetricsReport r;
  r.n = g.n;
  r.m = g.m;
  r.k = k;
  const std::size_t uncut = count_uncut(g, parts);
  r.locality = g.m == 0 ? 1.0
                        : static_cast<double>(uncut) / static_cast<double>(g.m);
  r.cut_edges = g.m - uncut;
  r.imbalance = imbalance(ws, parts, k);
  r.dim_labels = ws.labels;
  return r;
}

namespace {

std::string json_escape(const std::string& s) {
  std::string out;
  out.reserve(s.size() + 2);
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    if (static_cast<unsigned char>(c) < 0x20) {
      char buf[8];
      std::snprintf(buf, sizeof buf, "\\u%04x", c);
      out += buf;
      continue;
    }
    out.push_back(c);
  }
  return out;
}

std::string fmt_double(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

}  // namespace

std::string metrics_report_json(const MetricsReport& report) {
  std::string out = "{";
  out += "\"n\":" + std::to_string(report.n);
  out += ",\"m\":" + std::to_string(report.m);
  out += ",\"k\":" + std::to_string(report.k);
  out += ",\"locality\":" + fmt_double(report.locality);
  out += ",\"cut_edges\":" + std::to_string(report.cut_edges);
  out += ",\"imbalance\":{";
  for (std::size_t j = 0; j < report.imbalance.size(); ++j) {
    const std::string label = j < report.dim_labels.size()
                                  ? report.dim_labels[j]
                                  : "w" + std::to_string(j + 1);
    if (j) out += ",";
    out += "\"" + json_escape(label) + "\":" + fmt_double(report.imbalance[j]);
  }
  out += "}}";
  return out;
}

}  // namespace mdbgp
