#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mdbgp/graph.hpp"
#include "mdbgp/weights.hpp"

// Partition quality measures: the fraction of edges kept inside parts, the
// cut size, and the per-dimension weight imbalance across parts.

namespace mdbgp {

// Edges whose endpoints share a part.
std::size_t count_uncut(const Graph& g, std::span<const std::uint32_t> parts);

// count_uncut / m; 1.0 for edgeless graphs (no edge is cut).
double edge_locality(const Graph& g, std::span<const std::uint32_t> parts);

// m - count_uncut.
std::size_t cut_size(const Graph& g, std::span<const std::uint32_t> parts);

// Per dimension j: max_part w^j(V_i) / (W_j / k) - 1.  Empty parts are
// legal; they only lower the average side of the ratio implicitly.
std::vector<double> imbalance(const WeightSet& ws,
                              std::span<const std::uint32_t> parts,
                              std::size_t k);

struct MetricsReport {
  std::size_t n = 0;
  std::size_t m = 0;
  std::size_t k = 1;
  double locality = 1.0;
  std::size_t cut_edges = 0;
  std::vector<double> imbalance;       // per dimension
  std::vector<std::string> dim_labels;  // matches imbalance
};

MetricsReport make_metrics_report(const Graph& g, const WeightSet& ws,
                                  std::span<const std::uint32_t> parts,
                                  std::size_t k);

// Flat JSON object: {"n":..,"m":..,"k":..,"locality":..,"cut_edges":..,
// "imbalance":{label: value, ...}}.
std::string metrics_report_json(const MetricsReport& report);

}  // namespace mdbgp
