#pragma once

#include <span>
#include <vector>

#include "mdbgp/projection.hpp"

namespace mdbgp::detail {

// Dykstra's correction-vector scheme over explicit slabs plus the box.
// Shared by dykstra_projection and by the exact 2D solver's
// degenerate-geometry fallback (zero-width slabs = equality constraints).
ProjectionResult dykstra_core(std::span<const double> y,
                              const std::vector<std::span<const double>>& rows,
                              const std::vector<double>& centers,
                              const std::vector<double>& halfwidths,
                              double tol, std::size_t max_rounds);

// Reusable buffers for exact_1d_multiplier; callers that solve repeatedly
// (the 2D strip search evaluates it per probe) keep one across calls so the
// inner loop never allocates.
struct Scratch1d {
  std::vector<double> lo, hi, bp;
  std::vector<std::size_t> coords;
};

// Multiplier of the box-and-hyperplane system: the lambda with
// sum_i w_i * clamp1(y_i - lambda * w_i) = ce.  Requires w > 0 with
// inv_w[i] = 1 / w[i] precomputed, and |ce| <= sum(w) (callers validate).
// Selection over the 2n clamp breakpoints — linear time, no sort — followed
// by a closed-form solve on the located affine segment.
double exact_1d_multiplier(std::span<const double> y,
                           std::span<const double> w,
                           std::span<const double> inv_w, double ce,
                           Scratch1d& scratch);

}  // namespace mdbgp::detail
