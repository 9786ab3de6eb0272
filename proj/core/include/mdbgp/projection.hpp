#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mdbgp/weights.hpp"

// Projection of a point y onto
//   K = { x : |x_i| <= 1 }  ∩  ⋂_j { x : |<w^j, x> - b_j| <= eps * W_j },
// the box-slab intersection that feasible fractional solutions live in.
// Five interchangeable methods are provided: exact KKT-based solvers for
// one and two balance dimensions, nested binary search for any dimension,
// and two iterative schemes (alternating projections and Dykstra's method).

namespace mdbgp {

// The balance constraint system.  `weights` is non-owning; the caller keeps
// the WeightSet alive for the lifetime of the spec.  `shifts` holds the
// per-dimension slab centers b_j (empty = all zero).  `halfwidth_override`,
// when non-empty, replaces the default slab half-width eps*W_j; the solver
// uses it when projecting the free sub-problem, whose slab width is still
// measured against the full-graph weight totals.
struct BalanceSpec {
  const WeightSet* weights = nullptr;
  double epsilon = 0.0;
  std::vector<double> shifts;
  std::vector<double> halfwidth_override;

  std::size_t dims() const { return weights->dims(); }
  std::size_t size() const { return weights->n; }
  const std::vector<double>& row(std::size_t j) const {
    return weights->rows[j];
  }
  double total(std::size_t j) const { return weights->totals[j]; }
  double shift(std::size_t j) const {
    return shifts.empty() ? 0.0 : shifts[j];
  }
  double halfwidth(std::size_t j) const {
    return halfwidth_override.empty() ? epsilon * total(j)
                                      : halfwidth_override[j];
  }
  // Throws ValidationError on inconsistent sizes or negative widths.
  void validate() const;
};

enum class ProjectionMethod {
  exact,
  alternating_one_shot,
  alternating,
  dykstra,
  nested,
};

std::string to_string(ProjectionMethod m);
// Parse a CLI spelling: exact | alternating | alternating-one-shot |
// dykstra | nested.  Throws ParseError on anything else.
ProjectionMethod projection_method_from_string(const std::string& name);

struct ProjectionResult {
  std::vector<double> x;
  // Per-dimension slab multipliers; x_i = clamp(y_i - sum_j lambda[j] w^j_i)
  // for the exact/nested methods.  Empty for iterative methods.
  std::vector<double> lambda;
  ProjectionMethod method = ProjectionMethod::exact;
  std::size_t iterations = 0;  // work counter (evaluations or rounds)
  bool converged = true;       // false = non-convergence report
  // max_j (|<w^j,x> - b_j| - halfwidth_j)+ / W_j : how far outside the
  // slabs the point sits, relative to the weight totals.
  double slab_violation = 0.0;
  std::string note;  // diagnostics (e.g. degeneracy fallback)
};

// Options shared by project_K and the individual methods.
struct ProjectOptions {
  double tol = 1e-6;              // iterative displacement tolerance
  std::size_t max_rounds = 20000;  // iterative round cap
  double nested_delta = 1e-9;     // multiplier precision of nested search
  double nested_initial_bound = 0.0;  // 0 = derive from the data
  double nested_growth = 2.0;         // bound expansion factor
  std::uint64_t seed = 0;  // randomized intersection sampling in 2D phase 1
};

inline double clamp1(double z) { return std::min(1.0, std::max(-1.0, z)); }

// Exact projection onto {|x_i| <= 1} ∩ {<w, x> = c} for strictly positive w:
// binary search over the breakpoints (y_i -+ 1)/w_i of the monotone
// piecewise-linear h(lambda) = sum_i w_i clamp(y_i - lambda w_i), then a
// closed-form solve on the active segment.  |<w,x> - c| <= 1e-10 * sum(w).
// Throws InfeasibleError when c lies outside [-sum(w), sum(w)].
ProjectionResult project_exact_1d(std::span<const double> y,
                                  std::span<const double> w, double c);

// Exact projection onto {|x_i| <= 1} ∩ {<w1,x> = c1} ∩ {<w2,x> = c2}.
// Phase 1 narrows an intersection-free strip of the (lambda1, lambda2)
// plane by randomized binary search over boundary-line crossings; phase 2
// sweeps the strip's regions bottom-to-top with O(1) coefficient updates.
// Both monotonicity assumptions for the strip search are tried; the
// verified output closer to y wins.  Nearly collinear weight rows fall back
// to Dykstra iteration (note set in the result).  Requires w2 > 0.
ProjectionResult project_exact_2d(std::span<const double> y,
                                  std::span<const double> w1,
                                  std::span<const double> w2, double c1,
                                  double c2, std::uint64_t seed = 0);

std::vector<double> project_box(std::span<const double> y);

// x = y - ((<w,y> - c)/||w||^2) w.  Throws ValidationError when w = 0.
std::vector<double> project_hyperplane(std::span<const double> y,
                                       std::span<const double> w, double c);

enum class AlternatingMode { one_shot, to_convergence };

// One round projects onto each slab-center hyperplane <w^j,x> = b_j in
// order, then onto the box.  one_shot performs exactly one round (its slab
// residuals are reported in the result); to_convergence repeats until the
// per-round displacement drops below tol*sqrt(n) and the point is in K
// within tolerance, or max_rounds is exhausted (converged=false).
ProjectionResult alternating_projection(std::span<const double> y,
                                        const BalanceSpec& spec,
                                        AlternatingMode mode,
                                        double tol = 1e-6,
                                        std::size_t max_rounds = 20000);

// Dykstra's correction-vector scheme over the d+1 sets (each slab, then the
// box); converges to the true projection onto K.  Stops when the per-cycle
// displacement drops below tol*sqrt(n) and the point is in K within
// tolerance.
ProjectionResult dykstra_projection(std::span<const double> y,
                                    const BalanceSpec& spec, double tol = 1e-6,
                                    std::size_t max_rounds = 20000);

// Solve the equality-constrained projection onto
// {|x_i| <= 1} ∩ ⋂_t {<w^t, x> = c_t} for positive rows by nested binary
// search on the multipliers: the outer search on lambda_t evaluates
// constraint t after recursively satisfying constraints t+1..d, exploiting
// the monotonicity of that value in lambda_t.  The search direction is
// detected from the bracket endpoints; brackets grow from +-initial_bound
// by `growth` up to 60 times (InfeasibleError beyond).  Each multiplier is
// located to within `delta`.
ProjectionResult nested_projection(std::span<const double> y,
                                   const std::vector<std::vector<double>>& rows,
                                   const std::vector<double>& targets,
                                   double delta = 1e-9,
                                   double initial_bound = 0.0,
                                   double growth = 2.0);

// Project y onto K by the requested method.  The exact and nested methods
// enumerate the 3^d sign patterns of the slab multipliers: dimensions
// guessed 0 are dropped, dimensions guessed +- become equalities with
// target b_j +- eps*W_j; a candidate is accepted iff the solved multipliers
// match the guessed signs and every dropped slab constraint holds; the
// accepted candidate closest to y wins (ties prefer more zeros).  For
// method=exact the equality systems are solved by project_exact_1d /
// project_exact_2d, or by nested binary search when more than two
// dimensions are active.  Iterative methods dispatch directly.
// Throws InfeasibleError when no sign pattern yields a feasible candidate.
ProjectionResult project_K(std::span<const double> y, const BalanceSpec& spec,
                           ProjectionMethod method,
                           const ProjectOptions& opts = {});

}  // namespace mdbgp
