#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "mdbgp/graph.hpp"
#include "mdbgp/projection.hpp"
#include "mdbgp/weights.hpp"

// Randomized projected gradient ascent for the relaxed bisection objective
//   maximize f(x) = 1/2 sum_{(u,v) in E} (x_u x_v + 1)
// over K = {|x_i| <= 1} ∩ {|<w^j,x> - b_j| <= eps*W_j}.  Each iteration adds
// Gaussian noise (first iteration only by default), takes a gradient step
// x + gamma*Ax, projects back onto K, and permanently fixes coordinates that
// reach +-fix_threshold.

namespace mdbgp {

enum class StepMode {
  fixed,          // gamma given explicitly
  target_length,  // gamma searched so the step length tracks a target
};

struct GdConfig {
  std::size_t iterations = 100;
  double epsilon = 0.05;
  // Per-coordinate noise standard deviation at iteration 0 (later
  // iterations are noise-free unless the solver re-randomizes at a
  // stationary point); negative = 1/sqrt(n).
  double noise_std = -1.0;
  StepMode step_mode = StepMode::target_length;
  double gamma = 0.1;           // fixed-mode step scale
  double target_length = -1.0;  // negative = 2*sqrt(n)/iterations
  ProjectionMethod projection = ProjectionMethod::alternating_one_shot;
  // When projection = alternating_one_shot, the last `finishing_rounds`
  // iterations project to convergence instead.
  std::size_t finishing_rounds = 3;
  double fix_threshold = 0.99;
  bool vertex_fixing = true;
  std::uint64_t seed = 0;
  // Per-dimension slab centers b_j of the balance constraints (empty = 0);
  // recursive bisection uses these for uneven target splits.
  std::vector<double> shifts;
  // Optional explicit starting point (projected onto K first); default is
  // x = 0, or the proportional feasible point for shifted problems.
  std::vector<double> initial_x;
  ProjectOptions projection_options;

  void validate() const;  // throws ValidationError
};

struct FractionalSolution {
  std::vector<double> x;            // composite point, |x_i| <= 1
  std::vector<std::uint8_t> fixed;  // 1 = coordinate frozen at its sign
  double objective = 0.0;           // f(x)

  std::size_t fixed_count() const;
};

struct IterationRecord {
  std::size_t iter = 0;
  double objective = 0.0;
  double step_len = 0.0;               // ||x_t - x_{t+1}||_2
  std::vector<double> imbalance;       // |<w^j,x> - b_j| / W_j per dimension
  std::size_t fixed_count = 0;
  double gamma = 0.0;                  // realized step scale
  bool saturated = false;              // step search hit a projection wall
  bool renoised = false;               // stationary-point noise re-injection
};

struct IterationTrace {
  std::vector<IterationRecord> records;
};

// CSV with header "iter,objective,step_len,max_imbalance,fixed_count" and
// >= 9 significant digits per value.
void write_trace_csv(const IterationTrace& trace, std::ostream& out);

// z = x plus independent per-coordinate Gaussian noise of standard
// deviation noise_std on the non-fixed coordinates (an empty mask means
// all coordinates are free).  Counter-based randomness: deterministic in
// (seed, iter) and independent of the thread count.  noise_std = 0 returns
// x unchanged.
std::vector<double> gd_noise(std::span<const double> x,
                             std::span<const std::uint8_t> fixed,
                             double noise_std, std::uint64_t seed,
                             std::uint64_t iter = 0);

// f(x) = 1/2 sum_{(u,v) in E} (x_u x_v + 1); deterministic across thread
// counts.
double fractional_objective(const Graph& g, std::span<const double> x);

// Largest adjacency eigenvalue estimate by `iters` power-iteration steps
// from a seeded random start (0 for edgeless graphs).
double power_iteration_lmax(const Graph& g, std::size_t iters,
                            std::uint64_t seed);

// Run the projected gradient ascent loop.  Deterministic given (g, ws, cfg)
// including the worker-thread count.  Throws InfeasibleError if vertex
// fixing makes the free subproblem infeasible.
struct GdOutput {
  FractionalSolution solution;
  IterationTrace trace;
};
GdOutput run_gd(const Graph& g, const WeightSet& ws, const GdConfig& cfg);

}  // namespace mdbgp
