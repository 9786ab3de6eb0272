#include "mdbgp/projection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mdbgp/errors.hpp"
#include "mdbgp/parallel.hpp"
#include "mdbgp/rng.hpp"
#include "projection_internal.hpp"

namespace mdbgp {

void BalanceSpec::validate() const {
  if (weights == nullptr) throw ValidationError("balance spec: missing weights");
  if (weights->dims() == 0) throw ValidationError("balance spec: no weight rows");
  if (!(epsilon >= 0.0)) throw ValidationError("balance spec: epsilon must be >= 0");
  if (!shifts.empty() && shifts.size() != weights->dims()) {
    throw ValidationError("balance spec: shifts size does not match dimensions");
  }
  if (!halfwidth_override.empty() &&
      halfwidth_override.size() != weights->dims()) {
    throw ValidationError("balance spec: half-width size does not match dimensions");
  }
  for (std::size_t j = 0; j < weights->dims(); ++j) {
    if (!(halfwidth(j) >= 0.0)) {
      throw ValidationError("balance spec: negative slab half-width");
    }
    if (!std::isfinite(shift(j))) {
      throw ValidationError("balance spec: non-finite shift");
    }
  }
}

std::string to_string(ProjectionMethod m) {
  switch (m) {
    case ProjectionMethod::exact: return "exact";
    case ProjectionMethod::alternating_one_shot: return "alternating-one-shot";
    case ProjectionMethod::alternating: return "alternating";
    case ProjectionMethod::dykstra: return "dykstra";
    case ProjectionMethod::nested: return "nested";
  }
  return "?";
}

ProjectionMethod projection_method_from_string(const std::string& name) {
  if (name == "exact") return ProjectionMethod::exact;
  if (name == "alternating") return ProjectionMethod::alternating;
  if (name == "alternating-one-shot" || name == "alternating_one_shot") {
    return ProjectionMethod::alternating_one_shot;
  }
  if (name == "dykstra") return ProjectionMethod::dykstra;
  if (name == "nested") return ProjectionMethod::nested;
  throw ParseError("unknown projection method \"" + name +
                   "\" (expected exact, alternating, alternating-one-shot, "
                   "dykstra, or nested)");
}

namespace {

void check_lengths(std::span<const double> y, std::span<const double> w,
                   const char* who) {
  if (y.size() != w.size()) {
    throw ValidationError(std::string(who) + ": length mismatch");
  }
}

void check_positive(std::span<const double> w, const char* who) {
  for (double v : w) {
    if (!(v > 0.0)) {
      throw ValidationError(std::string(who) + ": weights must be strictly positive");
    }
  }
}

// Relative amount by which x sits outside the slabs of `spec`.
double spec_slab_violation(std::span<const double> x, const BalanceSpec& spec) {
  double worst = 0.0;
  for (std::size_t j = 0; j < spec.dims(); ++j) {
    const double resid =
        std::abs(par::dot(spec.row(j), x) - spec.shift(j)) - spec.halfwidth(j);
    const double scale = std::max(1.0, spec.total(j));
    worst = std::max(worst, resid / scale);
  }
  return worst;
}

}  // namespace

namespace detail {

// h(lambda) = sum_i w_i clamp1(y_i - lambda w_i) is non-increasing and
// piecewise linear with kinks at (y_i -+ 1)/w_i; it spans [-sum(w), sum(w)].
// The root segment is located by bisecting on the exact median of the
// breakpoints still inside the bracket, folding every coordinate whose
// clamp regime is decided over the whole bracket into affine accumulators.
// The active breakpoint count at least halves per round, so the total work
// is linear; the final lambda comes from a full-precision closed-form pass
// over all coordinates, independent of the folded bookkeeping.
double exact_1d_multiplier(std::span<const double> y,
                           std::span<const double> w,
                           std::span<const double> inv_w, double ce,
                           Scratch1d& scratch) {
  const std::size_t n = y.size();
  // Breakpoints once per call; the rounds below only re-read them.
  scratch.lo.resize(n);
  scratch.hi.resize(n);
  // Bracket strictly containing every breakpoint: h(L) = +sum(w),
  // h(R) = -sum(w), so h(L) >= ce >= h(R) holds for any reachable target.
  double L = std::numeric_limits<double>::infinity();
  double R = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    const double iv = inv_w[i];
    const double blo = (y[i] - 1.0) * iv;
    const double bhi = (y[i] + 1.0) * iv;
    scratch.lo[i] = blo;
    scratch.hi[i] = bhi;
    L = std::min(L, blo);
    R = std::max(R, bhi);
  }
  L -= 1.0;
  R += 1.0;

  // F(lambda) = Fc + lambda * Fs collects coordinates resolved over the
  // whole bracket (clamped either way, or free throughout).
  double Fc = 0.0, Fs = 0.0;
  scratch.coords.resize(n);
  for (std::size_t i = 0; i < n; ++i) scratch.coords[i] = i;
  std::size_t active = n;
  std::size_t rounds_since_exact = 0;

  while (true) {
    // Reclassify the still-active coordinates against the current bracket,
    // folding the resolved ones.
    std::size_t kept = 0;
    for (std::size_t t = 0; t < active; ++t) {
      const std::size_t i = scratch.coords[t];
      const double lo = scratch.lo[i];
      const double hi = scratch.hi[i];
      if (lo >= R) {  // y_i - lambda w_i >= 1 on the bracket
        Fc += w[i];
        continue;
      }
      if (hi <= L) {  // <= -1 on the bracket
        Fc -= w[i];
        continue;
      }
      if (lo <= L && hi >= R) {  // free on the whole bracket
        Fc += w[i] * y[i];
        Fs -= w[i] * w[i];
        continue;
      }
      scratch.coords[kept++] = i;
    }
    active = kept;
    if (active == 0) break;  // every active coordinate has an in-bracket kink

    // Pivot on an in-bracket breakpoint.  The usual round takes the median
    // of a strided sample — O(1) and in practice a near-halving pivot —
    // while every 16th round takes the exact median of all remaining
    // breakpoints, which guarantees geometric progress no matter how the
    // sample medians behave.  Either way the pivot is a real breakpoint
    // strictly inside (L, R), so each round shrinks the bracket past it.
    double piv;
    if (++rounds_since_exact >= 16) {
      rounds_since_exact = 0;
      scratch.bp.clear();
      for (std::size_t t = 0; t < active; ++t) {
        const std::size_t i = scratch.coords[t];
        if (scratch.lo[i] > L && scratch.lo[i] < R) {
          scratch.bp.push_back(scratch.lo[i]);
        }
        if (scratch.hi[i] > L && scratch.hi[i] < R) {
          scratch.bp.push_back(scratch.hi[i]);
        }
      }
      const auto mid = scratch.bp.begin() +
                       static_cast<std::ptrdiff_t>(scratch.bp.size() / 2);
      std::nth_element(scratch.bp.begin(), mid, scratch.bp.end());
      piv = *mid;
    } else {
      constexpr std::size_t kSample = 127;
      double samp[kSample];
      std::size_t ns = 0;
      const std::size_t stride = active / kSample + 1;
      for (std::size_t t = 0; t < active && ns < kSample; t += stride) {
        const std::size_t i = scratch.coords[t];
        if (scratch.lo[i] > L && scratch.lo[i] < R) samp[ns++] = scratch.lo[i];
        if (ns < kSample && scratch.hi[i] > L && scratch.hi[i] < R) {
          samp[ns++] = scratch.hi[i];
        }
      }
      std::nth_element(samp, samp + ns / 2, samp + ns);
      piv = samp[ns / 2];
    }

    double hp = Fc + piv * Fs;
    for (std::size_t t = 0; t < active; ++t) {
      const std::size_t i = scratch.coords[t];
      hp += w[i] * clamp1(y[i] - piv * w[i]);
    }
    if (hp >= ce) {
      L = piv;
    } else {
      R = piv;
    }
  }

  // h is affine on [L, R]; solve in full precision over all coordinates.
  const double lm = 0.5 * (L + R);
  double value = 0.0, slope = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double pos = y[i] - lm * w[i];
    value += w[i] * clamp1(pos);
    if (std::abs(pos) < 1.0) slope += w[i] * w[i];
  }
  if (slope > 0.0) {
    return std::min(R, std::max(L, lm + (value - ce) / slope));
  }
  return lm;  // flat segment: any multiplier in it gives the same x
}

}  // namespace detail

ProjectionResult project_exact_1d(std::span<const double> y,
                                  std::span<const double> w, double c) {
  check_lengths(y, w, "project_exact_1d");
  check_positive(w, "project_exact_1d");
  const std::size_t n = y.size();

  ProjectionResult res;
  res.method = ProjectionMethod::exact;
  if (n == 0) {
    if (std::abs(c) > 0.0) throw InfeasibleError("project_exact_1d: empty problem with c != 0");
    res.lambda = {0.0};
    return res;
  }

  const double sumw = par::sum(w);
  const double feas_slack = 1e-12 * sumw;
  if (c > sumw + feas_slack || c < -sumw - feas_slack) {
    throw InfeasibleError("project_exact_1d: target outside achievable range [-" +
                          std::to_string(sumw) + ", " + std::to_string(sumw) + "]");
  }
  const double ce = std::min(sumw, std::max(-sumw, c));

  std::vector<double> inv_w(n);
  for (std::size_t i = 0; i < n; ++i) inv_w[i] = 1.0 / w[i];
  detail::Scratch1d scratch;
  const double lambda = detail::exact_1d_multiplier(y, w, inv_w, ce, scratch);

  res.x.resize(n);
  for (std::size_t i = 0; i < n; ++i) res.x[i] = clamp1(y[i] - lambda * w[i]);
  res.lambda = {lambda};
  res.iterations = 1;
  return res;
}

std::vector<double> project_box(std::span<const double> y) {
  std::vector<double> x(y.size());
  par::parallel_for(y.size(), [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) x[i] = clamp1(y[i]);
  });
  return x;
}

std::vector<double> project_hyperplane(std::span<const double> y,
                                       std::span<const double> w, double c) {
  check_lengths(y, w, "project_hyperplane");
  const double norm2 = par::dot(w, w);
  if (!(norm2 > 0.0)) {
    throw ValidationError("project_hyperplane: weight row is zero");
  }
  const double shift = (par::dot(w, y) - c) / norm2;
  std::vector<double> x(y.size());
  par::parallel_for(y.size(), [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) x[i] = y[i] - shift * w[i];
  });
  return x;
}

ProjectionResult alternating_projection(std::span<const double> y,
                                        const BalanceSpec& spec,
                                        AlternatingMode mode, double tol,
                                        std::size_t max_rounds) {
  spec.validate();
  if (y.size() != spec.size()) {
    throw ValidationError("alternating_projection: point length mismatch");
  }
  const std::size_t n = y.size();
  const std::size_t d = spec.dims();

  std::vector<double> norm2(d);
  for (std::size_t j = 0; j < d; ++j) {
    norm2[j] = par::dot(spec.row(j), spec.row(j));
    if (!(norm2[j] > 0.0)) {
      throw ValidationError("alternating_projection: zero weight row");
    }
  }

  ProjectionResult res;
  res.method = mode == AlternatingMode::one_shot
                   ? ProjectionMethod::alternating_one_shot
                   : ProjectionMethod::alternating;
  std::vector<double> x(y.begin(), y.end());
  std::vector<double> prev(n);
  const double disp_limit = tol * std::sqrt(static_cast<double>(std::max<std::size_t>(1, n)));

  std::size_t rounds = 0;
  bool converged = false;
  while (rounds < std::max<std::size_t>(1, max_rounds)) {
    ++rounds;
    prev = x;
    for (std::size_t j = 0; j < d; ++j) {
      const auto& w = spec.row(j);
      const double shift = (par::dot(w, x) - spec.shift(j)) / norm2[j];
      par::parallel_for(n, [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) x[i] -= shift * w[i];
      });
    }
    par::parallel_for(n, [&](std::size_t b, std::size_t e) {
      for (std::size_t i = b; i < e; ++i) x[i] = clamp1(x[i]);
    });
    if (mode == AlternatingMode::one_shot) break;
    const double disp = std::sqrt(par::squared_distance(x, prev));
    if (disp <= disp_limit && spec_slab_violation(x, spec) <= tol) {
      converged = true;
      break;
    }
  }

  res.x = std::move(x);
  res.iterations = rounds;
  res.slab_violation = spec_slab_violation(res.x, spec);
  res.converged = mode == AlternatingMode::one_shot
                      ? res.slab_violation <= tol
                      : converged;
  if (!res.converged && mode == AlternatingMode::to_convergence) {
    res.note = "alternating projection: round cap reached before membership";
  }
  return res;
}

namespace detail {

// Dykstra's scheme over explicit slabs plus the box; also used as the
// degenerate-geometry fallback of the exact 2D solver (with zero-width
// slabs standing in for equality constraints).
ProjectionResult dykstra_core(std::span<const double> y,
                              const std::vector<std::span<const double>>& rows,
                              const std::vector<double>& centers,
                              const std::vector<double>& halfwidths,
                              double tol, std::size_t max_rounds) {
  const std::size_t n = y.size();
  const std::size_t d = rows.size();
  std::vector<double> norm2(d), scale(d);
  for (std::size_t j = 0; j < d; ++j) {
    norm2[j] = par::dot(rows[j], rows[j]);
    if (!(norm2[j] > 0.0)) throw ValidationError("dykstra: zero weight row");
    double s = 0.0;
    for (double wv : rows[j]) s += std::abs(wv);
    scale[j] = std::max(1.0, s);
  }

  std::vector<double> x(y.begin(), y.end());
  std::vector<std::vector<double>> corr(d + 1, std::vector<double>(n, 0.0));
  std::vector<double> z(n), start(n);
  const double disp_limit =
      tol * std::sqrt(static_cast<double>(std::max<std::size_t>(1, n)));

  const auto violation = [&]() {
    double worst = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double resid =
          std::abs(par::dot(rows[j], x) - centers[j]) - halfwidths[j];
      worst = std::max(worst, resid / scale[j]);
    }
    return worst;
  };

  ProjectionResult res;
  res.method = ProjectionMethod::dykstra;
  std::size_t rounds = 0;
  bool converged = false;
  while (rounds < max_rounds) {
    ++rounds;
    start = x;
    for (std::size_t j = 0; j < d; ++j) {
      par::parallel_for(n, [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) z[i] = x[i] + corr[j][i];
      });
      const double resid = par::dot(rows[j], z) - centers[j];
      double shift = 0.0;
      if (std::abs(resid) > halfwidths[j]) {
        shift = (resid - std::copysign(halfwidths[j], resid)) / norm2[j];
      }
      par::parallel_for(n, [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) {
          const double xn = z[i] - shift * rows[j][i];
          corr[j][i] = z[i] - xn;
          x[i] = xn;
        }
      });
    }
    par::parallel_for(n, [&](std::size_t b, std::size_t e) {
      for (std::size_t i = b; i < e; ++i) {
        const double zi = x[i] + corr[d][i];
        const double xn = clamp1(zi);
        corr[d][i] = zi - xn;
        x[i] = xn;
      }
    });
    const double disp = std::sqrt(par::squared_distance(x, start));
    if (disp <= disp_limit && violation() <= tol) {
      converged = true;
      break;
    }
  }

  res.x = std::move(x);
  res.iterations = rounds;
  res.converged = converged;
  if (!converged) res.note = "dykstra: round cap reached before membership";
  double worst = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    const double resid =
        std::abs(par::dot(rows[j], res.x) - centers[j]) - halfwidths[j];
    worst = std::max(worst, resid / scale[j]);
  }
  res.slab_violation = std::max(0.0, worst);
  return res;
}

}  // namespace detail

ProjectionResult dykstra_projection(std::span<const double> y,
                                    const BalanceSpec& spec, double tol,
                                    std::size_t max_rounds) {
  spec.validate();
  if (y.size() != spec.size()) {
    throw ValidationError("dykstra_projection: point length mismatch");
  }
  std::vector<std::span<const double>> rows;
  std::vector<double> centers, halfwidths;
  for (std::size_t j = 0; j < spec.dims(); ++j) {
    rows.emplace_back(spec.row(j));
    centers.push_back(spec.shift(j));
    halfwidths.push_back(spec.halfwidth(j));
  }
  return detail::dykstra_core(y, rows, centers, halfwidths, tol, max_rounds);
}

namespace {

struct NestedState {
  std::span<const double> y;
  const std::vector<std::vector<double>>* rows = nullptr;
  const std::vector<double>* targets = nullptr;
  double delta = 1e-9;
  double growth = 2.0;
  double initial_bound = 1.0;
  std::size_t evals = 0;
  std::vector<std::vector<double>> ybuf;  // ybuf[t] = y - sum_{j<t} lambda_j w^j
  std::vector<double> lambda;
  std::vector<double> x;

  std::size_t depth() const { return rows->size(); }
};

// Evaluate constraint level t at multiplier lam, recursively solving the
// deeper levels first; leaves x and the deeper lambdas consistent with lam.
double nested_eval(NestedState& st, std::size_t t, double lam);

// Binary search for lambda_t bringing constraint t to its target, given
// ybuf[t]; Delta_t is monotone in lambda_t, direction detected from the
// bracket endpoints.
void nested_solve(NestedState& st, std::size_t t) {
  const double c = (*st.targets)[t];
  double bound = st.initial_bound;
  double lo = -bound, hi = bound;
  double vlo = nested_eval(st, t, lo);
  double vhi = nested_eval(st, t, hi);
  bool bracketed = false;
  for (int k = 0; k <= 60; ++k) {
    if ((vlo - c) * (vhi - c) <= 0.0) {
      bracketed = true;
      break;
    }
    bound *= st.growth;
    lo = -bound;
    hi = bound;
    vlo = nested_eval(st, t, lo);
    vhi = nested_eval(st, t, hi);
  }
  if (!bracketed) {
    throw InfeasibleError(
        "nested projection: bound expansion cap reached for constraint " +
        std::to_string(t + 1) + " (infeasible or unbounded target)");
  }
  const bool increasing = vhi >= vlo;
  std::size_t guard = 0;
  while (hi - lo > st.delta && guard < 200) {
    ++guard;
    const double mid = 0.5 * (lo + hi);
    const double vm = nested_eval(st, t, mid);
    const bool go_right = increasing ? (vm < c) : (vm > c);
    if (go_right) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  const double lam = 0.5 * (lo + hi);
  nested_eval(st, t, lam);  // leave deeper state consistent with lam
  st.lambda[t] = lam;
}

double nested_eval(NestedState& st, std::size_t t, double lam) {
  ++st.evals;
  const std::size_t n = st.y.size();
  const auto& w = (*st.rows)[t];
  std::vector<double>& next = st.ybuf[t + 1];
  for (std::size_t i = 0; i < n; ++i) next[i] = st.ybuf[t][i] - lam * w[i];
  st.lambda[t] = lam;
  if (t + 1 == st.depth()) {
    for (std::size_t i = 0; i < n; ++i) st.x[i] = clamp1(next[i]);
  } else {
    nested_solve(st, t + 1);
  }
  double h = 0.0;
  for (std::size_t i = 0; i < n; ++i) h += w[i] * st.x[i];
  return h;
}

}  // namespace

ProjectionResult nested_projection(std::span<const double> y,
                                   const std::vector<std::vector<double>>& rows,
                                   const std::vector<double>& targets,
                                   double delta, double initial_bound,
                                   double growth) {
  const std::size_t d = rows.size();
  if (d == 0) throw ValidationError("nested_projection: no constraint rows");
  if (targets.size() != d) {
    throw ValidationError("nested_projection: targets size mismatch");
  }
  if (!(delta > 0.0)) throw ValidationError("nested_projection: delta must be > 0");
  if (!(growth > 1.0)) throw ValidationError("nested_projection: growth must be > 1");
  double min_w = std::numeric_limits<double>::infinity();
  for (const auto& w : rows) {
    if (w.size() != y.size()) {
      throw ValidationError("nested_projection: row length mismatch");
    }
    check_positive(w, "nested_projection");
    for (double v : w) min_w = std::min(min_w, v);
  }
  for (std::size_t j = 0; j < d; ++j) {
    double sumw = 0.0;
    for (double v : rows[j]) sumw += v;
    if (std::abs(targets[j]) > sumw * (1.0 + 1e-12)) {
      throw InfeasibleError("nested_projection: target " + std::to_string(j + 1) +
                            " outside achievable range");
    }
  }

  NestedState st;
  st.y = y;
  st.rows = &rows;
  st.targets = &targets;
  st.delta = delta;
  st.growth = growth;
  if (initial_bound > 0.0) {
    st.initial_bound = initial_bound;
  } else {
    double max_y = 0.0;
    for (double v : y) max_y = std::max(max_y, std::abs(v));
    st.initial_bound = y.empty() ? 1.0 : (max_y + 1.0) / min_w;
  }
  st.ybuf.assign(d + 1, std::vector<double>(y.size()));
  st.ybuf[0].assign(y.begin(), y.end());
  st.lambda.assign(d, 0.0);
  st.x.assign(y.size(), 0.0);
  if (y.empty()) st.x.clear();

  nested_solve(st, 0);

  // A valid bracket of the (monotone, continuous) level functions implies a
  // root, so the terminal residuals must be tiny.  Large ones mean the
  // bracket was an artifact of catastrophic cancellation at extreme
  // multipliers, which happens exactly when the equality system is
  // incompatible (for example, more active constraints than free
  // coordinates).  The tolerance combines a fixed relative floor with the
  // precision the bisection can deliver: delta times the level function's
  // largest slope sum(w^2), across all d levels.
  for (std::size_t j = 0; j < d; ++j) {
    double dot = 0.0, sumw = 0.0, sumw2 = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
      dot += rows[j][i] * st.x[i];
      sumw += rows[j][i];
      sumw2 += rows[j][i] * rows[j][i];
    }
    const double tol = std::max(1e-7 * std::max(1.0, sumw),
                                16.0 * static_cast<double>(d) * delta * sumw2);
    const double resid = std::abs(dot - targets[j]);
    if (!(resid <= tol)) {
      throw InfeasibleError(
          "nested projection: constraint " + std::to_string(j + 1) +
          " residual " + std::to_string(resid) +
          " exceeds tolerance (the equality targets admit no common "
          "solution)");
    }
  }

  ProjectionResult res;
  res.method = ProjectionMethod::nested;
  res.x = std::move(st.x);
  res.lambda = std::move(st.lambda);
  res.iterations = st.evals;
  return res;
}

namespace {

// One equality-restricted sub-problem of the sign-pattern enumeration.
struct PatternCandidate {
  ProjectionResult result;       // solver output for the active equalities
  std::vector<double> lambda_full;  // expanded to all d dimensions
  double dist2 = 0.0;
  int zeros = 0;
};

}  // namespace

ProjectionResult project_K(std::span<const double> y, const BalanceSpec& spec,
                           ProjectionMethod method,
                           const ProjectOptions& opts) {
  spec.validate();
  if (y.size() != spec.size()) {
    throw ValidationError("project_K: point length mismatch");
  }

  if (method == ProjectionMethod::alternating_one_shot) {
    return alternating_projection(y, spec, AlternatingMode::one_shot, opts.tol,
                                  opts.max_rounds);
  }
  if (method == ProjectionMethod::alternating) {
    return alternating_projection(y, spec, AlternatingMode::to_convergence,
                                  opts.tol, opts.max_rounds);
  }
  if (method == ProjectionMethod::dykstra) {
    return dykstra_projection(y, spec, opts.tol, opts.max_rounds);
  }

  const std::size_t d = spec.dims();
  std::size_t patterns = 1;
  for (std::size_t j = 0; j < d; ++j) patterns *= 3;

  bool have_best = false;
  PatternCandidate best;
  std::size_t total_work = 0;

  std::vector<int> digit(d);
  for (std::size_t code = 0; code < patterns; ++code) {
    std::size_t rest = code;
    int zeros = 0;
    for (std::size_t j = 0; j < d; ++j) {
      digit[j] = static_cast<int>(rest % 3);  // 0 drop, 1 upper(+), 2 lower(-)
      rest /= 3;
      if (digit[j] == 0) ++zeros;
    }

    std::vector<std::size_t> active;
    std::vector<double> targets;
    for (std::size_t j = 0; j < d; ++j) {
      if (digit[j] != 0) {
        active.push_back(j);
        targets.push_back(spec.shift(j) + (digit[j] == 1 ? spec.halfwidth(j)
                                                         : -spec.halfwidth(j)));
      }
    }

    ProjectionResult cand;
    try {
      if (active.empty()) {
        cand.x = project_box(y);
        cand.method = method == ProjectionMethod::nested
                          ? ProjectionMethod::nested
                          : ProjectionMethod::exact;
        cand.lambda.clear();
        cand.iterations = 1;
      } else if (method == ProjectionMethod::exact && active.size() == 1) {
        cand = project_exact_1d(y, spec.row(active[0]), targets[0]);
      } else if (method == ProjectionMethod::exact && active.size() == 2) {
        cand = project_exact_2d(y, spec.row(active[0]), spec.row(active[1]),
                                targets[0], targets[1],
                                rng::derive(opts.seed, code));
      } else {
        std::vector<std::vector<double>> rows;
        for (std::size_t j : active) rows.push_back(spec.row(j));
        cand = nested_projection(y, rows, targets, opts.nested_delta,
                                 opts.nested_initial_bound, opts.nested_growth);
      }
    } catch (const InfeasibleError&) {
      continue;  // this sign pattern admits no solution
    }
    total_work += cand.iterations;
    if (!cand.converged) continue;

    // Solved multipliers must match the guessed signs...
    bool ok = true;
    if (!cand.lambda.empty()) {
      for (std::size_t p = 0; p < active.size() && ok; ++p) {
        const double lam = cand.lambda[p];
        const double slack = 1e-9 * (1.0 + std::abs(lam));
        if (digit[active[p]] == 1 && lam < -slack) ok = false;
        if (digit[active[p]] == 2 && lam > slack) ok = false;
      }
    }
    // ...and the dropped slabs must already hold at the candidate.
    for (std::size_t j = 0; j < d && ok; ++j) {
      if (digit[j] != 0) continue;
      const double resid = std::abs(par::dot(spec.row(j), cand.x) - spec.shift(j));
      if (resid > spec.halfwidth(j) + 1e-9 * std::max(1.0, spec.total(j))) {
        ok = false;
      }
    }
    if (!ok) continue;

    PatternCandidate pc;
    pc.dist2 = par::squared_distance(cand.x, y);
    pc.zeros = zeros;
    pc.lambda_full.assign(d, 0.0);
    for (std::size_t p = 0; p < active.size() && p < cand.lambda.size(); ++p) {
      pc.lambda_full[active[p]] = cand.lambda[p];
    }
    pc.result = std::move(cand);

    const double tie = 1e-12 * (1.0 + (have_best ? best.dist2 : pc.dist2));
    const bool take = !have_best || pc.dist2 < best.dist2 - tie ||
                      (pc.dist2 < best.dist2 + tie && pc.zeros > best.zeros);
    if (take) {
      best = std::move(pc);
      have_best = true;
    }
  }

  if (!have_best) {
    throw InfeasibleError(
        "project_K: no multiplier sign pattern yields a feasible candidate "
        "(the constraint set is empty or numerically empty)");
  }

  ProjectionResult out = std::move(best.result);
  // Iterative fallbacks inside a pattern (degenerate 2D geometry) carry no
  // multipliers; every other path reports the full lambda vector.
  if (!out.lambda.empty() || out.method != ProjectionMethod::dykstra) {
    out.lambda = std::move(best.lambda_full);
  }
  out.iterations = total_work;
  out.slab_violation = spec_slab_violation(out.x, spec);
  return out;
}

}  // namespace mdbgp
