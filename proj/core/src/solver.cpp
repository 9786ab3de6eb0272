#include "mdbgp/solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "mdbgp/errors.hpp"
#include "mdbgp/parallel.hpp"
#include "mdbgp/rng.hpp"

namespace mdbgp {

void GdConfig::validate() const {
  if (iterations < 1) throw ValidationError("gd config: iterations must be >= 1");
  if (!(epsilon >= 0.0)) throw ValidationError("gd config: epsilon must be >= 0");
  if (!(fix_threshold > 0.0 && fix_threshold <= 1.0)) {
    throw ValidationError("gd config: fix_threshold must be in (0, 1]");
  }
  if (step_mode == StepMode::fixed && !(gamma > 0.0)) {
    throw ValidationError("gd config: fixed step mode needs gamma > 0");
  }
  if (step_mode == StepMode::target_length && target_length == 0.0) {
    throw ValidationError("gd config: target_length must be nonzero (negative = auto)");
  }
}

std::size_t FractionalSolution::fixed_count() const {
  std::size_t c = 0;
  for (std::uint8_t f : fixed) c += f;
  return c;
}

void write_trace_csv(const IterationTrace& trace, std::ostream& out) {
  out << "iter,objective,step_len,max_imbalance,fixed_count\n";
  char buf[160];
  for (const IterationRecord& r : trace.records) {
    double imb = 0.0;
    for (double v : r.imbalance) imb = std::max(imb, v);
    std::snprintf(buf, sizeof buf, "%zu,%.12g,%.12g,%.12g,%zu\n", r.iter,
                  r.objective, r.step_len, imb, r.fixed_count);
    out << buf;
  }
}

std::vector<double> gd_noise(std::span<const double> x,
                             std::span<const std::uint8_t> fixed,
                             double noise_std, std::uint64_t seed,
                             std::uint64_t iter) {
  if (!fixed.empty() && fixed.size() != x.size()) {
    throw ValidationError("gd_noise: fixed mask does not match x");
  }
  if (noise_std < 0.0) {
    throw ValidationError("gd_noise: noise_std must be >= 0");
  }
  std::vector<double> z(x.begin(), x.end());
  if (noise_std == 0.0 || x.empty()) return z;
  const std::uint64_t nseed = rng::derive(seed, 0x4e01, iter);
  par::parallel_for(x.size(), [&](std::size_t b, std::size_t e) {
    for (std::size_t v = b; v < e; ++v) {
      if (fixed.empty() || fixed[v] == 0) {
        z[v] += noise_std * rng::counter_gaussian(nseed, v);
      }
    }
  });
  return z;
}

double fractional_objective(const Graph& g, std::span<const double> x) {
  if (x.size() != g.n) {
    throw ValidationError("fractional_objective: point length mismatch");
  }
  if (g.m == 0) return 0.0;
  std::vector<double> edge_terms(g.n, 0.0);
  par::parallel_for(g.n, [&](std::size_t b, std::size_t e) {
    for (std::size_t u = b; u < e; ++u) {
      double s = 0.0;
      for (VertexId v : g.adjacent(static_cast<VertexId>(u))) {
        if (v > u) s += x[v];
      }
      edge_terms[u] = x[u] * s;
    }
  });
  return 0.5 * static_cast<double>(g.m) + 0.5 * par::sum(edge_terms);
}

double power_iteration_lmax(const Graph& g, std::size_t iters,
                            std::uint64_t seed) {
  if (g.m == 0 || g.n == 0) return 0.0;
  std::vector<double> v(g.n), av(g.n);
  for (std::size_t i = 0; i < g.n; ++i) {
    v[i] = rng::counter_gaussian(seed, 0x9e, i);
  }
  double nrm = std::sqrt(par::dot(v, v));
  if (nrm <= 0.0) {
    v.assign(g.n, 1.0);
    nrm = std::sqrt(static_cast<double>(g.n));
  }
  for (double& c : v) c /= nrm;
  double lam = 0.0;
  for (std::size_t k = 0; k < iters; ++k) {
    adjacency_multiply(g, v, av);
    lam = std::sqrt(par::dot(av, av));  // ||Av|| with ||v|| = 1
    if (lam <= 1e-30) {
      for (std::size_t i = 0; i < g.n; ++i) {
        v[i] = rng::counter_gaussian(seed, 0x9f, k, i);
      }
      const double rn = std::sqrt(par::dot(v, v));
      for (double& c : v) c /= rn;
      continue;
    }
    for (std::size_t i = 0; i < g.n; ++i) v[i] = av[i] / lam;
  }
  return lam;
}

namespace {

struct StepOutcome {
  std::vector<double> x;  // projected free coordinates
  double gamma = 0.0;
  bool saturated = false;
};

// Search gamma so that ||project(z + gamma*grad) - z|| lands within
// [0.5, 1.5] of the target length; when the projection saturates before
// half the target is reachable, the max-displacement point is used.
StepOutcome adaptive_step(std::span<const double> z,
                          std::span<const double> grad, double grad_norm,
                          double target, const BalanceSpec& spec,
                          ProjectionMethod method, const ProjectOptions& opts) {
  const std::size_t nf = z.size();
  std::vector<double> y(nf);
  const auto eval = [&](double gamma) {
    for (std::size_t i = 0; i < nf; ++i) y[i] = z[i] + gamma * grad[i];
    ProjectionResult pr = project_K(y, spec, method, opts);
    const double disp = std::sqrt(par::squared_distance(pr.x, z));
    return std::pair<std::vector<double>, double>(std::move(pr.x), disp);
  };

  const double lo_band = 0.5 * target, hi_band = 1.5 * target;
  double gamma = target / grad_norm;
  auto [x0, d0] = eval(gamma);
  if (d0 >= lo_band && d0 <= hi_band) return {std::move(x0), gamma, false};

  double glo = 0.0, ghi = 0.0;
  if (d0 < lo_band) {
    // Grow; keep the best displacement in case the projection saturates.
    std::vector<double> best_x = std::move(x0);
    double best_d = d0, best_g = gamma;
    glo = gamma;
    bool bracketed = false;
    for (int k = 0; k < 40; ++k) {
      gamma *= 2.0;
      auto [xk, dk] = eval(gamma);
      if (dk > best_d) {
        best_x = xk;
        best_d = dk;
        best_g = gamma;
      }
      if (dk >= lo_band) {
        if (dk <= hi_band) return {std::move(xk), gamma, false};
        ghi = gamma;
        bracketed = true;
        break;
      }
      glo = gamma;
    }
    if (!bracketed) return {std::move(best_x), best_g, true};
  } else {
    // Shrink.
    ghi = gamma;
    bool bracketed = false;
    for (int k = 0; k < 40; ++k) {
      gamma *= 0.5;
      auto [xk, dk] = eval(gamma);
      if (dk <= hi_band) {
        if (dk >= lo_band) return {std::move(xk), gamma, false};
        glo = gamma;
        bracketed = true;
        break;
      }
      ghi = gamma;
    }
    if (!bracketed) {
      auto [xk, dk] = eval(gamma);
      return {std::move(xk), gamma, false};
    }
  }

  // Bisect the band crossing.
  std::vector<double> last_x;
  double last_g = 0.5 * (glo + ghi);
  for (int k = 0; k < 20; ++k) {
    const double mid = 0.5 * (glo + ghi);
    auto [xm, dm] = eval(mid);
    last_x = std::move(xm);
    last_g = mid;
    if (dm < lo_band) {
      glo = mid;
    } else if (dm > hi_band) {
      ghi = mid;
    } else {
      return {std::move(last_x), mid, false};
    }
  }
  return {std::move(last_x), last_g, false};
}

}  // namespace

GdOutput run_gd(const Graph& g, const WeightSet& ws, const GdConfig& cfg) {
  cfg.validate();
  if (ws.n != g.n) throw ValidationError("run_gd: weights do not match graph");
  const std::size_t n = g.n;
  const std::size_t d = ws.dims();
  if (!cfg.shifts.empty() && cfg.shifts.size() != d) {
    throw ValidationError("run_gd: shifts size does not match weight dimensions");
  }
  if (!cfg.initial_x.empty() && cfg.initial_x.size() != n) {
    throw ValidationError("run_gd: initial point length mismatch");
  }

  std::vector<double> beta(d, 0.0);
  if (!cfg.shifts.empty()) beta = cfg.shifts;
  std::vector<double> halfwidths(d);
  for (std::size_t j = 0; j < d; ++j) halfwidths[j] = cfg.epsilon * ws.totals[j];

  GdOutput out;
  out.solution.x.assign(n, 0.0);
  out.solution.fixed.assign(n, 0);
  if (n == 0) return out;

  const double noise_std =
      cfg.noise_std < 0.0 ? 1.0 / std::sqrt(static_cast<double>(n))
                          : cfg.noise_std;
  const double target =
      cfg.target_length < 0.0
          ? 2.0 * std::sqrt(static_cast<double>(n)) /
                static_cast<double>(cfg.iterations)
          : cfg.target_length;

  std::vector<double>& x = out.solution.x;
  std::vector<std::uint8_t>& fixed = out.solution.fixed;
  std::vector<VertexId> free_ids(n);
  for (std::size_t i = 0; i < n; ++i) free_ids[i] = static_cast<VertexId>(i);

  // Restricted balance system over the free coordinates; slab widths stay
  // measured against the full totals, centers absorb the fixed mass.
  WeightSet rws;
  BalanceSpec rspec;
  std::vector<double> b_adj = beta;
  bool dirty = true;
  const auto rebuild = [&]() {
    rws = restrict_weights(ws, free_ids);
    for (std::size_t j = 0; j < d; ++j) {
      double fixed_sum = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (fixed[i]) fixed_sum += ws.rows[j][i] * x[i];
      }
      b_adj[j] = beta[j] - fixed_sum;
    }
    rspec.weights = &rws;
    rspec.epsilon = cfg.epsilon;
    rspec.shifts = b_adj;
    rspec.halfwidth_override = halfwidths;
    dirty = false;
  };

  const auto method_at = [&](std::size_t t) {
    if (cfg.projection == ProjectionMethod::alternating_one_shot &&
        t + cfg.finishing_rounds >= cfg.iterations) {
      return ProjectionMethod::alternating;
    }
    return cfg.projection;
  };

  // Starting point: explicit (projected onto K), else the proportional
  // feasible point for shifted problems, else the origin.
  if (!cfg.initial_x.empty()) {
    rebuild();
    ProjectionResult pr =
        project_K(cfg.initial_x, rspec, method_at(0), cfg.projection_options);
    x = std::move(pr.x);
  } else {
    double c0 = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      if (beta[j] != 0.0 && ws.totals[j] > 0.0) {
        c0 = std::min(1.0, std::max(-1.0, beta[j] / ws.totals[j]));
        break;
      }
    }
    if (c0 != 0.0) x.assign(n, c0);
  }

  std::vector<double> zfull(n), zf, gf, imb(d);
  int zero_gamma_streak = 0;
  bool pending_renoise = false;

  for (std::size_t t = 0; t < cfg.iterations; ++t) {
    if (free_ids.empty()) break;
    if (dirty) rebuild();
    const std::size_t nf = free_ids.size();
    const ProjectionMethod method = method_at(t);

    // Noise step (first iteration, or a stationary-point re-injection).
    const bool noise_now = (t == 0 && noise_std > 0.0) || pending_renoise;
    const bool renoised = pending_renoise;
    pending_renoise = false;
    if (noise_now) {
      zfull = gd_noise(x, fixed, noise_std, cfg.seed, t);
    } else {
      zfull = x;
    }

    // Gradient of f over the composite point (fixed coordinates included).
    std::vector<double> grad = adjacency_multiply(g, zfull);
    zf.resize(nf);
    gf.resize(nf);
    for (std::size_t i = 0; i < nf; ++i) {
      zf[i] = zfull[free_ids[i]];
      gf[i] = grad[free_ids[i]];
    }
    const double gnorm = std::sqrt(par::dot(gf, gf));

    StepOutcome step;
    if (gnorm <= 0.0) {
      ProjectionResult pr = project_K(zf, rspec, method, cfg.projection_options);
      step.x = std::move(pr.x);
      step.gamma = 0.0;
      if (++zero_gamma_streak >= 2 && t + 1 < cfg.iterations) {
        pending_renoise = true;
        zero_gamma_streak = 0;
      }
    } else {
      zero_gamma_streak = 0;
      if (cfg.step_mode == StepMode::fixed) {
        std::vector<double> y(nf);
        for (std::size_t i = 0; i < nf; ++i) y[i] = zf[i] + cfg.gamma * gf[i];
        ProjectionResult pr = project_K(y, rspec, method, cfg.projection_options);
        step.x = std::move(pr.x);
        step.gamma = cfg.gamma;
      } else {
        step = adaptive_step(zf, gf, gnorm, target, rspec, method,
                             cfg.projection_options);
      }
    }

    double step2 = 0.0;
    for (std::size_t i = 0; i < nf; ++i) {
      const double dxi = step.x[i] - x[free_ids[i]];
      step2 += dxi * dxi;
    }
    for (std::size_t i = 0; i < nf; ++i) x[free_ids[i]] = step.x[i];

    // Vertex fixing: coordinates at +-fix_threshold freeze at their sign.
    if (cfg.vertex_fixing) {
      std::vector<VertexId> kept;
      kept.reserve(nf);
      bool changed = false;
      for (VertexId v : free_ids) {
        if (std::abs(x[v]) >= cfg.fix_threshold) {
          x[v] = x[v] > 0.0 ? 1.0 : -1.0;
          fixed[v] = 1;
          changed = true;
        } else {
          kept.push_back(v);
        }
      }
      if (changed) {
        free_ids = std::move(kept);
        dirty = true;
        for (std::size_t j = 0; j < d; ++j) {
          double fixed_sum = 0.0, free_mass = 0.0;
          for (std::size_t i = 0; i < n; ++i) {
            if (fixed[i]) {
              fixed_sum += ws.rows[j][i] * x[i];
            } else {
              free_mass += ws.rows[j][i];
            }
          }
          if (std::abs(fixed_sum - beta[j]) >
              cfg.epsilon * ws.totals[j] + free_mass + 1e-9 * ws.totals[j]) {
            throw InfeasibleError(
                "run_gd: vertex fixing left balance dimension " +
                std::to_string(j + 1) + " unreachable at iteration " +
                std::to_string(t) + " (" + std::to_string(n - free_ids.size()) +
                " fixed)");
          }
        }
      }
    }

    IterationRecord rec;
    rec.iter = t;
    rec.objective = fractional_objective(g, x);
    rec.step_len = std::sqrt(step2);
    for (std::size_t j = 0; j < d; ++j) {
      imb[j] = ws.totals[j] > 0.0
                   ? std::abs(par::dot(ws.rows[j], x) - beta[j]) / ws.totals[j]
                   : 0.0;
    }
    rec.imbalance = imb;
    rec.fixed_count = n - free_ids.size();
    rec.gamma = step.gamma;
    rec.saturated = step.saturated;
    rec.renoised = renoised;
    out.trace.records.push_back(std::move(rec));
  }

  out.solution.objective = fractional_objective(g, x);
  return out;
}

}  // namespace mdbgp
