#include <cmath>
#include <string>
#include <vector>

#include "doctest.h"
#include "mdbgp/errors.hpp"
#include "mdbgp/projection.hpp"
#include "mdbgp/rng.hpp"
#include "oracle/oracle.hpp"
#include "test_util.hpp"

using namespace mdbgp;

namespace {

// Random instance with nonempty K (0 is always feasible for zero shifts).
struct Instance {
  std::vector<double> y;
  WeightSet ws;
  double epsilon = 0.0;

  // Built on demand so the pointer always refers to this instance's ws.
  BalanceSpec spec() const {
    BalanceSpec s;
    s.weights = &ws;
    s.epsilon = epsilon;
    return s;
  }
};

Instance make_instance(std::size_t n, std::size_t d, double eps,
                       std::uint64_t seed) {
  Instance inst;
  inst.y = testutil::random_vector(n, -3.0, 3.0, seed, 100);
  std::vector<std::vector<double>> rows;
  for (std::size_t j = 0; j < d; ++j) {
    rows.push_back(testutil::random_weights(n, seed, 200 + j));
  }
  inst.ws = testutil::weight_set(std::move(rows));
  inst.epsilon = eps;
  return inst;
}

double eps_of(std::uint64_t k) {
  constexpr double kEps[3] = {0.0, 0.05, 0.2};
  return kEps[k % 3];
}

}  // namespace

TEST_CASE("clamp1") {
  CHECK(clamp1(1.5) == 1.0);
  CHECK(clamp1(-2.0) == -1.0);
  CHECK(clamp1(0.3) == 0.3);
}

TEST_CASE("project_exact_1d: hand examples") {
  SUBCASE("already feasible") {
    const std::vector<double> y{0.5, -0.5};
    const std::vector<double> w{1.0, 1.0};
    const ProjectionResult r = project_exact_1d(y, w, 0.0);
    CHECK(testutil::linf(r.x, y) <= 1e-12);
    CHECK(r.lambda[0] == doctest::Approx(0.0).epsilon(1e-12));
  }
  SUBCASE("symmetry forces the midpoint") {
    const ProjectionResult r =
        project_exact_1d(std::vector<double>{2.0, 2.0},
                         std::vector<double>{1.0, 1.0}, 0.0);
    CHECK(r.x[0] == doctest::Approx(0.0).epsilon(1e-10));
    CHECK(r.x[1] == doctest::Approx(0.0).epsilon(1e-10));
    CHECK(r.lambda[0] == doctest::Approx(2.0).epsilon(1e-10));
  }
  SUBCASE("mixed clamp regimes") {
    const ProjectionResult r =
        project_exact_1d(std::vector<double>{3.0, 0.2, -1.0},
                         std::vector<double>{1.0, 1.0, 1.0}, 0.5);
    CHECK(r.lambda[0] == doctest::Approx(-0.15).epsilon(1e-9));
    CHECK(r.x[0] == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(r.x[1] == doctest::Approx(0.35).epsilon(1e-9));
    CHECK(r.x[2] == doctest::Approx(-0.85).epsilon(1e-9));
  }
  SUBCASE("achievable extremes and infeasible targets") {
    const std::vector<double> y{0.0, 0.0};
    const std::vector<double> w{1.0, 1.0};
    const ProjectionResult top = project_exact_1d(y, w, 2.0);
    CHECK(top.x[0] == doctest::Approx(1.0));
    CHECK(top.x[1] == doctest::Approx(1.0));
    CHECK_THROWS_AS(project_exact_1d(y, w, 2.5), InfeasibleError);
    CHECK_THROWS_AS(project_exact_1d(y, w, -2.5), InfeasibleError);
  }
  SUBCASE("constraint value is met to tolerance") {
    for (std::uint64_t inst = 0; inst < 200; ++inst) {
      const std::size_t n = 1 + rng::derive(61, inst) % 8;
      const std::vector<double> y =
          testutil::random_vector(n, -3.0, 3.0, 62, inst);
      const std::vector<double> w = testutil::random_weights(n, 63, inst);
      double sumw = 0.0;
      for (double wi : w) sumw += wi;
      const double c =
          (2.0 * rng::counter_uniform(64, inst) - 1.0) * 0.9 * sumw;
      const ProjectionResult r = project_exact_1d(y, w, c);
      double dot = 0.0;
      for (std::size_t i = 0; i < n; ++i) dot += w[i] * r.x[i];
      CHECK(std::abs(dot - c) <= 1e-9 * sumw);
    }
  }
}

TEST_CASE("project_box") {
  CHECK(project_box(std::vector<double>{2.0, 0.0, -3.0}) ==
        std::vector<double>{1.0, 0.0, -1.0});
  const std::vector<double> inside{0.4, -0.9};
  CHECK(project_box(inside) == inside);
  CHECK(project_box(project_box(std::vector<double>{5.0, -5.0})) ==
        project_box(std::vector<double>{5.0, -5.0}));
}

TEST_CASE("project_hyperplane") {
  const std::vector<double> on_plane{1.0, -1.0};
  const std::vector<double> w{1.0, 1.0};
  CHECK(testutil::linf(project_hyperplane(on_plane, w, 0.0), on_plane) <=
        1e-15);
  CHECK(project_hyperplane(std::vector<double>{1.0, 1.0}, w, 0.0) ==
        std::vector<double>{0.0, 0.0});
  CHECK(project_hyperplane(std::vector<double>{2.0, 0.0},
                           std::vector<double>{1.0, 0.0}, 1.0) ==
        std::vector<double>{1.0, 0.0});
  CHECK_THROWS_AS(project_hyperplane(std::vector<double>{1.0},
                                     std::vector<double>{0.0}, 0.0),
                  ValidationError);
}

TEST_CASE("alternating_projection: fixed points and membership") {
  WeightSet ws = testutil::weight_set({{1.0, 1.0, 1.0}});
  BalanceSpec spec;
  spec.weights = &ws;
  spec.epsilon = 0.2;

  SUBCASE("a point on every center hyperplane is unchanged") {
    const std::vector<double> y{0.5, -0.2, -0.3};  // sum 0, inside box
    for (auto mode : {AlternatingMode::one_shot,
                      AlternatingMode::to_convergence}) {
      const ProjectionResult r = alternating_projection(y, spec, mode);
      CHECK(testutil::linf(r.x, y) <= 1e-12);
      CHECK(r.converged);
    }
  }
  SUBCASE("point outside the box converges into K") {
    const std::vector<double> y{2.0, -2.0, 0.5};
    const ProjectionResult one =
        alternating_projection(y, spec, AlternatingMode::one_shot);
    CHECK(one.slab_violation >= 0.0);  // residual is reported
    const ProjectionResult r = alternating_projection(
        y, spec, AlternatingMode::to_convergence, 1e-10, 100000);
    REQUIRE(r.converged);
    double dot = 0.0;
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(std::abs(r.x[i]) <= 1.0 + 1e-12);
      dot += r.x[i];
    }
    CHECK(std::abs(dot) <= spec.epsilon * 3.0 + 1e-9 * 3.0);
  }
}

TEST_CASE("alternating_projection: never beats the exact distance") {
  for (std::uint64_t inst = 0; inst < 20; ++inst) {
    Instance in = make_instance(100, 2, 0.05, 700 + inst);
    const ProjectionResult exact =
        project_K(in.y, in.spec(), ProjectionMethod::exact);
    const ProjectionResult alt = alternating_projection(
        in.y, in.spec(), AlternatingMode::to_convergence, 1e-8, 100000);
    REQUIRE(alt.converged);
    const double de = testutil::norm2(exact.x, in.y);
    const double da = testutil::norm2(alt.x, in.y);
    CHECK(da >= de - 1e-9);
  }
}

TEST_CASE("dykstra_projection: hand example and fixed point") {
  WeightSet ws = testutil::weight_set({{1.0}});
  BalanceSpec spec;
  spec.weights = &ws;
  spec.epsilon = 0.5;
  const ProjectionResult r =
      dykstra_projection(std::vector<double>{2.0}, spec, 1e-10, 100000);
  REQUIRE(r.converged);
  CHECK(r.x[0] == doctest::Approx(0.5).epsilon(1e-8));

  const std::vector<double> inside{0.3};
  const ProjectionResult fix = dykstra_projection(inside, spec);
  CHECK(testutil::linf(fix.x, inside) <= 1e-12);
}

TEST_CASE("dykstra_projection: matches the exact projection") {
  for (std::uint64_t inst = 0; inst < 20; ++inst) {
    Instance in = make_instance(50, 2, eps_of(inst), 900 + inst);
    const ProjectionResult exact =
        project_K(in.y, in.spec(), ProjectionMethod::exact);
    const ProjectionResult dy =
        dykstra_projection(in.y, in.spec(), 1e-8, 400000);
    REQUIRE(dy.converged);
    CHECK(testutil::linf(dy.x, exact.x) <= 1e-4);
  }
}

TEST_CASE("project_K: interior point wins with the all-drop pattern") {
  Instance in = make_instance(6, 2, 0.3, 4242);
  // Scale y into the strict interior of K.
  for (double& v : in.y) v *= 1e-3;
  const ProjectionResult r = project_K(in.y, in.spec(), ProjectionMethod::exact);
  CHECK(testutil::linf(r.x, in.y) <= 1e-10);
  REQUIRE(r.lambda.size() == 2);
  CHECK(std::abs(r.lambda[0]) <= 1e-12);
  CHECK(std::abs(r.lambda[1]) <= 1e-12);
}

TEST_CASE("project_K: epsilon 0 collapses the slab to a plane") {
  WeightSet ws = testutil::weight_set({{1.0, 1.0}});
  BalanceSpec spec;
  spec.weights = &ws;
  spec.epsilon = 0.0;
  const std::vector<double> y{2.0, 2.0};
  const ProjectionResult r = project_K(y, spec, ProjectionMethod::exact);
  CHECK(r.x[0] == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(r.x[1] == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("project_K: exact matches the oracle on random d<=2 instances") {
  for (std::uint64_t inst = 0; inst < 60; ++inst) {
    const std::size_t n = 1 + rng::derive(71, inst) % 8;
    const std::size_t d = 1 + rng::derive(72, inst) % 2;
    Instance in = make_instance(n, d, eps_of(rng::derive(73, inst)),
                                1000 + inst);
    std::vector<std::vector<double>> rows;
    for (std::size_t j = 0; j < d; ++j) rows.push_back(in.ws.rows[j]);
    const auto ref =
        oracle::brute_force_projection(in.y, rows, in.epsilon);
    REQUIRE(ref.feasible);
    const ProjectionResult got =
        project_K(in.y, in.spec(), ProjectionMethod::exact);
    CHECK(testutil::linf(got.x, ref.x) <= 1e-6);
  }
}

TEST_CASE("project_K: empty K raises InfeasibleError") {
  // <(1,1),x> = 2 forces x = (1,1), which misses <(1,2),x> = 0.
  WeightSet ws = testutil::weight_set({{1.0, 1.0}, {1.0, 2.0}});
  BalanceSpec spec;
  spec.weights = &ws;
  spec.epsilon = 0.0;
  spec.shifts = {2.0, 0.0};
  const std::vector<double> y{0.0, 0.0};
  CHECK_THROWS_AS(project_K(y, spec, ProjectionMethod::exact),
                  InfeasibleError);
}

TEST_CASE("nested_projection: agrees with the 1d solver") {
  for (std::uint64_t inst = 0; inst < 50; ++inst) {
    const std::size_t n = 1 + rng::derive(81, inst) % 8;
    const std::vector<double> y =
        testutil::random_vector(n, -3.0, 3.0, 82, inst);
    const std::vector<double> w = testutil::random_weights(n, 83, inst);
    double sumw = 0.0, maxw = 0.0;
    for (double wi : w) {
      sumw += wi;
      maxw = std::max(maxw, wi);
    }
    const double c =
        (2.0 * rng::counter_uniform(84, inst) - 1.0) * 0.8 * sumw;
    const double delta = 1e-9;
    const ProjectionResult a = project_exact_1d(y, w, c);
    const ProjectionResult b = nested_projection(y, {w}, {c}, delta);
    double da = 0.0, db = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      da += w[i] * a.x[i];
      db += w[i] * b.x[i];
    }
    CHECK(std::abs(da - db) <= delta * maxw * static_cast<double>(n) + 1e-12);
  }
}

TEST_CASE("nested_projection: d=2 residuals and d=3 oracle distance") {
  for (std::uint64_t inst = 0; inst < 40; ++inst) {
    const std::size_t n = 2 + rng::derive(91, inst) % 7;
    const std::size_t d = 2 + rng::derive(92, inst) % 2;  // 2 or 3
    std::vector<std::vector<double>> rows;
    std::vector<double> totals;
    for (std::size_t j = 0; j < d; ++j) {
      rows.push_back(testutil::random_weights(n, 93 + j, inst));
      double t = 0.0;
      for (double wi : rows.back()) t += wi;
      totals.push_back(t);
    }
    // Feasible targets: the constraint values of a random box point.
    const std::vector<double> x0 =
        testutil::random_vector(n, -1.0, 1.0, 94, inst);
    std::vector<double> targets(d, 0.0);
    for (std::size_t j = 0; j < d; ++j) {
      for (std::size_t i = 0; i < n; ++i) targets[j] += rows[j][i] * x0[i];
    }
    const std::vector<double> y =
        testutil::random_vector(n, -3.0, 3.0, 95, inst);

    const ProjectionResult r = nested_projection(y, rows, targets, 1e-9);
    REQUIRE(r.converged);
    for (std::size_t j = 0; j < d; ++j) {
      double dot = 0.0;
      for (std::size_t i = 0; i < n; ++i) dot += rows[j][i] * r.x[i];
      CHECK(std::abs(dot - targets[j]) <= 1e-6 * totals[j]);
    }
    if (d == 3) {
      const auto ref = oracle::brute_force_projection(y, rows, 0.0, targets);
      REQUIRE(ref.feasible);
      const double got = testutil::norm2(r.x, y);
      CHECK(got <= ref.distance + 1e-5);
    }
  }
}

TEST_CASE("nested_projection: unreachable target is infeasible") {
  const std::vector<double> y{0.0, 0.0};
  CHECK_THROWS_AS(
      nested_projection(y, {{1.0, 1.0}}, {4.0}),
      InfeasibleError);
}

TEST_CASE("project_K: nested method handles d=3 slabs") {
  for (std::uint64_t inst = 0; inst < 10; ++inst) {
    const std::size_t n = 2 + rng::derive(96, inst) % 7;
    Instance in = make_instance(n, 3, 0.1, 1300 + inst);
    std::vector<std::vector<double>> rows;
    for (std::size_t j = 0; j < 3; ++j) rows.push_back(in.ws.rows[j]);
    const auto ref =
        oracle::brute_force_projection(in.y, rows, in.epsilon);
    REQUIRE(ref.feasible);
    const ProjectionResult got =
        project_K(in.y, in.spec(), ProjectionMethod::nested);
    const double dist = testutil::norm2(got.x, in.y);
    CHECK(dist <= ref.distance + 1e-5);
    for (std::size_t j = 0; j < 3; ++j) {
      double dot = 0.0;
      for (std::size_t i = 0; i < n; ++i) dot += rows[j][i] * got.x[i];
      CHECK(std::abs(dot) <=
            in.epsilon * in.ws.totals[j] + 1e-6 * in.ws.totals[j]);
    }
  }
}

TEST_CASE("projection invariants: membership, idempotence, reconstruction") {
  ProjectOptions tight;
  tight.tol = 1e-10;
  tight.max_rounds = 500000;
  for (std::uint64_t inst = 0; inst < 15; ++inst) {
    const std::size_t n = 5 + rng::derive(55, inst) % 26;
    Instance in = make_instance(n, 2, eps_of(inst), 1500 + inst);

    for (ProjectionMethod method :
         {ProjectionMethod::exact, ProjectionMethod::dykstra,
          ProjectionMethod::alternating, ProjectionMethod::nested}) {
      const ProjectionResult r = project_K(in.y, in.spec(), method, tight);
      if (!r.converged) continue;

      // Membership.
      for (double xi : r.x) CHECK(std::abs(xi) <= 1.0 + 1e-12);
      for (std::size_t j = 0; j < 2; ++j) {
        double dot = 0.0;
        for (std::size_t i = 0; i < n; ++i) dot += in.ws.rows[j][i] * r.x[i];
        CHECK(std::abs(dot) <= in.epsilon * in.ws.totals[j] +
                                   1e-8 * in.ws.totals[j]);
      }

      // Idempotence for the methods that guarantee it.
      if (method == ProjectionMethod::exact ||
          method == ProjectionMethod::dykstra) {
        const ProjectionResult r2 = project_K(r.x, in.spec(), method, tight);
        CHECK(testutil::linf(r2.x, r.x) <= 1e-9);
      }

      // Multiplier reconstruction for the exact/nested KKT solvers.
      if ((method == ProjectionMethod::exact ||
           method == ProjectionMethod::nested) &&
          !r.lambda.empty()) {
        for (std::size_t i = 0; i < n; ++i) {
          double z = in.y[i];
          for (std::size_t j = 0; j < 2; ++j) {
            z -= r.lambda[j] * in.ws.rows[j][i];
          }
          CHECK(std::abs(clamp1(z) - r.x[i]) <= 1e-9);
        }
      }
    }
  }
}

TEST_CASE("inner constraint value is monotone along lambda1") {
  // Fixing lambda1 and solving the second constraint exactly leaves the
  // first constraint's value a monotone function of lambda1 -- the property
  // the two-dimensional strip search relies on.
  const std::size_t n = 6;
  const std::vector<double> y = testutil::random_vector(n, -3.0, 3.0, 333, 0);
  const std::vector<double> w1 = testutil::random_weights(n, 334, 0);
  const std::vector<double> w2 = testutil::random_weights(n, 335, 0);
  double sum2 = 0.0;
  for (double w : w2) sum2 += w;

  std::vector<double> deltas;
  std::vector<double> shifted(n);
  for (int k = -40; k <= 40; ++k) {
    const double l1 = 0.25 * k;
    for (std::size_t i = 0; i < n; ++i) shifted[i] = y[i] - l1 * w1[i];
    const ProjectionResult inner = project_exact_1d(shifted, w2, 0.1 * sum2);
    double d1 = 0.0;
    for (std::size_t i = 0; i < n; ++i) d1 += w1[i] * inner.x[i];
    deltas.push_back(d1);
  }
  const bool non_increasing = [&] {
    for (std::size_t i = 0; i + 1 < deltas.size(); ++i) {
      if (deltas[i + 1] > deltas[i] + 1e-10) return false;
    }
    return true;
  }();
  const bool non_decreasing = [&] {
    for (std::size_t i = 0; i + 1 < deltas.size(); ++i) {
      if (deltas[i + 1] < deltas[i] - 1e-10) return false;
    }
    return true;
  }();
  CHECK((non_increasing || non_decreasing));
}

TEST_CASE("project_K is deterministic") {
  Instance in = make_instance(64, 2, 0.05, 777);
  ProjectOptions opts;
  opts.seed = 5;
  const ProjectionResult a = project_K(in.y, in.spec(), ProjectionMethod::exact, opts);
  const ProjectionResult b = project_K(in.y, in.spec(), ProjectionMethod::exact, opts);
  CHECK(a.x == b.x);
  CHECK(a.lambda == b.lambda);
}
