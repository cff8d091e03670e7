#include <doctest.h>

#include <random>

#include "ovtsim/bnb.hpp"

using namespace ovtsim;

namespace {

QpInstance blank(int n, int m = 0) {
  QpInstance q;
  q.Q = Eigen::MatrixXd::Zero(n, n);
  q.c = Eigen::VectorXd::Zero(n);
  q.A = Eigen::MatrixXd::Zero(m, n);
  q.b = Eigen::VectorXd::Zero(m);
  q.lb = Eigen::VectorXd::Constant(n, 0.0);
  q.ub = Eigen::VectorXd::Constant(n, 1.0);
  return q;
}

// strictly convex random MIQP with a couple of coupling rows
QpInstance random_miqp(std::mt19937_64& rng, int n_cont, int n_bin,
                       int n_rows) {
  std::normal_distribution<double> g(0, 1);
  std::uniform_real_distribution<double> u(0, 1);
  int n = n_cont + n_bin;
  QpInstance q = blank(n, n_rows);
  Eigen::MatrixXd a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = g(rng);
  q.Q = a.transpose() * a + (0.3 + u(rng)) * Eigen::MatrixXd::Identity(n, n);
  for (int i = 0; i < n; ++i) q.c[i] = 2.0 * g(rng);
  for (int i = 0; i < n_cont; ++i) {
    q.lb[i] = -2.0;
    q.ub[i] = 2.0;
  }
  for (int i = 0; i < n_bin; ++i) q.binaries.push_back(n_cont + i);
  for (int r = 0; r < n_rows; ++r) {
    for (int j = 0; j < n; ++j) q.A(r, j) = g(rng);
    q.b[r] = g(rng) - 0.5;
  }
  return q;
}

}  // namespace

TEST_CASE("all binaries fixed degenerates to a single QP") {
  QpInstance q = blank(3);
  q.Q = 2.0 * Eigen::MatrixXd::Identity(3, 3);
  q.c << -2, -2, -2;
  q.binaries = {1, 2};
  q.lb[1] = q.ub[1] = 1.0;
  q.lb[2] = q.ub[2] = 0.0;
  q.lb[0] = -5;
  q.ub[0] = 5;
  BnbConfig cfg;
  MiqpSolution sol = solve_miqp(q, cfg);
  QpResult qp = solve_qp(q);
  REQUIRE(sol.status == MiqpStatus::Optimal);
  CHECK(sol.objective == doctest::Approx(qp.objective).epsilon(1e-9));
  CHECK(sol.nodes <= 1);
}

TEST_CASE("one binary equals the min of both fixings") {
  // min (x - 0.4)^2 + 0.3*d, binary d couples through x + d >= 0.9
  QpInstance q = blank(2, 1);
  q.Q(0, 0) = 2.0;
  q.c[0] = -0.8;
  q.c0 = 0.16;
  q.c[1] = 0.3;
  q.binaries = {1};
  q.A(0, 0) = 1.0;
  q.A(0, 1) = 1.0;
  q.b[0] = 0.9;
  BnbConfig cfg;
  MiqpSolution sol = solve_miqp(q, cfg);
  REQUIRE(sol.status == MiqpStatus::Optimal);

  auto fixed_obj = [&](double d) {
    QpInstance f = q;
    f.lb[1] = f.ub[1] = d;
    QpResult r = solve_qp(f);
    REQUIRE(r.status == QpStatus::Optimal);
    return r.objective;
  };
  double want = std::min(fixed_obj(0.0), fixed_obj(1.0));
  CHECK(sol.objective == doctest::Approx(want).epsilon(1e-8));
}

TEST_CASE("four binaries equal exhaustive enumeration") {
  std::mt19937_64 rng(3);
  QpInstance q = random_miqp(rng, 2, 4, 3);
  MiqpSolution bnb = solve_miqp(q, BnbConfig{});
  MiqpSolution ref = brute_force_miqp(q);
  REQUIRE(bnb.status == ref.status);
  if (ref.status == MiqpStatus::Optimal)
    CHECK(bnb.objective ==
          doctest::Approx(ref.objective).epsilon(1e-6).scale(1.0));
}

TEST_CASE("oracle equivalence sweep, six binaries") {
  std::mt19937_64 rng(11);
  int optimal = 0, infeasible = 0;
  for (int k = 0; k < 60; ++k) {
    QpInstance q = random_miqp(rng, 3, 6, 4);
    MiqpSolution bnb = solve_miqp(q, BnbConfig{});
    MiqpSolution ref = brute_force_miqp(q);
    REQUIRE(bnb.status == ref.status);
    if (ref.status == MiqpStatus::Optimal) {
      optimal++;
      CHECK(std::abs(bnb.objective - ref.objective) <=
            1e-6 * (1.0 + std::abs(ref.objective)));
      // integer feasibility of the incumbent
      for (int j : q.binaries) {
        double v = bnb.x[j];
        CHECK(std::min(v, 1.0 - v) < 1e-9);
      }
      CHECK(q.max_violation(bnb.x) < 1e-6);
    } else {
      infeasible++;
    }
  }
  CHECK(optimal > 10);
  CHECK(infeasible > 0);
}

TEST_CASE("determinism: identical instance and config, identical output") {
  std::mt19937_64 rng(17);
  QpInstance q = random_miqp(rng, 3, 8, 5);
  MiqpSolution a = solve_miqp(q, BnbConfig{});
  MiqpSolution b = solve_miqp(q, BnbConfig{});
  REQUIRE(a.status == b.status);
  CHECK(a.nodes == b.nodes);
  if (a.has_solution()) {
    CHECK(a.objective == b.objective);
    CHECK((a.x - b.x).lpNorm<Eigen::Infinity>() == 0.0);
  }
}

TEST_CASE("warm-start hint does not change the optimum") {
  std::mt19937_64 rng(23);
  for (int k = 0; k < 20; ++k) {
    QpInstance q = random_miqp(rng, 3, 6, 3);
    MiqpSolution cold = solve_miqp(q, BnbConfig{});
    if (cold.status != MiqpStatus::Optimal) continue;
    Eigen::VectorXd hint = cold.x;
    MiqpSolution warm = solve_miqp(q, BnbConfig{}, &hint);
    REQUIRE(warm.status == MiqpStatus::Optimal);
    CHECK(warm.objective ==
          doctest::Approx(cold.objective).epsilon(1e-8).scale(1.0));
    // a correct incumbent from the start lets pruning work at least as well
    CHECK(warm.nodes <= cold.nodes + 1);
  }
}

TEST_CASE("node limit yields feasible_timeout carrying the incumbent") {
  std::mt19937_64 rng(29);
  QpInstance q = random_miqp(rng, 3, 10, 4);
  BnbConfig cfg;
  cfg.node_limit = 2;
  cfg.time_limit_ms = 0;  // disabled
  MiqpSolution sol = solve_miqp(q, cfg);
  if (sol.status == MiqpStatus::FeasibleTimeout && sol.has_solution()) {
    MiqpSolution ref = brute_force_miqp(q);
    CHECK(sol.objective >= ref.objective - 1e-9);
  }
}

TEST_CASE("infeasible instances agree everywhere") {
  QpInstance q = blank(2, 1);
  q.Q = Eigen::MatrixXd::Identity(2, 2);
  q.binaries = {0, 1};
  q.A(0, 0) = 1;
  q.A(0, 1) = 1;
  q.b[0] = 3.0;  // d0 + d1 >= 3 impossible
  CHECK(solve_miqp(q, BnbConfig{}).status == MiqpStatus::Infeasible);
  CHECK(brute_force_miqp(q).status == MiqpStatus::Infeasible);
}

TEST_CASE("brute force rejects oversized instances") {
  QpInstance q = blank(21);
  q.Q = Eigen::MatrixXd::Identity(21, 21);
  for (int i = 0; i < 21; ++i) q.binaries.push_back(i);
  CHECK_THROWS_AS(brute_force_miqp(q), std::invalid_argument);
}
