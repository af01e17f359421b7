/*
 * Copyright 2026 The vshp-mpc Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "test_support.hpp"
#include "vshp/qp_solver.hpp"

using namespace vshp;
using Eigen::MatrixXd;
using Eigen::VectorXd;

using namespace vshp::test;

TEST_CASE("textbook instances") {
  SUBCASE("lower bound active") {
    const QpProblem p = make(MatrixXd::Ones(1, 1), VectorXd::Zero(1), MatrixXd(0, 1), VectorXd(0),
                             -MatrixXd::Ones(1, 1), -VectorXd::Ones(1));
    const QpSolution s = solve_qp(p);
    REQUIRE(s.status == QpStatus::kSolved);
    CHECK(s.z[0] == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(s.lambda_ineq[0] == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(kkt_residuals(p, s) <= 1e-9);
  }
  SUBCASE("unconstrained") {
    const QpProblem p = QpProblem::unconstrained(MatrixXd::Ones(1, 1), VectorXd::Constant(1, -2.0));
    const QpSolution s = solve_qp(p);
    REQUIRE(s.status == QpStatus::kSolved);
    CHECK(s.z[0] == doctest::Approx(2.0).epsilon(1e-9));
  }
  SUBCASE("equality and bound together") {
    // min 1/2 (x^2 + y^2)  s.t. x + y = 2, x <= 0.5
    MatrixXd ea(1, 2);
    ea << 1, 1;
    MatrixXd ia(1, 2);
    ia << 1, 0;
    const QpProblem p = make(MatrixXd::Identity(2, 2), VectorXd::Zero(2), ea, VectorXd::Constant(1, 2.0), ia,
                             VectorXd::Constant(1, 0.5));
    const QpSolution s = solve_qp(p);
    REQUIRE(s.status == QpStatus::kSolved);
    CHECK(s.z[0] == doctest::Approx(0.5));
    CHECK(s.z[1] == doctest::Approx(1.5));
    CHECK(s.lambda_eq[0] == doctest::Approx(-1.5));
    CHECK(s.lambda_ineq[0] == doctest::Approx(1.0));
  }
}

TEST_CASE("kkt residual") {
  const QpProblem p = make(MatrixXd::Ones(1, 1), VectorXd::Zero(1), MatrixXd(0, 1), VectorXd(0),
                           -MatrixXd::Ones(1, 1), -VectorXd::Ones(1));
  QpSolution s = solve_qp(p);
  s.z[0] += 1e-3;
  CHECK(kkt_residuals(p, s) >= 1e-4);

  const QpProblem zero = QpProblem::unconstrained(MatrixXd::Zero(3, 3), VectorXd::Zero(3));
  QpSolution any;
  any.z = VectorXd::LinSpaced(3, -5.0, 7.0);
  CHECK(kkt_residuals(zero, any) == 0.0);
}

TEST_CASE("inconsistent equalities are infeasible") {
  MatrixXd ea(2, 2);
  ea << 1, 1, 2, 2;
  VectorXd eb(2);
  eb << 1, 3;
  const QpProblem p = make(MatrixXd::Identity(2, 2), VectorXd::Zero(2), ea, eb, MatrixXd(0, 2), VectorXd(0));
  CHECK(solve_qp(p).status == QpStatus::kInfeasible);

  // Redundant but consistent rows are tolerated.
  eb << 1, 2;
  const QpSolution s = solve_qp(make(MatrixXd::Identity(2, 2), VectorXd::Zero(2), ea, eb, MatrixXd(0, 2), VectorXd(0)));
  REQUIRE(s.status == QpStatus::kSolved);
  CHECK(s.z[0] == doctest::Approx(0.5));
}

TEST_CASE("semidefinite Hessian") {
  // Linear objective in y, bounded by a box.
  MatrixXd h = MatrixXd::Zero(2, 2);
  h(0, 0) = 1.0;
  VectorXd g(2);
  g << -1.0, 1.0;
  MatrixXd ia(2, 2);
  ia << 0, 1, 0, -1;
  const QpProblem p = make(h, g, MatrixXd(0, 2), VectorXd(0), ia, VectorXd::Constant(2, 3.0));
  const QpSolution s = solve_qp(p);
  REQUIRE(s.status == QpStatus::kSolved);
  CHECK(s.z[0] == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(s.z[1] == doctest::Approx(-3.0).epsilon(1e-8));
}

TEST_CASE("property: random instances against the dual projected-gradient oracle") {
  auto rng = test::rng(4);
  int solved = 0;
  for (int i = 0; i < 100; ++i) {
    const QpProblem p = random_qp(rng);
    const QpSolution s = solve_qp(p);
    REQUIRE(s.status == QpStatus::kSolved);
    CHECK(s.kkt_residual <= 1e-8);
    CHECK((s.lambda_ineq.array() >= -1e-10).all());
    const double oracle = dual_projected_gradient(p);
    CHECK(std::abs(s.objective - oracle) <= 1e-6 * std::max(1.0, std::abs(oracle)));
    ++solved;
  }
  CHECK(solved == 100);
}

TEST_CASE("property: warm start, scaling and redundant rows") {
  auto rng = test::rng(5);
  for (int i = 0; i < 30; ++i) {
    const QpProblem p = random_qp(rng);
    const QpSolution cold = solve_qp(p);
    REQUIRE(cold.status == QpStatus::kSolved);

    const QpSolution warm = solve_qp(p, cold.z);
    REQUIRE(warm.status == QpStatus::kSolved);
    CHECK(std::abs(warm.objective - cold.objective) <= 1e-10 * std::max(1.0, std::abs(cold.objective)));

    QpProblem scaled = p;
    scaled.hessian *= 7.5;
    scaled.gradient *= 7.5;
    const QpSolution sc = solve_qp(scaled);
    REQUIRE(sc.status == QpStatus::kSolved);
    CHECK((sc.z - cold.z).lpNorm<Eigen::Infinity>() <= 1e-6);
    CHECK(sc.objective == doctest::Approx(7.5 * cold.objective).epsilon(1e-8).scale(1.0));

    if (p.num_inequalities() > 0) {
      // The first row, loosened, is implied by itself.
      QpProblem red = p;
      const Eigen::Index m = p.num_inequalities();
      red.ineq_a.conservativeResize(m + 1, Eigen::NoChange);
      red.ineq_b.conservativeResize(m + 1);
      red.ineq_a.row(m) = p.ineq_a.row(0);
      red.ineq_b[m] = p.ineq_b[0] + 0.5;
      const QpSolution r = solve_qp(red);
      REQUIRE(r.status == QpStatus::kSolved);
      CHECK(std::abs(r.objective - cold.objective) <= 1e-9 * std::max(1.0, std::abs(cold.objective)));
    }
  }
}
