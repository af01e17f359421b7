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

#pragma once

#include <optional>
#include <string>

#include <Eigen/Dense>

namespace vshp {

/// Dense convex QP
///
///   minimize    1/2 z' H z + g' z
///   subject to  eq_a z = eq_b,  ineq_a z <= ineq_b
///
/// with H symmetric positive semidefinite.
struct QpProblem {
  Eigen::MatrixXd hessian;
  Eigen::VectorXd gradient;
  Eigen::MatrixXd eq_a;
  Eigen::VectorXd eq_b;
  Eigen::MatrixXd ineq_a;
  Eigen::VectorXd ineq_b;

  Eigen::Index num_variables() const { return gradient.size(); }
  Eigen::Index num_equalities() const { return eq_b.size(); }
  Eigen::Index num_inequalities() const { return ineq_b.size(); }

  /// Empty constraint blocks with consistent column counts.
  static QpProblem unconstrained(Eigen::MatrixXd hessian, Eigen::VectorXd gradient);
};

enum class QpStatus { kSolved, kMaxIterations, kInfeasible };

const char* to_string(QpStatus status);

/// Multipliers follow  H z + g + eq_a' lambda_eq + ineq_a' lambda_ineq = 0
/// with lambda_ineq >= 0.
struct QpSolution {
  Eigen::VectorXd z;
  Eigen::VectorXd lambda_eq;
  Eigen::VectorXd lambda_ineq;
  QpStatus status = QpStatus::kMaxIterations;
  int iterations = 0;
  double kkt_residual = 0.0;
  double objective = 0.0;
  std::string message;
};

struct QpOptions {
  int max_iterations = 500;
  double tolerance = 1e-8;  ///< KKT residual required for kSolved
  double jitter = 1e-10;    ///< added to the reduced Hessian diagonal
};

/// Nullspace elimination of the equalities (column-pivoted QR, rank
/// deficiency tolerated), a primal-dual interior point on the reduced
/// problem, then a primal active-set phase that finishes on the identified
/// working set. The warm start only seeds the interior point.
QpSolution solve_qp(const QpProblem& problem,
                    const std::optional<Eigen::VectorXd>& warm_start = std::nullopt,
                    const QpOptions& options = {});

/// Maximum of the stationarity, primal feasibility, dual feasibility and
/// complementarity infinity norms.
double kkt_residuals(const QpProblem& problem, const QpSolution& solution);

double objective_value(const QpProblem& problem, const Eigen::VectorXd& z);

}  // namespace vshp
