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
#include <vector>

#include "vshp/config.hpp"
#include "vshp/linearization.hpp"
#include "vshp/qp_solver.hpp"

namespace vshp {

/// Per-step block index: map[t] is the block holding the input applied at
/// step t. Throws ConfigError when the sizes do not cover the horizon.
std::vector<int> move_blocking_map(int n_steps, const std::vector<int>& block_sizes);

/// Absolute targets and limits that are not part of MpcConfig.
struct MpcTargets {
  double omega_ref = 1.0;    ///< frozen over the horizon
  double delta_f_ref = 0.0;  ///< frequency target, as a deviation
  double p_pb = 0.0;         ///< power balance pinned over the horizon
  double p_g_min = 0.0;      ///< converter limits (linearized rows)
  double p_g_max = 1.0;
};

/// Position of every block of the decision vector
///   z = [x_1 .. x_N, v_0 .. v_{m-1}, eps]
/// in deviation coordinates.
struct MpcLayout {
  int n_steps = 0;
  int n_blocks = 0;
  std::vector<int> block_of_step;

  Eigen::Index state(int t) const { return static_cast<Eigen::Index>(kNumStates) * (t - 1); }
  Eigen::Index input(int b) const {
    return static_cast<Eigen::Index>(kNumStates) * n_steps + static_cast<Eigen::Index>(kNumInputs) * b;
  }
  Eigen::Index slack() const { return input(n_blocks); }
  Eigen::Index size() const { return slack() + kNumStates; }
};

struct MpcProblem {
  QpProblem qp;
  MpcLayout layout;
  double constant = 0.0;  ///< objective offset so that cost = qp objective + constant
};

/// Assembles the horizon QP around the model's stationary point. `x0` is
/// the current state and `prev_input` the input applied last, both absolute.
/// Throws ConfigError on inconsistent dimensions or input bounds.
MpcProblem build_qp(const LinearModel& model, const StateVector& x0, const InputVector& prev_input,
                    const MpcConfig& config, const MpcTargets& targets);

struct ControlDecision {
  double g_star = 0.0;
  double p_g_star = 0.0;
  std::vector<StateVector> predicted_trajectory;  ///< x_1 .. x_N, absolute
  StateVector slack_values = StateVector::Zero();

  // Diagnostics of the step that produced this decision.
  bool solved = false;
  bool qp_attempted = false;
  QpStatus qp_status = QpStatus::kMaxIterations;
  int qp_iterations = 0;
  double kkt_residual = 0.0;
  double objective = 0.0;
  double omega_ref = 1.0;
  std::string diagnostic;
  std::optional<Eigen::VectorXd> z;  ///< last optimum, used as a warm start
};

/// One controller period: stationary point at the current demand, Jacobians,
/// discretization, QP, first move. The guide vane move is projected onto
/// its range and rate limit. Any failure returns `prev` with solved = false
/// and the reason in `diagnostic`.
ControlDecision mpc_step(const PlantState& estimates, double p_pb_hat, const ControlDecision& prev,
                         const PlantParams& params, const MpcConfig& config);

}  // namespace vshp
