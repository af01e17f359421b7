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

#include "vshp/plant_model.hpp"

namespace vshp {

inline constexpr int kNumOutputs = 3;

// Algebraic outputs carried alongside the state model.
enum OutputIndex : int {
  kConverterPower = 0,
  kHead = 1,
  kMechanicalPower = 2,
};

using StateMatrix = Eigen::Matrix<double, kNumStates, kNumStates>;
using InputMatrix = Eigen::Matrix<double, kNumStates, kNumInputs>;
using OutputMatrix = Eigen::Matrix<double, kNumOutputs, kNumStates>;
using FeedthroughMatrix = Eigen::Matrix<double, kNumOutputs, kNumInputs>;
using OutputVector = Eigen::Matrix<double, kNumOutputs, 1>;

struct StationaryOptions {
  int max_iterations = 60;
  double tolerance = 1e-11;   ///< on the Newton residual
  double accept = 1e-8;       ///< required infinity norm of plant_deriv
  double g_min = 0.1;         ///< admissible guide vane range
  double g_max = 1.3;
};

struct StationaryPoint {
  StateVector x_s = StateVector::Zero();
  InputVector u_s = InputVector::Zero();
  int iterations = 0;
  double residual = 0.0;  ///< infinity norm of plant_deriv at (x_s, u_s)
};

/// Operating point with g* = g and every derivative zero. The turbine speed
/// is pinned to reference_speed(P_g), which closes the otherwise
/// one-parameter family of equilibria. Damped Newton with step halving down
/// to 1/64.
///
/// Throws InfeasibleError when the converter cannot balance the demand or
/// the opening leaves [g_min, g_max], and ConvergenceError (with the last
/// residual) when Newton stalls.
StationaryPoint solve_stationary(double p_pb, double p_g_star, const PlantParams& params,
                                 const StationaryOptions& options = {},
                                 const std::optional<StateVector>& initial_guess = std::nullopt);

struct Jacobians {
  StateMatrix a_c = StateMatrix::Zero();
  InputMatrix b_c = InputMatrix::Zero();
  OutputMatrix c_c = OutputMatrix::Zero();
  FeedthroughMatrix d_c = FeedthroughMatrix::Zero();
  std::vector<std::string> warnings;
};

/// Outputs [P_g, h, P_m] at (x, u).
OutputVector plant_outputs(const StateVector& x, const InputVector& u, const PlantParams& params);

/// Central differences with per-variable step max(1e-6, 1e-6 |v|). Where the
/// converter clamp switches (or a turbine domain boundary is hit) inside the
/// stencil, the side matching the base point is used and a warning recorded.
Jacobians jacobian(const StateVector& x_s, const InputVector& u_s, const PlantParams& params);

struct DiscreteModel {
  StateMatrix a_t;
  InputMatrix b_t;
};

/// Forward Euler: a_t = a_c dt + I, b_t = b_c dt.
DiscreteModel discretize(const StateMatrix& a_c, const InputMatrix& b_c, double dt);

struct LinearModel {
  StateVector x_s = StateVector::Zero();
  InputVector u_s = InputVector::Zero();
  StateMatrix a_c = StateMatrix::Zero();
  InputMatrix b_c = InputMatrix::Zero();
  OutputMatrix c_c = OutputMatrix::Zero();
  FeedthroughMatrix d_c = FeedthroughMatrix::Zero();
  StateMatrix a_t = StateMatrix::Identity();
  InputMatrix b_t = InputMatrix::Zero();
  OutputVector y_s = OutputVector::Zero();
  double dt = 0.0;
  int stationary_iterations = 0;
  double stationary_residual = 0.0;
  std::vector<std::string> warnings;
};

/// Stationary point, Jacobians and discretization in one call.
LinearModel linearize(double p_pb, double p_g_star, const PlantParams& params, double dt,
                      const StationaryOptions& options = {},
                      const std::optional<StateVector>& initial_guess = std::nullopt);

}  // namespace vshp
