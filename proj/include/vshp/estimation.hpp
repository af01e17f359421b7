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

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "vshp/config.hpp"
#include "vshp/plant_model.hpp"

namespace vshp {

inline constexpr int kKfStates = 4;   // g, q, q_hr, h_st
inline constexpr int kKfInputs = 2;   // g*, omega
inline constexpr int kKfOutputs = 4;  // g, h_st, h, P_m

using KfStateVector = Eigen::Matrix<double, kKfStates, 1>;
using KfInputVector = Eigen::Matrix<double, kKfInputs, 1>;
using KfOutputVector = Eigen::Matrix<double, kKfOutputs, 1>;
using KfMatrix = Eigen::Matrix<double, kKfStates, kKfStates>;
using KfInputMatrix = Eigen::Matrix<double, kKfStates, kKfInputs>;
using KfOutputMatrix = Eigen::Matrix<double, kKfOutputs, kKfStates>;
using KfFeedthroughMatrix = Eigen::Matrix<double, kKfOutputs, kKfInputs>;

/// Linearized hydraulics with noise model and gain. The filter runs in
/// deviation coordinates about (x_op, u_op, y_op).
struct KalmanModel {
  KfMatrix a_kf = KfMatrix::Zero();
  KfInputMatrix b_kf = KfInputMatrix::Zero();
  KfOutputMatrix c_kf = KfOutputMatrix::Zero();
  KfFeedthroughMatrix d_kf = KfFeedthroughMatrix::Zero();
  KfMatrix g_kf = KfMatrix::Identity();
  KfMatrix h_kf = KfMatrix::Zero();
  KfMatrix q_noise = KfMatrix::Identity() * 1e-4;
  KfMatrix r_noise = KfMatrix::Identity() * 1e-4;
  KfMatrix l_kf = KfMatrix::Zero();
  KfMatrix p_kf = KfMatrix::Zero();  ///< Riccati solution
  double care_residual = 0.0;

  KfStateVector x_op = KfStateVector::Zero();
  KfInputVector u_op = KfInputVector::Zero();
  KfOutputVector y_op = KfOutputVector::Zero();
  std::vector<std::string> warnings;
};

KfStateVector hydraulic_states(const PlantState& s);
KfOutputVector hydraulic_measurements(const PlantState& s, const PlantParams& params);

/// Jacobians of the governor, waterway and turbine flow equations at
/// `op_point` with g* = g and the turbine speed as an input. A
/// non-stationary op_point only adds a warning.
KalmanModel linearize_hydraulics(const PlantParams& params, const PlantState& op_point,
                                 const EstimatorConfig& noise = {});

struct CareSolution {
  Eigen::MatrixXd p;
  Eigen::MatrixXd l;
  double residual = 0.0;
  double max_closed_loop_real = 0.0;  ///< largest real part of eig(A - L C)
  int sign_iterations = 0;
  int newton_iterations = 0;
};

/// Filter Riccati equation A P + P A' - P C' R^-1 C P + G Q G' = 0 by the
/// matrix sign function of the Hamiltonian, polished with Newton-Kleinman.
/// Throws ConfigError when no stabilizing solution is found or the residual
/// stays above 1e-8.
CareSolution solve_filter_care(const Eigen::MatrixXd& a, const Eigen::MatrixXd& c, const Eigen::MatrixXd& g,
                               const Eigen::MatrixXd& q, const Eigen::MatrixXd& r);

/// Computes and stores the gain; returns it.
KfMatrix kalman_gain(KalmanModel& model);

struct EstimatorState {
  KfStateVector x_hat = KfStateVector::Zero();
  double f_filt = 0.0;
  double fdot_filt = 0.0;
  double p_pb_hat = 0.0;
};

/// x_hat' = A dx + B du + L (dy - C dx - D du), deviations about the
/// linearization point.
KfStateVector kalman_deriv(const KfStateVector& x_hat, const KfInputVector& u_kf,
                           const KfOutputVector& y_kf, const KalmanModel& model);

/// Advances both first-order filters exactly over dt with the measurements
/// held, then refreshes p_pb_hat from the swing equation.
EstimatorState estimate_power_balance(const EstimatorState& est, double delta_f, double delta_f_dot, double p_g,
                                      const GridParams& params, double dt);

}  // namespace vshp
