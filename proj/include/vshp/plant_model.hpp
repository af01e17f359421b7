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

#include <Eigen/Dense>

namespace vshp {

inline constexpr int kNumStates = 6;
inline constexpr int kNumInputs = 3;

using StateVector = Eigen::Matrix<double, kNumStates, 1>;
using InputVector = Eigen::Matrix<double, kNumInputs, 1>;

// Positions inside StateVector.
enum StateIndex : int {
  kDeltaF = 0,
  kGate = 1,
  kFlow = 2,
  kHeadraceFlow = 3,
  kSurgeHead = 4,
  kSpeed = 5,
};

// Positions inside InputVector.
enum InputIndex : int {
  kPowerRef = 0,
  kPowerBalance = 1,
  kGateRef = 2,
};

/// Continuous states of the closed-loop plant, all per unit.
///
/// `delta_f` is the grid frequency deviation f - f0 as integrated by the
/// swing equation (positive on overproduction). The converter controller
/// works on f* - f, i.e. `vsg.f_star - delta_f`.
struct PlantState {
  double delta_f = 0.0;
  double g = 0.0;
  double q = 0.0;
  double q_hr = 0.0;
  double h_st = 0.0;
  double omega = 1.0;

  StateVector vector() const;
  static PlantState from_vector(const StateVector& x);
};

struct ControlInputs {
  double p_g_star = 0.0;  ///< converter power reference
  double p_pb = 0.0;      ///< grid power balance excluding the plant
  double g_star = 0.0;    ///< guide vane opening reference

  InputVector vector() const;
  static ControlInputs from_vector(const InputVector& u);
};

struct WaterwayParams {
  double t_g = 0.2;   ///< governor servo time constant (s)
  double c_s = 50.0;  ///< surge tank storage constant (s)
  double t_w1 = 1.0;  ///< penstock water time constant (s)
  double t_w2 = 5.0;  ///< headrace water time constant (s)
  double f_0 = 0.01;  ///< surge tank orifice loss
  double f_p1 = 0.02; ///< penstock friction
  double f_p2 = 0.01; ///< headrace friction
};

struct TurbineParams {
  double h_r_over_h_rt = 1.05;
  double q_r_over_q_rt = 1.05;
  double alpha_1r = 0.8;  ///< rated guide vane inlet angle (rad)
  double xi = 0.0;        ///< filled in by calibrate_rated_point
  double psi = 0.0;       ///< filled in by calibrate_rated_point
  double sigma = 0.1;
};

struct GeneratorParams {
  double h_gen = 3.0;
  double d_gen = 0.0;
  double omega_ref = 1.0;
};

struct VsgParams {
  double k_vsg_p = 100.0;  ///< droop gain, 1/droop
  double k_vsg_d = 10.0;   ///< virtual inertia gain
  double f_star = 0.0;     ///< frequency reference, as a deviation from nominal
  double p_g_min = 0.0;
  double p_g_max = 1.0;
};

struct GridParams {
  double h_grid = 25.35;
  double s_n = 1.0;
  double d_m = 12.5;         ///< lumped damping of the rest of the grid (p.u.)
  double omega_s = 1.0;
  double omega_f = 0.625;    ///< frequency filter corner (rad/s)
  double omega_fdot = 0.25;  ///< ROCOF filter corner (rad/s)
};

struct PlantParams {
  WaterwayParams waterway;
  TurbineParams turbine;
  GeneratorParams generator;
  VsgParams vsg;
  GridParams grid;
};

struct HydraulicOutputs {
  double h = 0.0;        ///< head over the turbine
  double p_m = 0.0;      ///< mechanical power
  double alpha_1 = 0.0;  ///< guide vane flow angle (rad)
};

struct WaterwayRates {
  double h_st_dot = 0.0;
  double q_hr_dot = 0.0;
  double h = 0.0;
};

struct TurbineResult {
  HydraulicOutputs outputs;
  double q_dot = 0.0;
};

// Converter power and frequency rate solved together: P_g depends on the
// ROCOF through the virtual inertia term and the ROCOF depends on P_g.
struct ConverterCoupling {
  double p_g = 0.0;
  double delta_f_dot = 0.0;
  double p_g_unclamped = 0.0;
  bool saturated = false;
};

struct PlantEvaluation {
  StateVector deriv = StateVector::Zero();
  double p_g = 0.0;
  double p_g_unclamped = 0.0;
  bool converter_saturated = false;
  HydraulicOutputs hydraulics;
};

double governor_deriv(double g, double g_star, const WaterwayParams& params);

WaterwayRates waterway_deriv(const PlantState& state, const WaterwayParams& params);

/// Euler turbine equation. Throws DomainError when g, h or omega are not
/// positive or when the arcsine argument leaves [-1, 1].
TurbineResult turbine_outputs(const PlantState& state, const TurbineParams& params,
                              double t_w1, double h);

/// Throws DomainError at omega <= 0.
double generator_speed_deriv(double p_m, double p_g, double omega,
                             const GeneratorParams& params);

/// `delta_f` here is f* - f and `delta_f_dot` its time derivative.
double vsg_power(double delta_f, double delta_f_dot, double p_g_star,
                 const VsgParams& params);

double grid_freq_deriv(double p_g, double p_pb, double delta_f, const GridParams& params);

ConverterCoupling solve_converter_coupling(double delta_f, double p_g_star, double p_pb,
                                           const VsgParams& vsg, const GridParams& grid);

PlantEvaluation evaluate_plant(const PlantState& state, const ControlInputs& inputs,
                               const PlantParams& params);

StateVector plant_deriv(const PlantState& state, const ControlInputs& inputs,
                        const PlantParams& params);

/// The rated point: g = q = q_hr = omega = 1 with the headrace and surge tank
/// at their stationary values.
PlantState rated_state(const PlantParams& params);

/// Returns params whose turbine constants make the rated point stationary with
/// unit mechanical power. Already calibrated params come back unchanged.
/// Throws ConfigError when no positive (xi, psi) exists.
PlantParams calibrate_rated_point(const PlantParams& params);

}  // namespace vshp
