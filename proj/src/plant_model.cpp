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

#include "vshp/plant_model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "vshp/errors.hpp"

namespace vshp {

StateVector PlantState::vector() const {
  StateVector x;
  x << delta_f, g, q, q_hr, h_st, omega;
  return x;
}

PlantState PlantState::from_vector(const StateVector& x) {
  return PlantState{x[kDeltaF], x[kGate], x[kFlow], x[kHeadraceFlow], x[kSurgeHead], x[kSpeed]};
}

InputVector ControlInputs::vector() const {
  InputVector u;
  u << p_g_star, p_pb, g_star;
  return u;
}

ControlInputs ControlInputs::from_vector(const InputVector& u) {
  return ControlInputs{u[kPowerRef], u[kPowerBalance], u[kGateRef]};
}

double governor_deriv(double g, double g_star, const WaterwayParams& params) {
  return (g_star - g) / params.t_g;
}

WaterwayRates waterway_deriv(const PlantState& s, const WaterwayParams& p) {
  const double dq = s.q_hr - s.q;
  WaterwayRates r;
  r.h_st_dot = dq / p.c_s;
  r.q_hr_dot = (1.0 - s.h_st + p.f_0 * dq * dq - p.f_p2 * s.q_hr * s.q_hr) / p.t_w2;
  r.h = s.h_st - p.f_0 * dq * dq - p.f_p1 * s.q * s.q;
  return r;
}

TurbineResult turbine_outputs(const PlantState& s, const TurbineParams& p, double t_w1,
                              double h) {
  if (!(s.g > 0.0)) {
    throw DomainError("turbine: guide vane opening must be positive, got " + std::to_string(s.g));
  }
  if (!(h > 0.0)) {
    throw DomainError("turbine: head must be positive, got " + std::to_string(h));
  }
  if (!(s.omega > 0.0)) {
    throw DomainError("turbine: speed must be positive, got " + std::to_string(s.omega));
  }
  const double arg = p.q_r_over_q_rt * s.g * std::sin(p.alpha_1r);
  if (!(std::abs(arg) <= 1.0)) {
    throw DomainError("turbine: arcsine argument " + std::to_string(arg) + " outside [-1, 1]");
  }
  TurbineResult r;
  const double alpha_1 = std::asin(arg);
  const double flow_ratio = s.q / s.g;
  const double swirl = std::tan(p.alpha_1r) * std::sin(alpha_1) + std::cos(alpha_1);
  r.outputs.alpha_1 = alpha_1;
  r.outputs.h = h;
  r.outputs.p_m = p.q_r_over_q_rt / p.h_r_over_h_rt *
                  (p.xi * flow_ratio * swirl - p.psi * s.omega) * s.q * s.omega / h;
  r.q_dot = (h * p.h_r_over_h_rt - p.sigma * (s.omega * s.omega - 1.0) - flow_ratio * flow_ratio) /
            (t_w1 * p.q_r_over_q_rt);
  return r;
}

double generator_speed_deriv(double p_m, double p_g, double omega, const GeneratorParams& p) {
  if (!(omega > 0.0)) {
    throw DomainError("generator: speed must be positive, got " + std::to_string(omega));
  }
  return (p_m - p_g - p.d_gen * (p.omega_ref - omega) * omega) / (2.0 * p.h_gen * omega);
}

double vsg_power(double delta_f, double delta_f_dot, double p_g_star, const VsgParams& p) {
  return std::clamp(p.k_vsg_p * delta_f + p.k_vsg_d * delta_f_dot + p_g_star, p.p_g_min,
                    p.p_g_max);
}

double grid_freq_deriv(double p_g, double p_pb, double delta_f, const GridParams& p) {
  return p.omega_s * (p_g + p_pb - p.d_m * delta_f) / (2.0 * p.h_grid * p.s_n);
}

ConverterCoupling solve_converter_coupling(double delta_f, double p_g_star, double p_pb,
                                           const VsgParams& vsg, const GridParams& grid) {
  // Swing equation: M * dx/dt = P_g + P_pb - D_m x, with M = 2 H_g S_n / omega_s.
  // Converter: P_g = clamp(P* + k_p (f* - x) - k_d dx/dt).
  // The clamped fixed point is unique because the right-hand side is
  // non-increasing in P_g.
  const double m = 2.0 * grid.h_grid * grid.s_n / grid.omega_s;
  const double base = p_g_star + vsg.k_vsg_p * (vsg.f_star - delta_f);
  const double net = p_pb - grid.d_m * delta_f;
  ConverterCoupling c;
  c.p_g_unclamped = (m * base - vsg.k_vsg_d * net) / (m + vsg.k_vsg_d);
  c.p_g = std::clamp(c.p_g_unclamped, vsg.p_g_min, vsg.p_g_max);
  c.saturated = c.p_g != c.p_g_unclamped;
  c.delta_f_dot = grid_freq_deriv(c.p_g, p_pb, delta_f, grid);
  return c;
}

PlantEvaluation evaluate_plant(const PlantState& s, const ControlInputs& u,
                               const PlantParams& p) {
  PlantEvaluation e;
  const ConverterCoupling conv =
      solve_converter_coupling(s.delta_f, u.p_g_star, u.p_pb, p.vsg, p.grid);
  const WaterwayRates ww = waterway_deriv(s, p.waterway);
  const TurbineResult tb = turbine_outputs(s, p.turbine, p.waterway.t_w1, ww.h);

  e.deriv[kDeltaF] = conv.delta_f_dot;
  e.deriv[kGate] = governor_deriv(s.g, u.g_star, p.waterway);
  e.deriv[kFlow] = tb.q_dot;
  e.deriv[kHeadraceFlow] = ww.q_hr_dot;
  e.deriv[kSurgeHead] = ww.h_st_dot;
  e.deriv[kSpeed] = generator_speed_deriv(tb.outputs.p_m, conv.p_g, s.omega, p.generator);
  e.p_g = conv.p_g;
  e.p_g_unclamped = conv.p_g_unclamped;
  e.converter_saturated = conv.saturated;
  e.hydraulics = tb.outputs;
  return e;
}

StateVector plant_deriv(const PlantState& state, const ControlInputs& inputs,
                        const PlantParams& params) {
  return evaluate_plant(state, inputs, params).deriv;
}

PlantState rated_state(const PlantParams& params) {
  PlantState s;
  s.delta_f = 0.0;
  s.g = 1.0;
  s.q = 1.0;
  s.q_hr = 1.0;
  s.h_st = 1.0 - params.waterway.f_p2;
  s.omega = 1.0;
  return s;
}

namespace {

constexpr double kCalibrationTol = 1e-9;

TurbineResult rated_turbine(const PlantParams& params) {
  const PlantState s = rated_state(params);
  const double h = waterway_deriv(s, params.waterway).h;
  return turbine_outputs(s, params.turbine, params.waterway.t_w1, h);
}

}  // namespace

PlantParams calibrate_rated_point(const PlantParams& params) {
  const PlantState s = rated_state(params);
  const double h = waterway_deriv(s, params.waterway).h;
  if (!(h > 0.0)) {
    throw ConfigError("calibration infeasible: rated head " + std::to_string(h) +
                      " is not positive (friction too large)");
  }
  try {
    const TurbineResult r = rated_turbine(params);
    if (std::abs(r.q_dot) <= kCalibrationTol && std::abs(r.outputs.p_m - 1.0) <= kCalibrationTol) {
      return params;
    }
  } catch (const DomainError& e) {
    throw ConfigError(std::string("calibration infeasible: ") + e.what());
  }

  PlantParams out = params;
  TurbineParams& t = out.turbine;
  // Stationary flow at g = q = omega = 1 needs h * H_R/H_Rt = 1.
  {
    const double q_dot_num = h * t.h_r_over_h_rt - 1.0;
    if (std::abs(q_dot_num / (params.waterway.t_w1 * t.q_r_over_q_rt)) > kCalibrationTol) {
      t.h_r_over_h_rt = 1.0 / h;
    }
  }
  const double alpha_1 = std::asin(t.q_r_over_q_rt * std::sin(t.alpha_1r));
  const double swirl = std::tan(t.alpha_1r) * std::sin(alpha_1) + std::cos(alpha_1);
  // Best-efficiency speed at omega = 1 (dP_m/domega = 0) gives xi * swirl = 2 psi;
  // unit power then fixes psi.
  t.psi = h * t.h_r_over_h_rt / t.q_r_over_q_rt;
  t.xi = 2.0 * t.psi / swirl;
  if (!(t.xi > 0.0) || !(t.psi > 0.0) || !std::isfinite(t.xi)) {
    throw ConfigError("calibration infeasible: rated point requires xi = " + std::to_string(t.xi) +
                      ", psi = " + std::to_string(t.psi) + " (both must be positive)");
  }
  return out;
}

}  // namespace vshp
