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

#include "vshp/linearization.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "vshp/errors.hpp"
#include "vshp/reference_speed.hpp"

namespace vshp {

namespace {

using ResidualVector = StateVector;

InputVector stationary_inputs(const StateVector& x, double p_pb, double p_g_star) {
  InputVector u;
  u[kPowerRef] = p_g_star;
  u[kPowerBalance] = p_pb;
  u[kGateRef] = x[kGate];
  return u;
}

// Stationarity residual with g* = g. The governor row is identically zero
// there, so its slot carries the speed closure instead.
ResidualVector stationary_residual(const StateVector& x, double p_pb, double p_g_star,
                                   const PlantParams& params) {
  const PlantEvaluation ev = evaluate_plant(PlantState::from_vector(x),
                                            ControlInputs::from_vector(stationary_inputs(x, p_pb, p_g_star)),
                                            params);
  ResidualVector r = ev.deriv;
  r[kGate] = x[kSpeed] - reference_speed(ev.p_g);
  return r;
}

bool try_residual(const StateVector& x, double p_pb, double p_g_star, const PlantParams& params,
                  ResidualVector& out) {
  try {
    out = stationary_residual(x, p_pb, p_g_star, params);
    return out.allFinite();
  } catch (const DomainError&) {
    return false;
  }
}

StateVector initial_stationary_guess(double p_pb, double p_g_star, const PlantParams& params) {
  const VsgParams& vsg = params.vsg;
  const GridParams& grid = params.grid;
  StateVector x;
  const double gain = vsg.k_vsg_p + grid.d_m;
  const double df = gain > 0.0 ? (p_g_star + vsg.k_vsg_p * vsg.f_star + p_pb) / gain : 0.0;
  const double p_g = std::clamp(-p_pb + grid.d_m * df, vsg.p_g_min, vsg.p_g_max);
  const double q = std::clamp(p_g, 0.2, 1.1);
  x[kDeltaF] = df;
  x[kGate] = q;
  x[kFlow] = q;
  x[kHeadraceFlow] = q;
  x[kSurgeHead] = 1.0 - params.waterway.f_p2 * q * q;
  x[kSpeed] = reference_speed(p_g);
  return x;
}

}  // namespace

StationaryPoint solve_stationary(double p_pb, double p_g_star, const PlantParams& params,
                                 const StationaryOptions& options,
                                 const std::optional<StateVector>& initial_guess) {
  const VsgParams& vsg = params.vsg;
  const GridParams& grid = params.grid;
  constexpr double kBalanceTol = 1e-12;
  if (grid.d_m == 0.0) {
    // Without grid damping the converter alone must cancel the imbalance.
    const double needed = -p_pb;
    if (needed < vsg.p_g_min - kBalanceTol || needed > vsg.p_g_max + kBalanceTol) {
      std::ostringstream os;
      os << "stationary point infeasible: converter would need P_g = " << needed
         << " outside [" << vsg.p_g_min << ", " << vsg.p_g_max << "]";
      throw InfeasibleError(os.str());
    }
    if (vsg.k_vsg_p == 0.0 && std::abs(std::clamp(p_g_star, vsg.p_g_min, vsg.p_g_max) - needed) > kBalanceTol) {
      throw InfeasibleError("stationary point infeasible: no droop and P_g* does not balance P_pb");
    }
  }

  StateVector x = initial_guess ? *initial_guess : initial_stationary_guess(p_pb, p_g_star, params);
  ResidualVector r;
  if (!try_residual(x, p_pb, p_g_star, params, r)) {
    x = initial_stationary_guess(p_pb, p_g_star, params);
    if (!try_residual(x, p_pb, p_g_star, params, r)) {
      throw InfeasibleError("stationary point: initial guess outside the model domain");
    }
  }

  int iter = 0;
  for (; iter < options.max_iterations && r.lpNorm<Eigen::Infinity>() > options.tolerance; ++iter) {
    StateMatrix jac;
    for (int j = 0; j < kNumStates; ++j) {
      const double h = 1e-7 * std::max(1.0, std::abs(x[j]));
      StateVector xp = x, xm = x;
      xp[j] += h;
      xm[j] -= h;
      ResidualVector rp, rm;
      const bool okp = try_residual(xp, p_pb, p_g_star, params, rp);
      const bool okm = try_residual(xm, p_pb, p_g_star, params, rm);
      if (okp && okm) {
        jac.col(j) = (rp - rm) / (2.0 * h);
      } else if (okp) {
        jac.col(j) = (rp - r) / h;
      } else if (okm) {
        jac.col(j) = (r - rm) / h;
      } else {
        throw InfeasibleError("stationary point: Newton iterate left the model domain");
      }
    }
    const StateVector step = jac.fullPivLu().solve(-r);
    if (!step.allFinite()) {
      throw ConvergenceError("stationary point: singular Newton system", r.lpNorm<Eigen::Infinity>());
    }
    const double merit = r.squaredNorm();
    double lambda = 1.0;
    StateVector x_try;
    ResidualVector r_try;
    bool accepted = false;
    while (true) {
      x_try = x + lambda * step;
      if (try_residual(x_try, p_pb, p_g_star, params, r_try) && r_try.squaredNorm() < merit) {
        accepted = true;
        break;
      }
      if (lambda <= 1.0 / 64.0) break;
      lambda *= 0.5;
    }
    if (!accepted) {
      // Floor reached: take the smallest step if it is at least evaluable.
      if (!try_residual(x_try, p_pb, p_g_star, params, r_try)) {
        throw ConvergenceError("stationary point: line search failed", r.lpNorm<Eigen::Infinity>());
      }
    }
    x = x_try;
    r = r_try;
  }
  if (r.lpNorm<Eigen::Infinity>() > options.tolerance) {
    throw ConvergenceError("stationary point: Newton did not converge in " +
                               std::to_string(options.max_iterations) + " iterations",
                           r.lpNorm<Eigen::Infinity>());
  }
  if (x[kGate] < options.g_min || x[kGate] > options.g_max || !(x[kSpeed] > 0.0)) {
    std::ostringstream os;
    os << "stationary point infeasible: g = " << x[kGate] << " outside [" << options.g_min << ", "
       << options.g_max << "] or omega = " << x[kSpeed] << " not positive";
    throw InfeasibleError(os.str());
  }

  StationaryPoint sp;
  sp.x_s = x;
  sp.u_s = stationary_inputs(x, p_pb, p_g_star);
  const PlantEvaluation ev =
      evaluate_plant(PlantState::from_vector(x), ControlInputs::from_vector(sp.u_s), params);
  if (std::abs(ev.p_g_unclamped - ev.p_g) > 1e-9) {
    std::ostringstream os;
    os << "stationary point infeasible: converter saturated at P_g = " << ev.p_g;
    throw InfeasibleError(os.str());
  }
  sp.iterations = iter;
  sp.residual = plant_deriv(PlantState::from_vector(x), ControlInputs::from_vector(sp.u_s), params)
                    .lpNorm<Eigen::Infinity>();
  if (sp.residual > options.accept) {
    throw ConvergenceError("stationary point: residual above acceptance", sp.residual);
  }
  return sp;
}

OutputVector plant_outputs(const StateVector& x, const InputVector& u, const PlantParams& params) {
  const PlantEvaluation ev =
      evaluate_plant(PlantState::from_vector(x), ControlInputs::from_vector(u), params);
  OutputVector y;
  y[kConverterPower] = ev.p_g;
  y[kHead] = ev.hydraulics.h;
  y[kMechanicalPower] = ev.hydraulics.p_m;
  return y;
}

namespace {

struct Probe {
  StateVector deriv = StateVector::Zero();
  OutputVector y = OutputVector::Zero();
  bool saturated = false;
  bool ok = false;
};

Probe probe(const StateVector& x, const InputVector& u, const PlantParams& params) {
  Probe p;
  try {
    const PlantEvaluation ev =
        evaluate_plant(PlantState::from_vector(x), ControlInputs::from_vector(u), params);
    p.deriv = ev.deriv;
    p.y << ev.p_g, ev.hydraulics.h, ev.hydraulics.p_m;
    p.saturated = ev.converter_saturated;
    p.ok = p.deriv.allFinite() && p.y.allFinite();
  } catch (const DomainError&) {
    p.ok = false;
  }
  return p;
}

const char* variable_name(int j) {
  static const char* names[] = {"delta_f", "g", "q", "q_hr", "h_st", "omega", "p_g_star", "p_pb", "g_star"};
  return names[j];
}

}  // namespace

Jacobians jacobian(const StateVector& x_s, const InputVector& u_s, const PlantParams& params) {
  const Probe base = probe(x_s, u_s, params);
  if (!base.ok) throw DomainError("jacobian: base point outside the model domain");
  Jacobians jac;
  for (int j = 0; j < kNumStates + kNumInputs; ++j) {
    const bool is_state = j < kNumStates;
    const double v = is_state ? x_s[j] : u_s[j - kNumStates];
    const double h = std::max(1e-6, 1e-6 * std::abs(v));
    StateVector xp = x_s, xm = x_s;
    InputVector up = u_s, um = u_s;
    if (is_state) {
      xp[j] += h;
      xm[j] -= h;
    } else {
      up[j - kNumStates] += h;
      um[j - kNumStates] -= h;
    }
    const Probe plus = probe(xp, up, params);
    const Probe minus = probe(xm, um, params);
    const bool plus_ok = plus.ok && plus.saturated == base.saturated;
    const bool minus_ok = minus.ok && minus.saturated == base.saturated;
    StateVector dcol;
    OutputVector ycol;
    if (plus_ok && minus_ok) {
      dcol = (plus.deriv - minus.deriv) / (2.0 * h);
      ycol = (plus.y - minus.y) / (2.0 * h);
    } else if (plus_ok) {
      dcol = (plus.deriv - base.deriv) / h;
      ycol = (plus.y - base.y) / h;
      jac.warnings.push_back(std::string("non-differentiable point in ") + variable_name(j) +
                             ": forward difference used");
    } else if (minus_ok) {
      dcol = (base.deriv - minus.deriv) / h;
      ycol = (base.y - minus.y) / h;
      jac.warnings.push_back(std::string("non-differentiable point in ") + variable_name(j) +
                             ": backward difference used");
    } else {
      throw DomainError(std::string("jacobian: no admissible stencil for ") + variable_name(j));
    }
    if (is_state) {
      jac.a_c.col(j) = dcol;
      jac.c_c.col(j) = ycol;
    } else {
      jac.b_c.col(j - kNumStates) = dcol;
      jac.d_c.col(j - kNumStates) = ycol;
    }
  }
  return jac;
}

DiscreteModel discretize(const StateMatrix& a_c, const InputMatrix& b_c, double dt) {
  if (!(dt > 0.0)) throw ConfigError("discretize: dt must be positive");
  DiscreteModel d;
  d.a_t = a_c * dt + StateMatrix::Identity();
  d.b_t = b_c * dt;
  return d;
}

LinearModel linearize(double p_pb, double p_g_star, const PlantParams& params, double dt,
                      const StationaryOptions& options,
                      const std::optional<StateVector>& initial_guess) {
  const StationaryPoint sp = solve_stationary(p_pb, p_g_star, params, options, initial_guess);
  Jacobians jac = jacobian(sp.x_s, sp.u_s, params);
  const DiscreteModel d = discretize(jac.a_c, jac.b_c, dt);
  LinearModel m;
  m.x_s = sp.x_s;
  m.u_s = sp.u_s;
  m.a_c = jac.a_c;
  m.b_c = jac.b_c;
  m.c_c = jac.c_c;
  m.d_c = jac.d_c;
  m.a_t = d.a_t;
  m.b_t = d.b_t;
  m.y_s = plant_outputs(sp.x_s, sp.u_s, params);
  m.dt = dt;
  m.stationary_iterations = sp.iterations;
  m.stationary_residual = sp.residual;
  m.warnings = std::move(jac.warnings);
  return m;
}

}  // namespace vshp
