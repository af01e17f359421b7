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

#include "vshp/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "vshp/errors.hpp"

namespace vshp {

using Eigen::MatrixXd;

KfStateVector hydraulic_states(const PlantState& s) {
  return KfStateVector(s.g, s.q, s.q_hr, s.h_st);
}

namespace {

struct HydraulicEval {
  KfStateVector deriv;
  KfOutputVector y;
};

HydraulicEval eval_hydraulics(const KfStateVector& x, const KfInputVector& u, const PlantParams& params) {
  PlantState s;
  s.g = x[0];
  s.q = x[1];
  s.q_hr = x[2];
  s.h_st = x[3];
  s.omega = u[1];
  const WaterwayRates w = waterway_deriv(s, params.waterway);
  const TurbineResult t = turbine_outputs(s, params.turbine, params.waterway.t_w1, w.h);
  HydraulicEval e;
  e.deriv << governor_deriv(s.g, u[0], params.waterway), t.q_dot, w.q_hr_dot, w.h_st_dot;
  e.y << s.g, s.h_st, w.h, t.outputs.p_m;
  return e;
}

MatrixXd lyapunov_solve(const MatrixXd& m, const MatrixXd& w) {
  // M X + X M' + W = 0 through the Kronecker form.
  const Eigen::Index n = m.rows();
  const MatrixXd id = MatrixXd::Identity(n, n);
  MatrixXd k = MatrixXd::Zero(n * n, n * n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      // vec(M X) = (I kron M) vec X ; vec(X M') = (M kron I) vec X
      k.block(i * n, j * n, n, n) += id(i, j) * m + m(i, j) * id;
    }
  }
  const Eigen::VectorXd rhs = -Eigen::Map<const Eigen::VectorXd>(w.data(), n * n);
  const Eigen::VectorXd x = k.fullPivLu().solve(rhs);
  MatrixXd out = Eigen::Map<const MatrixXd>(x.data(), n, n);
  return 0.5 * (out + out.transpose());
}

double care_residual(const MatrixXd& a, const MatrixXd& c, const MatrixXd& gqg, const MatrixXd& r_inv,
                     const MatrixXd& p) {
  const MatrixXd res = a * p + p * a.transpose() - p * c.transpose() * r_inv * c * p + gqg;
  return res.cwiseAbs().rowwise().sum().maxCoeff();
}

double max_real_eig(const MatrixXd& m) {
  Eigen::EigenSolver<MatrixXd> es(m, false);
  return es.eigenvalues().real().maxCoeff();
}

}  // namespace

KfOutputVector hydraulic_measurements(const PlantState& s, const PlantParams& params) {
  return eval_hydraulics(hydraulic_states(s), KfInputVector(s.g, s.omega), params).y;
}

KalmanModel linearize_hydraulics(const PlantParams& params, const PlantState& op_point,
                                 const EstimatorConfig& noise) {
  KalmanModel m;
  m.x_op = hydraulic_states(op_point);
  m.u_op = KfInputVector(op_point.g, op_point.omega);
  const HydraulicEval base = eval_hydraulics(m.x_op, m.u_op, params);
  m.y_op = base.y;
  if (base.deriv.lpNorm<Eigen::Infinity>() > 1e-8) {
    std::ostringstream os;
    os << "hydraulic operating point is not stationary (|dx| = " << base.deriv.lpNorm<Eigen::Infinity>() << ")";
    m.warnings.push_back(os.str());
  }
  for (int j = 0; j < kKfStates + kKfInputs; ++j) {
    KfStateVector xp = m.x_op, xm = m.x_op;
    KfInputVector up = m.u_op, um = m.u_op;
    double& vp = j < kKfStates ? xp[j] : up[j - kKfStates];
    double& vm = j < kKfStates ? xm[j] : um[j - kKfStates];
    const double h = std::max(1e-6, 1e-6 * std::abs(vp));
    vp += h;
    vm -= h;
    const HydraulicEval ep = eval_hydraulics(xp, up, params);
    const HydraulicEval em = eval_hydraulics(xm, um, params);
    if (j < kKfStates) {
      m.a_kf.col(j) = (ep.deriv - em.deriv) / (2.0 * h);
      m.c_kf.col(j) = (ep.y - em.y) / (2.0 * h);
    } else {
      m.b_kf.col(j - kKfStates) = (ep.deriv - em.deriv) / (2.0 * h);
      m.d_kf.col(j - kKfStates) = (ep.y - em.y) / (2.0 * h);
    }
  }
  // Pure selector rows and the linear governor are known exactly.
  m.c_kf.row(0) << 1.0, 0.0, 0.0, 0.0;
  m.c_kf.row(1) << 0.0, 0.0, 0.0, 1.0;
  m.d_kf.row(0).setZero();
  m.d_kf.row(1).setZero();
  m.a_kf.row(0) << -1.0 / params.waterway.t_g, 0.0, 0.0, 0.0;
  m.b_kf.row(0) << 1.0 / params.waterway.t_g, 0.0;

  m.q_noise.setZero();
  m.r_noise.setZero();
  for (int i = 0; i < 4; ++i) {
    m.q_noise(i, i) = noise.q_noise_diag[static_cast<std::size_t>(i)];
    m.r_noise(i, i) = noise.r_noise_diag[static_cast<std::size_t>(i)];
  }
  return m;
}

CareSolution solve_filter_care(const MatrixXd& a, const MatrixXd& c, const MatrixXd& g, const MatrixXd& q,
                               const MatrixXd& r) {
  const Eigen::Index n = a.rows();
  if (a.cols() != n || c.cols() != n || g.rows() != n || q.rows() != g.cols() || r.rows() != c.rows()) {
    throw ConfigError("kalman gain: inconsistent matrix dimensions");
  }
  Eigen::LLT<MatrixXd> r_llt(r);
  if (r_llt.info() != Eigen::Success) throw ConfigError("kalman gain: measurement covariance must be positive definite");
  const MatrixXd r_inv = r_llt.solve(MatrixXd::Identity(r.rows(), r.cols()));
  const MatrixXd gqg = g * q * g.transpose();
  const MatrixXd crc = c.transpose() * r_inv * c;

  MatrixXd ham(2 * n, 2 * n);
  ham << a.transpose(), -crc, -gqg, -a;

  CareSolution sol;
  MatrixXd z = ham;
  const double nn = static_cast<double>(2 * n);
  bool converged = false;
  for (int it = 0; it < 100; ++it) {
    sol.sign_iterations = it + 1;
    Eigen::PartialPivLU<MatrixXd> lu(z);
    const double det = std::abs(lu.determinant());
    if (!(det > 0.0) || !std::isfinite(det)) break;
    const double scale = std::pow(det, -1.0 / nn);
    const MatrixXd next = 0.5 * (scale * z + lu.inverse() / scale);
    const double change = (next - z).cwiseAbs().maxCoeff();
    z = next;
    if (!z.allFinite()) break;
    if (change <= 1e-13 * std::max(1.0, z.cwiseAbs().maxCoeff())) {
      converged = true;
      break;
    }
  }
  if (!converged) {
    throw ConfigError(
        "kalman gain: sign iteration did not converge (Hamiltonian has eigenvalues near the imaginary axis; "
        "is (A, C) detectable?)");
  }
  const MatrixXd id = MatrixXd::Identity(n, n);
  MatrixXd lhs(2 * n, n);
  lhs << z.topRightCorner(n, n), z.bottomRightCorner(n, n) + id;
  MatrixXd rhs(2 * n, n);
  rhs << -(z.topLeftCorner(n, n) + id), -z.bottomLeftCorner(n, n);
  MatrixXd p = lhs.colPivHouseholderQr().solve(rhs);
  p = 0.5 * (p + p.transpose());

  // Newton-Kleinman polish from the sign-function estimate.
  double res = care_residual(a, c, gqg, r_inv, p);
  for (int it = 0; it < 8 && res > 1e-14; ++it) {
    const MatrixXd l = p * c.transpose() * r_inv;
    const MatrixXd m = a - l * c;
    if (max_real_eig(m) >= 0.0) break;
    const MatrixXd p_next = lyapunov_solve(m, gqg + l * r * l.transpose());
    const double res_next = care_residual(a, c, gqg, r_inv, p_next);
    if (!(res_next < res)) break;
    p = p_next;
    res = res_next;
    sol.newton_iterations = it + 1;
  }

  sol.p = p;
  sol.l = p * c.transpose() * r_inv;
  sol.residual = res;
  sol.max_closed_loop_real = max_real_eig(a - sol.l * c);
  if (!(sol.residual <= 1e-8)) {
    std::ostringstream os;
    os << "kalman gain: Riccati residual " << sol.residual << " above 1e-8";
    throw ConfigError(os.str());
  }
  if (!(sol.max_closed_loop_real < 0.0)) {
    std::ostringstream os;
    os << "kalman gain: A - L C not Hurwitz (max real part " << sol.max_closed_loop_real << ")";
    throw ConfigError(os.str());
  }
  return sol;
}

KfMatrix kalman_gain(KalmanModel& model) {
  const CareSolution s = solve_filter_care(model.a_kf, model.c_kf, model.g_kf, model.q_noise, model.r_noise);
  model.p_kf = s.p;
  model.l_kf = s.l;
  model.care_residual = s.residual;
  return model.l_kf;
}

KfStateVector kalman_deriv(const KfStateVector& x_hat, const KfInputVector& u_kf, const KfOutputVector& y_kf,
                           const KalmanModel& model) {
  const KfStateVector dx = x_hat - model.x_op;
  const KfInputVector du = u_kf - model.u_op;
  const KfOutputVector innovation = (y_kf - model.y_op) - model.c_kf * dx - model.d_kf * du;
  return model.a_kf * dx + model.b_kf * du + model.l_kf * innovation;
}

EstimatorState estimate_power_balance(const EstimatorState& est, double delta_f, double delta_f_dot, double p_g,
                                      const GridParams& params, double dt) {
  if (!(dt > 0.0)) throw ConfigError("power balance estimator: dt must be positive");
  EstimatorState out = est;
  out.f_filt += -std::expm1(-params.omega_f * dt) * (delta_f - est.f_filt);
  out.fdot_filt += -std::expm1(-params.omega_fdot * dt) * (delta_f_dot - est.fdot_filt);
  out.p_pb_hat = -p_g + (2.0 * params.h_grid * params.s_n / params.omega_s) * out.fdot_filt +
                 params.d_m * out.f_filt;
  return out;
}

}  // namespace vshp
