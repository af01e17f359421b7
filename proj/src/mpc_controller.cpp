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

#include "vshp/mpc_controller.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "vshp/errors.hpp"
#include "vshp/reference_speed.hpp"

namespace vshp {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

std::vector<int> move_blocking_map(int n_steps, const std::vector<int>& block_sizes) {
  if (n_steps <= 0) throw ConfigError("move blocking: n_steps must be positive");
  check_block_sizes(n_steps, block_sizes);
  std::vector<int> map;
  map.reserve(static_cast<std::size_t>(n_steps));
  for (std::size_t b = 0; b < block_sizes.size(); ++b) {
    for (int k = 0; k < block_sizes[b]; ++k) map.push_back(static_cast<int>(b));
  }
  return map;
}

namespace {

bool active(double bound) { return std::abs(bound) < kInactiveBound; }

// Inequality rows collected sparsely, densified once.
struct RowBuilder {
  struct Row {
    std::vector<std::pair<Index, double>> coefs;
    double rhs;
  };
  std::vector<Row> rows;

  void add(std::vector<std::pair<Index, double>> coefs, double rhs) {
    rows.push_back({std::move(coefs), rhs});
  }

  void to_dense(Index n, MatrixXd& a, VectorXd& b) const {
    a = MatrixXd::Zero(static_cast<Index>(rows.size()), n);
    b.resize(static_cast<Index>(rows.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
      for (const auto& [col, v] : rows[r].coefs) a(static_cast<Index>(r), col) += v;
      b[static_cast<Index>(r)] = rows[r].rhs;
    }
  }
};

template <int Size>
Eigen::Matrix<double, Size, 1> to_vector(const std::array<double, Size>& a) {
  Eigen::Matrix<double, Size, 1> v;
  for (int i = 0; i < Size; ++i) v[i] = a[static_cast<std::size_t>(i)];
  return v;
}

}  // namespace

MpcProblem build_qp(const LinearModel& model, const StateVector& x0, const InputVector& prev_input,
                    const MpcConfig& config, const MpcTargets& targets) {
  if (!(config.dt > 0.0)) throw ConfigError("mpc: dt must be positive");
  if (std::abs(model.dt - config.dt) > 1e-12 * config.dt) {
    throw ConfigError("mpc: model discretized with a different dt than the controller");
  }
  if (!x0.allFinite() || !prev_input.allFinite()) throw ConfigError("mpc: non-finite initial state or input");
  for (int j = 0; j < kNumInputs; ++j) {
    const auto js = static_cast<std::size_t>(j);
    if (config.u_low[js] > config.u_high[js]) {
      throw ConfigError("mpc: input bounds inconsistent for input " + std::to_string(j));
    }
  }

  MpcProblem out;
  MpcLayout& L = out.layout;
  L.n_steps = config.n_steps;
  L.block_of_step = move_blocking_map(config.n_steps, config.block_sizes);
  L.n_blocks = static_cast<int>(config.block_sizes.size());
  const Index n = L.size();
  const int N = L.n_steps;

  const StateVector x_s = model.x_s;
  const InputVector u_s = model.u_s;
  const StateVector xi0 = x0 - x_s;
  const InputVector v_prev = prev_input - u_s;

  const StateVector q = to_vector<kNumStates>(config.q_diag);
  const StateVector q_delta = to_vector<kNumStates>(config.q_delta_diag);
  const InputVector r = to_vector<kNumInputs>(config.r_diag);
  const InputVector r_delta = to_vector<kNumInputs>(config.r_delta_diag);
  const StateVector d_x = to_vector<kNumStates>(config.d_x);
  const InputVector d_u = to_vector<kNumInputs>(config.d_u);
  const StateVector rho = to_vector<kNumStates>(config.rho);
  const StateVector s = to_vector<kNumStates>(config.s_diag);

  StateVector x_ref = x_s;
  x_ref[kDeltaF] = targets.delta_f_ref;
  x_ref[kSpeed] = targets.omega_ref;
  const StateVector state_target = x_ref - x_s;
  InputVector u_ref = u_s;
  u_ref[kPowerRef] = config.p_g_ref;
  const InputVector input_target = u_ref - u_s;

  MatrixXd h = MatrixXd::Zero(n, n);
  VectorXd g = VectorXd::Zero(n);
  double c = 0.0;

  // State tracking, state rate and linear state terms.
  for (int t = 1; t <= N; ++t) {
    const Index i = L.state(t);
    h.block(i, i, kNumStates, kNumStates).diagonal() += q + q_delta;
    g.segment(i, kNumStates) += -q.cwiseProduct(state_target) + d_x;
    c += 0.5 * state_target.dot(q.cwiseProduct(state_target)) + d_x.dot(x_s);
    if (t == 1) {
      g.segment(i, kNumStates) -= q_delta.cwiseProduct(xi0);
      c += 0.5 * xi0.dot(q_delta.cwiseProduct(xi0));
    } else {
      const Index p = L.state(t - 1);
      h.block(p, p, kNumStates, kNumStates).diagonal() += q_delta;
      h.block(i, p, kNumStates, kNumStates).diagonal() -= q_delta;
      h.block(p, i, kNumStates, kNumStates).diagonal() -= q_delta;
    }
  }

  // Input tracking (weighted by block length) and rate at block boundaries.
  for (int b = 0; b < L.n_blocks; ++b) {
    const Index i = L.input(b);
    const double len = config.block_sizes[static_cast<std::size_t>(b)];
    h.block(i, i, kNumInputs, kNumInputs).diagonal() += len * r + r_delta;
    g.segment(i, kNumInputs) += len * (-r.cwiseProduct(input_target) + d_u);
    c += len * (0.5 * input_target.dot(r.cwiseProduct(input_target)) + d_u.dot(u_s));
    if (b == 0) {
      g.segment(i, kNumInputs) -= r_delta.cwiseProduct(v_prev);
      c += 0.5 * v_prev.dot(r_delta.cwiseProduct(v_prev));
    } else {
      const Index p = L.input(b - 1);
      h.block(p, p, kNumInputs, kNumInputs).diagonal() += r_delta;
      h.block(i, p, kNumInputs, kNumInputs).diagonal() -= r_delta;
      h.block(p, i, kNumInputs, kNumInputs).diagonal() -= r_delta;
    }
  }

  const Index e = L.slack();
  h.block(e, e, kNumStates, kNumStates).diagonal() += s;
  g.segment(e, kNumStates) += rho;

  // Dynamics and the pinned power balance.
  const Index n_eq = static_cast<Index>(kNumStates) * N + L.n_blocks;
  MatrixXd a_eq = MatrixXd::Zero(n_eq, n);
  VectorXd b_eq = VectorXd::Zero(n_eq);
  for (int t = 0; t < N; ++t) {
    const Index row = static_cast<Index>(kNumStates) * t;
    a_eq.block(row, L.state(t + 1), kNumStates, kNumStates).setIdentity();
    if (t == 0) {
      b_eq.segment(row, kNumStates) = model.a_t * xi0;
    } else {
      a_eq.block(row, L.state(t), kNumStates, kNumStates) = -model.a_t;
    }
    a_eq.block(row, L.input(L.block_of_step[static_cast<std::size_t>(t)]), kNumStates, kNumInputs) -=
        model.b_t;
  }
  for (int b = 0; b < L.n_blocks; ++b) {
    const Index row = static_cast<Index>(kNumStates) * N + b;
    a_eq(row, L.input(b) + kPowerBalance) = 1.0;
    b_eq[row] = targets.p_pb - u_s[kPowerBalance];
  }

  RowBuilder rows;
  for (int i = 0; i < kNumStates; ++i) {
    const auto is = static_cast<std::size_t>(i);
    const double lo = config.x_low[is];
    const double hi = config.x_high[is];
    const double dx = config.dx_high[is];
    for (int t = 1; t <= N; ++t) {
      const Index col = L.state(t) + i;
      if (active(hi)) rows.add({{col, 1.0}, {e + i, -1.0}}, hi - x_s[i]);
      if (active(lo)) rows.add({{col, -1.0}, {e + i, -1.0}}, x_s[i] - lo);
      if (active(dx)) {
        if (t == 1) {
          rows.add({{col, 1.0}}, dx + xi0[i]);
          rows.add({{col, -1.0}}, dx - xi0[i]);
        } else {
          const Index prev = L.state(t - 1) + i;
          rows.add({{col, 1.0}, {prev, -1.0}}, dx);
          rows.add({{col, -1.0}, {prev, 1.0}}, dx);
        }
      }
    }
    rows.add({{e + i, -1.0}}, 0.0);
  }

  for (int j = 0; j < kNumInputs; ++j) {
    if (j == kPowerBalance) continue;  // a disturbance, pinned above
    const auto js = static_cast<std::size_t>(j);
    for (int b = 0; b < L.n_blocks; ++b) {
      const Index col = L.input(b) + j;
      if (active(config.u_high[js])) rows.add({{col, 1.0}}, config.u_high[js] - u_s[j]);
      if (active(config.u_low[js])) rows.add({{col, -1.0}}, u_s[j] - config.u_low[js]);
      if (active(config.du_high[js])) {
        if (b == 0) {
          rows.add({{col, 1.0}}, config.du_high[js] + v_prev[j]);
          rows.add({{col, -1.0}}, config.du_high[js] - v_prev[j]);
        } else {
          const Index prev = L.input(b - 1) + j;
          rows.add({{col, 1.0}, {prev, -1.0}}, config.du_high[js]);
          rows.add({{col, -1.0}, {prev, 1.0}}, config.du_high[js]);
        }
      }
    }
  }

  // Converter limits through the linearized output map, at t = 0 .. N-1.
  const auto c_pg = model.c_c.row(kConverterPower);
  const auto d_pg = model.d_c.row(kConverterPower);
  const double y_pg = model.y_s[kConverterPower];
  for (int t = 0; t < N; ++t) {
    std::vector<std::pair<Index, double>> coefs;
    double offset = y_pg;
    if (t == 0) {
      offset += c_pg.dot(xi0);
    } else {
      for (int i = 0; i < kNumStates; ++i) {
        if (c_pg[i] != 0.0) coefs.push_back({L.state(t) + i, c_pg[i]});
      }
    }
    const Index ui = L.input(L.block_of_step[static_cast<std::size_t>(t)]);
    for (int j = 0; j < kNumInputs; ++j) {
      if (d_pg[j] != 0.0) coefs.push_back({ui + j, d_pg[j]});
    }
    double scale = 0.0;
    for (const auto& [col, v] : coefs) scale = std::max(scale, std::abs(v));
    if (scale < 1e-12) continue;
    std::vector<std::pair<Index, double>> neg = coefs;
    for (auto& cv : neg) cv.second = -cv.second;
    if (active(targets.p_g_max)) rows.add(coefs, targets.p_g_max - offset);
    if (active(targets.p_g_min)) rows.add(std::move(neg), offset - targets.p_g_min);
  }

  out.qp.hessian = std::move(h);
  out.qp.gradient = std::move(g);
  out.qp.eq_a = std::move(a_eq);
  out.qp.eq_b = std::move(b_eq);
  rows.to_dense(n, out.qp.ineq_a, out.qp.ineq_b);
  out.constant = c;
  return out;
}

ControlDecision mpc_step(const PlantState& estimates, double p_pb_hat, const ControlDecision& prev,
                         const PlantParams& params, const MpcConfig& config) {
  ControlDecision hold = prev;
  hold.solved = false;
  hold.qp_attempted = false;
  auto fail = [&](const std::string& why) {
    hold.diagnostic = why;
    return hold;
  };

  const StateVector x0 = estimates.vector();
  if (!x0.allFinite() || !std::isfinite(p_pb_hat)) return fail("non-finite estimates");

  const ConverterCoupling cc =
      solve_converter_coupling(estimates.delta_f, prev.p_g_star, p_pb_hat, params.vsg, params.grid);
  const double omega_ref = reference_speed(cc.p_g);
  hold.omega_ref = omega_ref;

  StationaryOptions sopt;
  if (active(config.u_low[kGateRef])) sopt.g_min = config.u_low[kGateRef];
  if (active(config.u_high[kGateRef])) sopt.g_max = config.u_high[kGateRef];
  LinearModel model;
  try {
    model = linearize(p_pb_hat, prev.p_g_star, params, config.dt, sopt);
  } catch (const Error& e) {
    return fail(std::string("stationary point: ") + e.what());
  }

  MpcTargets targets;
  targets.omega_ref = omega_ref;
  targets.delta_f_ref = params.vsg.f_star;
  targets.p_pb = p_pb_hat;
  targets.p_g_min = params.vsg.p_g_min;
  targets.p_g_max = params.vsg.p_g_max;

  InputVector prev_input;
  prev_input[kPowerRef] = prev.p_g_star;
  prev_input[kPowerBalance] = p_pb_hat;
  prev_input[kGateRef] = prev.g_star;

  const MpcProblem mp = build_qp(model, x0, prev_input, config, targets);
  QpOptions qopt;
  qopt.max_iterations = config.qp_max_iterations;
  std::optional<VectorXd> warm;
  if (prev.z && prev.z->size() == mp.qp.num_variables()) warm = prev.z;
  const QpSolution sol = solve_qp(mp.qp, warm, qopt);

  hold.qp_attempted = true;
  hold.qp_status = sol.status;
  hold.qp_iterations = sol.iterations;
  hold.kkt_residual = sol.kkt_residual;
  if (sol.status != QpStatus::kSolved) {
    std::ostringstream os;
    os << "qp " << to_string(sol.status) << " (kkt " << sol.kkt_residual << ")";
    if (!sol.message.empty()) os << ": " << sol.message;
    return fail(os.str());
  }

  const MpcLayout& L = mp.layout;
  ControlDecision d;
  d.solved = true;
  d.qp_attempted = true;
  d.qp_status = sol.status;
  d.qp_iterations = sol.iterations;
  d.kkt_residual = sol.kkt_residual;
  d.objective = sol.objective + mp.constant;
  d.omega_ref = omega_ref;
  d.z = sol.z;

  const InputVector u0 = model.u_s + sol.z.segment(L.input(0), kNumInputs);
  double g_lo = prev.g_star - config.du_high[kGateRef];
  double g_hi = prev.g_star + config.du_high[kGateRef];
  if (!active(config.du_high[kGateRef])) {
    g_lo = -kInactiveBound;
    g_hi = kInactiveBound;
  }
  if (active(config.u_low[kGateRef])) g_lo = std::max(g_lo, config.u_low[kGateRef]);
  if (active(config.u_high[kGateRef])) g_hi = std::min(g_hi, config.u_high[kGateRef]);
  d.g_star = std::clamp(u0[kGateRef], std::min(g_lo, g_hi), g_hi);
  double p_star = u0[kPowerRef];
  if (active(config.u_low[kPowerRef])) p_star = std::max(p_star, config.u_low[kPowerRef]);
  if (active(config.u_high[kPowerRef])) p_star = std::min(p_star, config.u_high[kPowerRef]);
  d.p_g_star = p_star;

  d.predicted_trajectory.reserve(static_cast<std::size_t>(L.n_steps));
  for (int t = 1; t <= L.n_steps; ++t) {
    d.predicted_trajectory.push_back(model.x_s + sol.z.segment(L.state(t), kNumStates));
  }
  d.slack_values = sol.z.segment(L.slack(), kNumStates);
  return d;
}

}  // namespace vshp
