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

#include "vshp/sim_harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "vshp/errors.hpp"
#include "vshp/linearization.hpp"
#include "vshp/reference_speed.hpp"

namespace vshp {

using nlohmann::json;

const char* to_string(ControllerKind kind) {
  return kind == ControllerKind::kMpc ? "mpc" : "pid-baseline";
}

namespace {

bool is_integer_ratio(double a, double b, long& ratio) {
  const double r = a / b;
  ratio = std::lround(r);
  return ratio >= 1 && std::abs(r - static_cast<double>(ratio)) <= 1e-9 * r;
}

}  // namespace

void validate_scenario(const ScenarioSpec& s) {
  auto bad = [&](const std::string& msg) { throw ConfigError("scenario '" + s.name + "': " + msg); };
  if (!(std::isfinite(s.duration) && s.duration > 0.0)) bad("duration must be positive");
  if (!(std::isfinite(s.sim_dt) && s.sim_dt > 0.0)) bad("sim_dt must be positive");
  if (!(std::isfinite(s.mpc_dt) && s.mpc_dt > 0.0)) bad("mpc_dt must be positive");
  long ratio = 0;
  if (!is_integer_ratio(s.mpc_dt, s.sim_dt, ratio)) bad("mpc_dt must be an integer multiple of sim_dt");
  long steps = 0;
  if (!is_integer_ratio(s.duration, s.sim_dt, steps)) bad("duration must be an integer multiple of sim_dt");
  if (s.log_every < 1) bad("log_every must be at least 1");
  if (ratio % s.log_every != 0) bad("log_every must divide the controller period so every controller step is logged");
  if (!std::isfinite(s.initial_p_g_star)) bad("initial_p_g_star must be finite");
  double last = -1.0;
  for (const auto& e : s.events) {
    // Events after the end are allowed so a built-in scenario can be shortened; they never fire.
    if (!std::isfinite(e.time) || e.time < 0.0) bad("event time must be finite and non-negative");
    if (e.time < last) bad("events must be sorted by time");
    last = e.time;
    if (e.field != "p_pb" && e.field != "h_grid") bad("unknown event field '" + e.field + "' (p_pb or h_grid)");
    if (!std::isfinite(e.value)) bad("event value must be finite");
    if (e.field == "h_grid" && !(e.value > 0.0)) bad("h_grid events must be positive");
  }
}

ScenarioSpec scenario_from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("scenario parse error: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("scenario must be a JSON object");
  ScenarioSpec s;
  try {
    for (auto it = j.begin(); it != j.end(); ++it) {
      const std::string& k = it.key();
      const json& v = it.value();
      if (k == "name") {
        s.name = v.get<std::string>();
      } else if (k == "duration") {
        s.duration = v.get<double>();
      } else if (k == "sim_dt") {
        s.sim_dt = v.get<double>();
      } else if (k == "mpc_dt") {
        s.mpc_dt = v.get<double>();
      } else if (k == "log_every") {
        s.log_every = v.get<int>();
      } else if (k == "initial_p_g_star") {
        s.initial_p_g_star = v.get<double>();
      } else if (k == "controller") {
        const auto c = v.get<std::string>();
        if (c == "mpc") {
          s.controller = ControllerKind::kMpc;
        } else if (c == "pid-baseline" || c == "pid") {
          s.controller = ControllerKind::kPid;
        } else {
          throw ConfigError("scenario: controller must be 'mpc' or 'pid-baseline'");
        }
      } else if (k == "events") {
        for (const auto& e : v) {
          ScenarioEvent ev;
          ev.time = e.at("time").get<double>();
          ev.field = e.at("field").get<std::string>();
          ev.value = e.at("value").get<double>();
          s.events.push_back(ev);
        }
      } else if (k == "overrides") {
        for (auto o = v.begin(); o != v.end(); ++o) s.overrides.emplace_back(o.key(), o.value().dump());
      } else {
        throw ConfigError("scenario: unknown field '" + k + "'");
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("scenario: ") + e.what());
  }
  validate_scenario(s);
  return s;
}

std::string scenario_to_json_text(const ScenarioSpec& s) {
  json j = json::object();
  j["name"] = s.name;
  j["duration"] = s.duration;
  j["sim_dt"] = s.sim_dt;
  j["mpc_dt"] = s.mpc_dt;
  j["log_every"] = s.log_every;
  j["initial_p_g_star"] = s.initial_p_g_star;
  j["controller"] = to_string(s.controller);
  j["events"] = json::array();
  for (const auto& e : s.events) j["events"].push_back({{"time", e.time}, {"field", e.field}, {"value", e.value}});
  j["overrides"] = json::object();
  for (const auto& [k, v] : s.overrides) j["overrides"][k] = json::parse(v);
  return j.dump(2);
}

ScenarioSpec load_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scenario file '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  try {
    return scenario_from_json_text(buffer.str());
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

std::vector<std::string> builtin_scenario_names() {
  return {"scenario1", "scenario2", "scenario3", "generator-loss-mpc", "generator-loss-pid"};
}

ScenarioSpec builtin_scenario(const std::string& name) {
  if (name == "generator-loss-mpc") return generator_loss_scenario(ControllerKind::kMpc);
  if (name == "generator-loss-pid") return generator_loss_scenario(ControllerKind::kPid);
  ScenarioSpec s;
  s.name = name;
  s.duration = 120.0;
  s.events = {{0.0, "p_pb", 0.4}, {60.0, "p_pb", 0.0}};
  if (name == "scenario1") {
    s.overrides = {{"vsg.k_vsg_p", "100"}};
  } else if (name == "scenario2") {
    s.overrides = {{"vsg.k_vsg_p", "25"}};
  } else if (name == "scenario3") {
    s.overrides = {{"vsg.k_vsg_p", "100"}, {"mpc.x_low.5", "0.85"}, {"mpc.x_high.5", "1.1"}};
  } else {
    throw UnknownScenarioError("unknown scenario '" + name +
                               "' (built-ins: scenario1, scenario2, scenario3, generator-loss-mpc, "
                               "generator-loss-pid)");
  }
  return s;
}

ScenarioSpec generator_loss_scenario(ControllerKind controller, double p_pb_step, double h_grid_after) {
  ScenarioSpec s;
  s.name = controller == ControllerKind::kMpc ? "generator-loss-mpc" : "generator-loss-pid";
  s.controller = controller;
  s.duration = 60.0;
  s.events = {{0.0, "p_pb", p_pb_step}, {0.0, "h_grid", h_grid_after}};
  return s;
}

PlantState integrate_step(const PlantState& state, const ControlInputs& inputs, const PlantParams& params,
                          double dt) {
  if (!(dt > 0.0)) throw ConfigError("integrate_step: dt must be positive");
  auto f = [&](const StateVector& x) { return plant_deriv(PlantState::from_vector(x), inputs, params); };
  const StateVector next = rk4_step(f, state.vector(), dt);
  if (!next.allFinite()) throw SimulationError("integrate_step: non-finite state");
  return PlantState::from_vector(next);
}

PidGovernorState make_pid_governor(const PidConfig& c, double g_star0, double target) {
  PidGovernorState s;
  s.kp = c.kp;
  s.ki = c.ki;
  s.kd = c.kd;
  s.rate_limit = c.rate_limit;
  s.g_min = c.g_min;
  s.g_max = c.g_max;
  s.anti_windup = c.anti_windup;
  s.base = g_star0;
  s.g_star = g_star0;
  s.target = target;
  return s;
}

std::pair<double, PidGovernorState> pid_governor_step(const PidGovernorState& state, double omega, double dt) {
  if (!(dt > 0.0)) throw ConfigError("pid_governor_step: dt must be positive");
  PidGovernorState s = state;
  const double error = s.target - omega;
  const double derivative = s.has_prev ? (error - s.prev_error) / dt : 0.0;
  const double integral = s.integral + error * dt;
  const double raw = s.base + s.kp * error + s.ki * integral + s.kd * derivative;
  const double lo = std::max(s.g_min, s.g_star - s.rate_limit * dt);
  const double hi = std::min(s.g_max, s.g_star + s.rate_limit * dt);
  const double out = std::clamp(raw, std::min(lo, hi), hi);
  const bool saturated = out != raw;
  if (!(saturated && s.anti_windup)) s.integral = integral;
  s.prev_error = error;
  s.has_prev = true;
  s.g_star = out;
  return {out, s};
}

SimTrace::SimTrace(std::vector<std::string> columns) : columns_(std::move(columns)) {}

std::size_t SimTrace::column_index(const std::string& name) const {
  const auto it = std::find(columns_.begin(), columns_.end(), name);
  if (it == columns_.end()) throw std::out_of_range("no trace column '" + name + "'");
  return static_cast<std::size_t>(it - columns_.begin());
}

std::vector<double> SimTrace::column(const std::string& name) const {
  const std::size_t c = column_index(name);
  std::vector<double> out(rows());
  for (std::size_t r = 0; r < out.size(); ++r) out[r] = at(r, c);
  return out;
}

void SimTrace::append(const std::vector<double>& row) {
  if (row.size() != columns_.size()) throw std::invalid_argument("trace row has the wrong width");
  data_.insert(data_.end(), row.begin(), row.end());
}

std::string SimTrace::to_csv() const {
  std::string out;
  out.reserve(data_.size() * 24 + 512);
  for (std::size_t c = 0; c < columns_.size(); ++c) {
    if (c) out += ',';
    out += columns_[c];
  }
  out += '\n';
  char buf[40];
  for (std::size_t r = 0; r < rows(); ++r) {
    for (std::size_t c = 0; c < columns_.size(); ++c) {
      if (c) out += ',';
      std::snprintf(buf, sizeof buf, "%.17g", at(r, c));
      out += buf;
    }
    out += '\n';
  }
  return out;
}

void SimTrace::write_csv(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << to_csv();
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

std::vector<std::string> trace_columns() {
  return {"time_s",      "delta_f",     "g",          "q",           "q_hr",          "h_st",
          "omega",       "p_g_star",    "p_pb",       "g_star",      "p_g",           "h",
          "p_m",         "omega_ref",   "g_hat",      "q_hat",       "q_hr_hat",      "h_st_hat",
          "f_filt",      "fdot_filt",   "p_pb_hat",   "slack_delta_f", "slack_g",     "slack_q",
          "slack_q_hr",  "slack_h_st",  "slack_omega", "qp_status",  "qp_iterations", "kkt_residual",
          "controller_step"};
}

namespace {

using AugmentedVector = Eigen::Matrix<double, kNumStates + kKfStates, 1>;

double qp_status_code(const ControlDecision& d) {
  return d.qp_attempted ? static_cast<double>(static_cast<int>(d.qp_status)) : -1.0;
}

}  // namespace

SimTrace run_scenario(const ScenarioSpec& spec, const Config& config) {
  const auto wall_start = std::chrono::steady_clock::now();
  validate_scenario(spec);
  Config cfg = config;
  for (const auto& [k, v] : spec.overrides) apply_override(cfg, k, v);
  cfg = prepare_config(cfg);
  PlantParams params = cfg.plant;

  SimTrace trace(trace_columns());
  trace.scenario = spec.name;

  const double p_pb0 = -spec.initial_p_g_star;
  StationaryOptions sopt;
  StationaryPoint sp;
  try {
    sp = solve_stationary(p_pb0, spec.initial_p_g_star, params, sopt);
  } catch (const Error& e) {
    throw ConfigError(std::string("initial operating point: ") + e.what());
  }

  KalmanModel kf = linearize_hydraulics(params, PlantState::from_vector(sp.x_s), cfg.estimator);
  kalman_gain(kf);
  for (const auto& w : kf.warnings) trace.diagnostics.push_back("estimator: " + w);

  PlantState state = PlantState::from_vector(sp.x_s);
  KfStateVector x_hat = hydraulic_states(state);
  EstimatorState est;
  est.x_hat = x_hat;
  est.f_filt = state.delta_f;
  est.fdot_filt = 0.0;
  est.p_pb_hat = p_pb0;

  ControlDecision decision;
  decision.g_star = sp.u_s[kGateRef];
  decision.p_g_star = spec.initial_p_g_star;
  const double p_g0 = plant_outputs(sp.x_s, sp.u_s, params)[kConverterPower];
  decision.omega_ref = reference_speed(p_g0);
  PidGovernorState pid = make_pid_governor(cfg.pid, decision.g_star, decision.omega_ref);

  long ratio = 0, n_steps = 0;
  is_integer_ratio(spec.mpc_dt, spec.sim_dt, ratio);
  is_integer_ratio(spec.duration, spec.sim_dt, n_steps);
  const double dt = spec.sim_dt;
  double p_pb = p_pb0;
  std::size_t next_event = 0;
  constexpr std::size_t kMaxDiagnostics = 200;

  MpcConfig mpc_cfg = cfg.mpc;
  mpc_cfg.dt = spec.mpc_dt;

  std::vector<double> row(trace.columns().size());
  for (long k = 0; k <= n_steps; ++k) {
    const double t = static_cast<double>(k) * dt;
    try {
      while (next_event < spec.events.size() && spec.events[next_event].time <= t + 1e-9 * dt) {
        const ScenarioEvent& e = spec.events[next_event++];
        if (e.field == "p_pb") {
          p_pb = p_pb0 + e.value;
        } else {
          params.grid.h_grid = e.value;
        }
      }

      bool controller_step = false;
      if (k < n_steps) {
        if (spec.controller == ControllerKind::kMpc) {
          if (k % ratio == 0) {
            PlantState estimates = state;
            estimates.g = x_hat[0];
            estimates.q = x_hat[1];
            estimates.q_hr = x_hat[2];
            estimates.h_st = x_hat[3];
            decision = mpc_step(estimates, est.p_pb_hat, decision, params, mpc_cfg);
            controller_step = true;
            if (!decision.solved && trace.diagnostics.size() < kMaxDiagnostics) {
              std::ostringstream os;
              os << "t=" << t << ": controller held previous input: " << decision.diagnostic;
              trace.diagnostics.push_back(os.str());
            }
          }
        } else {
          const ControlInputs now{decision.p_g_star, p_pb, decision.g_star};
          pid.target = reference_speed(evaluate_plant(state, now, params).p_g);
          auto [g_star, next] = pid_governor_step(pid, state.omega, dt);
          pid = next;
          decision.g_star = g_star;
          decision.omega_ref = pid.target;
        }
      }

      const ControlInputs inputs{decision.p_g_star, p_pb, decision.g_star};
      const PlantEvaluation ev = evaluate_plant(state, inputs, params);

      if (k % spec.log_every == 0) {
        std::size_t c = 0;
        row[c++] = t;
        const StateVector xv = state.vector();
        for (int i = 0; i < kNumStates; ++i) row[c++] = xv[i];
        row[c++] = inputs.p_g_star;
        row[c++] = inputs.p_pb;
        row[c++] = inputs.g_star;
        row[c++] = ev.p_g;
        row[c++] = ev.hydraulics.h;
        row[c++] = ev.hydraulics.p_m;
        row[c++] = reference_speed(ev.p_g);
        for (int i = 0; i < kKfStates; ++i) row[c++] = x_hat[i];
        row[c++] = est.f_filt;
        row[c++] = est.fdot_filt;
        row[c++] = est.p_pb_hat;
        for (int i = 0; i < kNumStates; ++i) row[c++] = decision.slack_values[i];
        const bool mpc = spec.controller == ControllerKind::kMpc;
        row[c++] = mpc ? qp_status_code(decision) : -1.0;
        row[c++] = mpc ? decision.qp_iterations : 0.0;
        row[c++] = mpc ? decision.kkt_residual : 0.0;
        row[c++] = controller_step ? 1.0 : 0.0;
        trace.append(row);
      }
      if (k == n_steps) break;

      // Plant and Kalman filter advance together.
      AugmentedVector z;
      z << state.vector(), x_hat;
      auto f = [&](const AugmentedVector& zz) {
        const PlantState s = PlantState::from_vector(zz.head<kNumStates>());
        AugmentedVector dz;
        dz.head<kNumStates>() = plant_deriv(s, inputs, params);
        const KfInputVector u_kf(inputs.g_star, s.omega);
        dz.tail<kKfStates>() = kalman_deriv(zz.tail<kKfStates>(), u_kf, hydraulic_measurements(s, params), kf);
        return dz;
      };
      z = rk4_step(f, z, dt);
      if (!z.allFinite()) throw SimulationError("non-finite state");
      state = PlantState::from_vector(z.head<kNumStates>());
      x_hat = z.tail<kKfStates>();

      const PlantEvaluation after = evaluate_plant(state, inputs, params);
      est = estimate_power_balance(est, state.delta_f, after.deriv[kDeltaF], after.p_g, params.grid, dt);
      est.x_hat = x_hat;
    } catch (const Error& e) {
      std::ostringstream os;
      os << "simulation aborted at t=" << t << ": " << e.what();
      trace.aborted = true;
      trace.abort_reason = os.str();
      break;
    }
  }
  trace.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();
  return trace;
}

}  // namespace vshp
