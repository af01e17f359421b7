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
#include <utility>
#include <vector>

#include "vshp/config.hpp"
#include "vshp/estimation.hpp"
#include "vshp/mpc_controller.hpp"
#include "vshp/plant_model.hpp"

namespace vshp {

enum class ControllerKind { kMpc, kPid };

const char* to_string(ControllerKind kind);

/// `p_pb` values are relative to the initial balance (-initial P_g*);
/// `h_grid` values are absolute.
struct ScenarioEvent {
  double time = 0.0;
  std::string field;
  double value = 0.0;
};

struct ScenarioSpec {
  std::string name = "custom";
  double duration = 120.0;
  double sim_dt = 0.01;
  double mpc_dt = 0.2;
  int log_every = 5;  ///< sim steps between logged rows
  double initial_p_g_star = 0.8;
  ControllerKind controller = ControllerKind::kMpc;
  std::vector<ScenarioEvent> events;
  std::vector<std::pair<std::string, std::string>> overrides;  ///< config key -> JSON value
};

/// Throws ConfigError naming the first violated invariant.
void validate_scenario(const ScenarioSpec& spec);

ScenarioSpec scenario_from_json_text(const std::string& text);
std::string scenario_to_json_text(const ScenarioSpec& spec);
ScenarioSpec load_scenario_file(const std::string& path);

std::vector<std::string> builtin_scenario_names();

/// scenario1, scenario2, scenario3, generator-loss-mpc, generator-loss-pid.
/// Throws UnknownScenarioError otherwise.
ScenarioSpec builtin_scenario(const std::string& name);

/// Simultaneous power-balance step and grid inertia drop at t = 0.
ScenarioSpec generator_loss_scenario(ControllerKind controller, double p_pb_step = -0.15,
                                     double h_grid_after = 19.0);

/// One classical RK4 step for x' = f(x).
template <typename Vec, typename F>
Vec rk4_step(const F& f, const Vec& x, double dt) {
  const Vec k1 = f(x);
  const Vec k2 = f(Vec(x + 0.5 * dt * k1));
  const Vec k3 = f(Vec(x + 0.5 * dt * k2));
  const Vec k4 = f(Vec(x + dt * k3));
  return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

/// RK4 on plant_deriv with the inputs held. Throws SimulationError on
/// non-finite results and DomainError outside the model domain.
PlantState integrate_step(const PlantState& state, const ControlInputs& inputs, const PlantParams& params,
                          double dt);

struct PidGovernorState {
  double kp = 2.0;
  double ki = 0.5;
  double kd = 0.0;
  double rate_limit = 0.2;
  double g_min = 0.1;
  double g_max = 1.3;
  bool anti_windup = true;

  double base = 0.0;  ///< opening at zero error and zero integral
  double integral = 0.0;
  double prev_error = 0.0;
  bool has_prev = false;
  double g_star = 0.0;  ///< last output
  double target = 1.0;  ///< speed reference
};

PidGovernorState make_pid_governor(const PidConfig& config, double g_star0, double target);

/// PID on (target - omega), clamped to [g_min, g_max] and rate limited.
/// The integral is frozen while the output saturates (when anti_windup).
std::pair<double, PidGovernorState> pid_governor_step(const PidGovernorState& state, double omega, double dt);

/// Column-oriented trace on a uniform grid.
class SimTrace {
 public:
  SimTrace() = default;
  explicit SimTrace(std::vector<std::string> columns);

  const std::vector<std::string>& columns() const { return columns_; }
  std::size_t rows() const { return columns_.empty() ? 0 : data_.size() / columns_.size(); }
  double at(std::size_t row, std::size_t col) const { return data_[row * columns_.size() + col]; }
  std::vector<double> column(const std::string& name) const;
  std::size_t column_index(const std::string& name) const;  ///< throws std::out_of_range
  void append(const std::vector<double>& row);

  /// Header plus one line per row, values in %.17g.
  std::string to_csv() const;
  void write_csv(const std::string& path) const;

  std::string scenario;
  bool aborted = false;
  std::string abort_reason;
  double wall_time_s = 0.0;
  std::vector<std::string> diagnostics;  ///< controller holds and model warnings

 private:
  std::vector<std::string> columns_;
  std::vector<double> data_;
};

std::vector<std::string> trace_columns();

/// Closed loop: plant and Kalman filter integrated together by RK4 at
/// sim_dt, power-balance filters advanced after every step, controller
/// called every mpc_dt (PID: every sim_dt). The scenario's overrides are
/// applied to `config` first. Numerical blow-up ends the run with
/// `aborted` set; configuration problems throw ConfigError.
SimTrace run_scenario(const ScenarioSpec& spec, const Config& config);

}  // namespace vshp
