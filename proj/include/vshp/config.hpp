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

#include <array>
#include <string>
#include <vector>

#include "vshp/plant_model.hpp"

namespace vshp {

// Bounds at or beyond this magnitude are treated as absent.
inline constexpr double kInactiveBound = 1e6;

using StateArray = std::array<double, kNumStates>;
using InputArray = std::array<double, kNumInputs>;

/// Finite-horizon MPC settings. Vectors are indexed like StateVector and
/// InputVector; per-unit throughout.
struct MpcConfig {
  int n_steps = 41;
  double dt = 0.2;
  std::vector<int> block_sizes = {1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 2, 2, 2, 2, 3, 3, 3, 3, 3, 4, 4};

  StateArray q_diag = {0.01, 0.0, 0.0, 0.0, 0.0, 100.0};
  StateArray q_delta_diag = {0.0, 0.0, 0.0, 0.0, 0.0, 0.0};
  InputArray r_diag = {1000.0, 0.0, 0.0};
  InputArray r_delta_diag = {0.0, 0.0, 1.0};
  StateArray d_x = {0.0, 0.0, 0.0, 0.0, 0.0, 0.0};
  InputArray d_u = {0.0, 0.0, 0.0};

  StateArray rho = {0.0, 0.0, 0.0, 0.0, 0.0, 0.0};
  StateArray s_diag = {0.0, 0.0, 1.0, 0.0, 1e6, 1e5};
  StateArray x_low = {-kInactiveBound, -kInactiveBound, 0.3, -kInactiveBound, 0.5, 0.7};
  StateArray x_high = {kInactiveBound, kInactiveBound, 1.3, kInactiveBound, 1.1, 2.0};
  StateArray dx_high = {kInactiveBound, kInactiveBound, kInactiveBound,
                        kInactiveBound, kInactiveBound, kInactiveBound};

  InputArray u_low = {-kInactiveBound, -kInactiveBound, 0.1};
  InputArray u_high = {kInactiveBound, kInactiveBound, 1.3};
  InputArray du_high = {kInactiveBound, kInactiveBound, 0.04};

  double p_g_ref = 0.8;
  int qp_max_iterations = 500;
};

/// Kalman filter noise model; the filter corners live in GridParams.
struct EstimatorConfig {
  std::array<double, 4> q_noise_diag = {1e-4, 1e-4, 1e-4, 1e-4};
  std::array<double, 4> r_noise_diag = {1e-4, 1e-4, 1e-4, 1e-3};
};

/// Conventional speed governor used as the comparison baseline.
struct PidConfig {
  double kp = 2.0;
  double ki = 0.5;
  double kd = 0.0;
  double rate_limit = 0.2;  ///< p.u./s, same for opening and closing
  double g_min = 0.1;
  double g_max = 1.3;
  bool anti_windup = true;
};

struct Config {
  PlantParams plant;
  MpcConfig mpc;
  EstimatorConfig estimator;
  PidConfig pid;
};

struct ValidationGroup {
  std::string name;
  bool passed = true;
  std::vector<std::string> messages;
};

struct ValidationReport {
  std::vector<ValidationGroup> groups;
  bool passed() const;
  std::string to_string() const;
};

/// Default configuration with the turbine calibrated.
Config default_config();

/// Parses a configuration document. Missing fields take their defaults;
/// unknown fields raise ConfigError. The result is not calibrated or
/// validated.
Config config_from_json_text(const std::string& text);
std::string config_to_json_text(const Config& config);

/// Reads a file; parse failures carry line/column information.
Config load_config_file(const std::string& path);

/// Applies `group.field=value` (arrays addressed as `group.field.index`).
/// The value is parsed as JSON, falling back to a plain string.
void apply_override(Config& config, const std::string& assignment);
void apply_override(Config& config, const std::string& key, const std::string& value);

/// Checks every documented invariant, grouped by parameter block.
ValidationReport validate_config(const Config& config);

/// Validates, throws ConfigError listing failures, then calibrates.
Config prepare_config(const Config& config);

void check_block_sizes(int n_steps, const std::vector<int>& block_sizes);

}  // namespace vshp
