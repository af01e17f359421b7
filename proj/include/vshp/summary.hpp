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

#include "vshp/sim_harness.hpp"

namespace vshp {

/// Metrics derived from a trace alone (wall time aside), so that they can be
/// recomputed from the CSV.
struct RunSummary {
  std::string scenario;
  std::size_t rows = 0;
  bool aborted = false;
  double peak_abs_delta_f = 0.0;    ///< max |delta_f|
  double steady_abs_delta_f = 0.0;  ///< |delta_f| on the last row
  double peak_abs_speed_error = 0.0;  ///< max |omega - omega_ref|
  double max_h_st = 0.0;
  double min_h_st = 0.0;
  std::array<double, kNumStates> max_slack{};  ///< per state, over controller rows
  long qp_solves = 0;     ///< controller rows where a QP ran
  long qp_failures = 0;   ///< controller rows without a solved QP
  double max_kkt_residual = 0.0;  ///< over solved QPs
  double wall_time_s = 0.0;
};

RunSummary summarize(const SimTrace& trace);

/// Slack keys are "slack_<state>"; doubles round-trip exactly.
std::string summary_to_json_text(const RunSummary& summary);

}  // namespace vshp
