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

#include "vshp/summary.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

namespace vshp {

namespace {
const char* kStateNames[kNumStates] = {"delta_f", "g", "q", "q_hr", "h_st", "omega"};
}

RunSummary summarize(const SimTrace& trace) {
  RunSummary s;
  s.scenario = trace.scenario;
  s.rows = trace.rows();
  s.aborted = trace.aborted;
  s.wall_time_s = trace.wall_time_s;
  if (s.rows == 0) return s;

  const std::size_t c_df = trace.column_index("delta_f");
  const std::size_t c_w = trace.column_index("omega");
  const std::size_t c_wr = trace.column_index("omega_ref");
  const std::size_t c_hst = trace.column_index("h_st");
  const std::size_t c_status = trace.column_index("qp_status");
  const std::size_t c_kkt = trace.column_index("kkt_residual");
  const std::size_t c_ctrl = trace.column_index("controller_step");
  std::array<std::size_t, kNumStates> c_slack{};
  for (int i = 0; i < kNumStates; ++i) {
    c_slack[static_cast<std::size_t>(i)] = trace.column_index(std::string("slack_") + kStateNames[i]);
  }

  s.max_h_st = trace.at(0, c_hst);
  s.min_h_st = trace.at(0, c_hst);
  for (std::size_t r = 0; r < s.rows; ++r) {
    s.peak_abs_delta_f = std::max(s.peak_abs_delta_f, std::abs(trace.at(r, c_df)));
    s.peak_abs_speed_error = std::max(s.peak_abs_speed_error, std::abs(trace.at(r, c_w) - trace.at(r, c_wr)));
    s.max_h_st = std::max(s.max_h_st, trace.at(r, c_hst));
    s.min_h_st = std::min(s.min_h_st, trace.at(r, c_hst));
    if (trace.at(r, c_ctrl) != 1.0) continue;
    const double status = trace.at(r, c_status);
    if (status >= 0.0) ++s.qp_solves;
    if (status != 0.0) {
      ++s.qp_failures;
    } else {
      s.max_kkt_residual = std::max(s.max_kkt_residual, trace.at(r, c_kkt));
    }
    for (std::size_t i = 0; i < c_slack.size(); ++i) {
      s.max_slack[i] = std::max(s.max_slack[i], trace.at(r, c_slack[i]));
    }
  }
  s.steady_abs_delta_f = std::abs(trace.at(s.rows - 1, c_df));
  return s;
}

std::string summary_to_json_text(const RunSummary& s) {
  nlohmann::ordered_json j;
  j["scenario"] = s.scenario;
  j["rows"] = s.rows;
  j["aborted"] = s.aborted;
  j["peak_abs_delta_f"] = s.peak_abs_delta_f;
  j["steady_abs_delta_f"] = s.steady_abs_delta_f;
  j["peak_abs_speed_error"] = s.peak_abs_speed_error;
  j["max_h_st"] = s.max_h_st;
  j["min_h_st"] = s.min_h_st;
  nlohmann::ordered_json slack;
  for (int i = 0; i < kNumStates; ++i) {
    slack[std::string("slack_") + kStateNames[i]] = s.max_slack[static_cast<std::size_t>(i)];
  }
  j["max_slack"] = slack;
  j["qp_solves"] = s.qp_solves;
  j["qp_failures"] = s.qp_failures;
  j["max_kkt_residual"] = s.max_kkt_residual;
  j["wall_time_s"] = s.wall_time_s;
  return j.dump(2) + "\n";
}

}  // namespace vshp
