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

#include "vshp/vshp.h"

#include <cstdlib>
#include <cstring>
#include <exception>
#include <new>
#include <string>

#include <json.hpp>

#include "vshp/config.hpp"
#include "vshp/errors.hpp"
#include "vshp/reference_speed.hpp"
#include "vshp/sim_harness.hpp"
#include "vshp/summary.hpp"

struct vshp_config {
  vshp::Config value;
};

struct vshp_scenario {
  vshp::ScenarioSpec value;
};

struct vshp_trace {
  vshp::SimTrace value;
};

namespace {

thread_local std::string g_last_error;

vshp_status fail(vshp_status status, const std::string& message) {
  g_last_error = message;
  return status;
}

// Runs `body`, mapping exceptions onto status codes.
template <typename F>
vshp_status guarded(F&& body) {
  try {
    g_last_error.clear();
    return body();
  } catch (const vshp::ParseError& e) {
    return fail(VSHP_ERR_PARSE, e.what());
  } catch (const vshp::UnknownScenarioError& e) {
    return fail(VSHP_ERR_UNKNOWN_SCENARIO, e.what());
  } catch (const vshp::ConfigError& e) {
    return fail(VSHP_ERR_CONFIG, e.what());
  } catch (const vshp::DomainError& e) {
    return fail(VSHP_ERR_INVALID_ARGUMENT, e.what());
  } catch (const vshp::Error& e) {
    return fail(VSHP_ERR_SIMULATION, e.what());
  } catch (const std::bad_alloc&) {
    return fail(VSHP_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(VSHP_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(VSHP_ERR_INTERNAL, "unknown error");
  }
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

}  // namespace

extern "C" {

const char* vshp_last_error(void) { return g_last_error.c_str(); }

const char* vshp_status_string(vshp_status status) {
  switch (status) {
    case VSHP_OK:
      return "ok";
    case VSHP_ERR_INVALID_ARGUMENT:
      return "invalid argument";
    case VSHP_ERR_CONFIG:
      return "configuration error";
    case VSHP_ERR_PARSE:
      return "parse error";
    case VSHP_ERR_UNKNOWN_SCENARIO:
      return "unknown scenario";
    case VSHP_ERR_IO:
      return "i/o error";
    case VSHP_ERR_SIMULATION:
      return "simulation error";
    case VSHP_ERR_INTERNAL:
      return "internal error";
  }
  return "unknown status";
}

void vshp_string_free(char* s) { std::free(s); }

vshp_status vshp_config_create_default(vshp_config** out) {
  if (!out) return fail(VSHP_ERR_INVALID_ARGUMENT, "out must not be null");
  return guarded([&] {
    *out = new vshp_config{vshp::default_config()};
    return VSHP_OK;
  });
}

vshp_status vshp_config_load(const char* path, vshp_config** out) {
  if (!path || !out) return fail(VSHP_ERR_INVALID_ARGUMENT, "path and out must not be null");
  return guarded([&] {
    *out = new vshp_config{vshp::load_config_file(path)};
    return VSHP_OK;
  });
}

vshp_status vshp_config_set(vshp_config* config, const char* assignment) {
  if (!config || !assignment) return fail(VSHP_ERR_INVALID_ARGUMENT, "config and assignment must not be null");
  return guarded([&] {
    vshp::Config copy = config->value;
    vshp::apply_override(copy, assignment);
    config->value = std::move(copy);
    return VSHP_OK;
  });
}

vshp_status vshp_config_validate(const vshp_config* config, int* passed, char** report) {
  if (!config || !passed) return fail(VSHP_ERR_INVALID_ARGUMENT, "config and passed must not be null");
  return guarded([&] {
    const vshp::ValidationReport r = vshp::validate_config(config->value);
    *passed = r.passed() ? 1 : 0;
    if (report) *report = dup_string(r.to_string());
    return VSHP_OK;
  });
}

vshp_status vshp_config_to_json(const vshp_config* config, char** out) {
  if (!config || !out) return fail(VSHP_ERR_INVALID_ARGUMENT, "config and out must not be null");
  return guarded([&] {
    *out = dup_string(vshp::config_to_json_text(config->value));
    return VSHP_OK;
  });
}

void vshp_config_destroy(vshp_config* config) { delete config; }

vshp_status vshp_scenario_builtin(const char* name, vshp_scenario** out) {
  if (!name || !out) return fail(VSHP_ERR_INVALID_ARGUMENT, "name and out must not be null");
  return guarded([&] {
    *out = new vshp_scenario{vshp::builtin_scenario(name)};
    return VSHP_OK;
  });
}

vshp_status vshp_scenario_load(const char* path, vshp_scenario** out) {
  if (!path || !out) return fail(VSHP_ERR_INVALID_ARGUMENT, "path and out must not be null");
  return guarded([&] {
    *out = new vshp_scenario{vshp::load_scenario_file(path)};
    return VSHP_OK;
  });
}

const char* vshp_scenario_name(const vshp_scenario* scenario) {
  return scenario ? scenario->value.name.c_str() : nullptr;
}

vshp_status vshp_scenario_add_override(vshp_scenario* scenario, const char* assignment) {
  if (!scenario || !assignment) return fail(VSHP_ERR_INVALID_ARGUMENT, "scenario and assignment must not be null");
  const std::string text(assignment);
  const auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0) {
    return fail(VSHP_ERR_CONFIG, "override '" + text + "' must have the form group.field=value");
  }
  return guarded([&] {
    const std::string value = text.substr(eq + 1);
    std::string encoded;
    try {
      encoded = nlohmann::json::parse(value).dump();
    } catch (const nlohmann::json::parse_error&) {
      encoded = nlohmann::json(value).dump();
    }
    scenario->value.overrides.emplace_back(text.substr(0, eq), encoded);
    return VSHP_OK;
  });
}

vshp_status vshp_scenario_to_json(const vshp_scenario* scenario, char** out) {
  if (!scenario || !out) return fail(VSHP_ERR_INVALID_ARGUMENT, "scenario and out must not be null");
  return guarded([&] {
    *out = dup_string(vshp::scenario_to_json_text(scenario->value));
    return VSHP_OK;
  });
}

void vshp_scenario_destroy(vshp_scenario* scenario) { delete scenario; }

vshp_status vshp_run(const vshp_scenario* scenario, const vshp_config* config, vshp_trace** out) {
  if (!scenario || !config || !out) return fail(VSHP_ERR_INVALID_ARGUMENT, "arguments must not be null");
  *out = nullptr;
  return guarded([&] {
    auto* t = new vshp_trace{vshp::run_scenario(scenario->value, config->value)};
    *out = t;
    if (t->value.aborted) return fail(VSHP_ERR_SIMULATION, t->value.abort_reason);
    return VSHP_OK;
  });
}

size_t vshp_trace_rows(const vshp_trace* trace) { return trace ? trace->value.rows() : 0; }

size_t vshp_trace_columns(const vshp_trace* trace) { return trace ? trace->value.columns().size() : 0; }

const char* vshp_trace_column_name(const vshp_trace* trace, size_t column) {
  if (!trace || column >= trace->value.columns().size()) return nullptr;
  return trace->value.columns()[column].c_str();
}

vshp_status vshp_trace_value(const vshp_trace* trace, size_t row, size_t column, double* out) {
  if (!trace || !out) return fail(VSHP_ERR_INVALID_ARGUMENT, "trace and out must not be null");
  if (row >= trace->value.rows() || column >= trace->value.columns().size()) {
    return fail(VSHP_ERR_INVALID_ARGUMENT, "row or column out of range");
  }
  *out = trace->value.at(row, column);
  return VSHP_OK;
}

int vshp_trace_aborted(const vshp_trace* trace) { return trace && trace->value.aborted ? 1 : 0; }

vshp_status vshp_trace_write_csv(const vshp_trace* trace, const char* path) {
  if (!trace || !path) return fail(VSHP_ERR_INVALID_ARGUMENT, "trace and path must not be null");
  try {
    trace->value.write_csv(path);
  } catch (const std::exception& e) {
    return fail(VSHP_ERR_IO, e.what());
  }
  return VSHP_OK;
}

vshp_status vshp_trace_summary_json(const vshp_trace* trace, char** out) {
  if (!trace || !out) return fail(VSHP_ERR_INVALID_ARGUMENT, "trace and out must not be null");
  return guarded([&] {
    *out = dup_string(vshp::summary_to_json_text(vshp::summarize(trace->value)));
    return VSHP_OK;
  });
}

vshp_status vshp_trace_diagnostics(const vshp_trace* trace, char** out) {
  if (!trace || !out) return fail(VSHP_ERR_INVALID_ARGUMENT, "trace and out must not be null");
  return guarded([&] {
    std::string text;
    for (const auto& d : trace->value.diagnostics) text += d + "\n";
    *out = dup_string(text);
    return VSHP_OK;
  });
}

void vshp_trace_destroy(vshp_trace* trace) { delete trace; }

vshp_status vshp_plant_deriv(const vshp_config* config, const double state[6], const double inputs[3],
                             double out[6]) {
  if (!config || !state || !inputs || !out) return fail(VSHP_ERR_INVALID_ARGUMENT, "arguments must not be null");
  return guarded([&] {
    const vshp::PlantParams params = vshp::calibrate_rated_point(config->value.plant);
    vshp::StateVector x;
    vshp::InputVector u;
    for (int i = 0; i < vshp::kNumStates; ++i) x[i] = state[i];
    for (int i = 0; i < vshp::kNumInputs; ++i) u[i] = inputs[i];
    const vshp::StateVector d =
        vshp::plant_deriv(vshp::PlantState::from_vector(x), vshp::ControlInputs::from_vector(u), params);
    for (int i = 0; i < vshp::kNumStates; ++i) out[i] = d[i];
    return VSHP_OK;
  });
}

double vshp_reference_speed(double p_g) { return vshp::reference_speed(p_g); }

}  // extern "C"
