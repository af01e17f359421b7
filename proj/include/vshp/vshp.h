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

/* C interface to the variable-speed hydropower MPC simulator.
 *
 * Every handle is opaque and owned by the caller once returned; release it
 * with the matching *_destroy. Strings returned through char** are released
 * with vshp_string_free. Functions returning vshp_status leave a message in
 * vshp_last_error() (per thread) on failure.
 */

#ifndef VSHP_VSHP_H_
#define VSHP_VSHP_H_

#include <stddef.h>

#if defined(_WIN32)
#if defined(VSHP_BUILDING_LIBRARY)
#define VSHP_API __declspec(dllexport)
#else
#define VSHP_API __declspec(dllimport)
#endif
#else
#define VSHP_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum vshp_status {
  VSHP_OK = 0,
  VSHP_ERR_INVALID_ARGUMENT = 1,
  VSHP_ERR_CONFIG = 2,
  VSHP_ERR_PARSE = 3,
  VSHP_ERR_UNKNOWN_SCENARIO = 4,
  VSHP_ERR_IO = 5,
  VSHP_ERR_SIMULATION = 6,
  VSHP_ERR_INTERNAL = 7
} vshp_status;

typedef struct vshp_config vshp_config;
typedef struct vshp_scenario vshp_scenario;
typedef struct vshp_trace vshp_trace;

VSHP_API const char* vshp_last_error(void);
VSHP_API const char* vshp_status_string(vshp_status status);
VSHP_API void vshp_string_free(char* s);

/* Configuration */
VSHP_API vshp_status vshp_config_create_default(vshp_config** out);
VSHP_API vshp_status vshp_config_load(const char* path, vshp_config** out);
/* "group.field=value", arrays as "group.field.index=value". */
VSHP_API vshp_status vshp_config_set(vshp_config* config, const char* assignment);
/* Per-group PASS/FAIL report; *passed is 1 when every group passed. */
VSHP_API vshp_status vshp_config_validate(const vshp_config* config, int* passed, char** report);
VSHP_API vshp_status vshp_config_to_json(const vshp_config* config, char** out);
VSHP_API void vshp_config_destroy(vshp_config* config);

/* Scenarios */
VSHP_API vshp_status vshp_scenario_builtin(const char* name, vshp_scenario** out);
VSHP_API vshp_status vshp_scenario_load(const char* path, vshp_scenario** out);
VSHP_API const char* vshp_scenario_name(const vshp_scenario* scenario);
/* Appends a configuration override applied when the scenario runs; later
 * overrides of the same key win over earlier ones and over the scenario's own. */
VSHP_API vshp_status vshp_scenario_add_override(vshp_scenario* scenario, const char* assignment);
VSHP_API vshp_status vshp_scenario_to_json(const vshp_scenario* scenario, char** out);
VSHP_API void vshp_scenario_destroy(vshp_scenario* scenario);

/* Runs the closed loop. When the simulation aborts the partial trace is
 * still returned through *out together with VSHP_ERR_SIMULATION. */
VSHP_API vshp_status vshp_run(const vshp_scenario* scenario, const vshp_config* config, vshp_trace** out);

/* Traces */
VSHP_API size_t vshp_trace_rows(const vshp_trace* trace);
VSHP_API size_t vshp_trace_columns(const vshp_trace* trace);
VSHP_API const char* vshp_trace_column_name(const vshp_trace* trace, size_t column);
VSHP_API vshp_status vshp_trace_value(const vshp_trace* trace, size_t row, size_t column, double* out);
VSHP_API int vshp_trace_aborted(const vshp_trace* trace);
VSHP_API vshp_status vshp_trace_write_csv(const vshp_trace* trace, const char* path);
VSHP_API vshp_status vshp_trace_summary_json(const vshp_trace* trace, char** out);
/* Controller holds and estimator warnings, one per line. */
VSHP_API vshp_status vshp_trace_diagnostics(const vshp_trace* trace, char** out);
VSHP_API void vshp_trace_destroy(vshp_trace* trace);

/* Model access */
VSHP_API vshp_status vshp_plant_deriv(const vshp_config* config, const double state[6], const double inputs[3],
                                      double out[6]);
VSHP_API double vshp_reference_speed(double p_g);

#ifdef __cplusplus
}
#endif

#endif /* VSHP_VSHP_H_ */
