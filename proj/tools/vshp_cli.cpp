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

// vshp: run the hydropower MPC scenarios and validate configurations.
//
// Exit codes: 0 success, 1 simulation aborted, 2 usage error or unknown
// scenario, 3 configuration error, 4 output could not be written.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "vshp/vshp.h"

namespace {

enum ExitCode { kOk = 0, kAborted = 1, kUsage = 2, kConfig = 3, kOutput = 4 };

int exit_for(vshp_status s) {
  switch (s) {
    case VSHP_OK:
      return kOk;
    case VSHP_ERR_SIMULATION:
      return kAborted;
    case VSHP_ERR_UNKNOWN_SCENARIO:
    case VSHP_ERR_INVALID_ARGUMENT:
      return kUsage;
    case VSHP_ERR_CONFIG:
    case VSHP_ERR_PARSE:
      return kConfig;
    case VSHP_ERR_IO:
      return kOutput;
    default:
      return kAborted;
  }
}

int report(vshp_status s, const std::string& what) {
  std::cerr << "vshp: " << what << ": " << vshp_last_error() << "\n";
  return exit_for(s);
}

struct Handles {
  vshp_config* config = nullptr;
  vshp_scenario* scenario = nullptr;
  vshp_trace* trace = nullptr;
  ~Handles() {
    vshp_trace_destroy(trace);
    vshp_scenario_destroy(scenario);
    vshp_config_destroy(config);
  }
};

bool looks_like_file(const std::string& s) {
  return s.find('/') != std::string::npos || (s.size() > 5 && s.substr(s.size() - 5) == ".json");
}

int cmd_run(const std::string& scenario, const std::string& config_path, const std::string& out_dir,
            const std::vector<std::string>& sets) {
  Handles h;
  vshp_status s = config_path.empty() ? vshp_config_create_default(&h.config)
                                      : vshp_config_load(config_path.c_str(), &h.config);
  if (s != VSHP_OK) return report(s, "loading configuration");

  s = looks_like_file(scenario) ? vshp_scenario_load(scenario.c_str(), &h.scenario)
                                : vshp_scenario_builtin(scenario.c_str(), &h.scenario);
  if (s != VSHP_OK) return report(s, "scenario");
  for (const auto& kv : sets) {
    s = vshp_scenario_add_override(h.scenario, kv.c_str());
    if (s != VSHP_OK) return report(s, "--set " + kv);
  }

  const vshp_status run_status = vshp_run(h.scenario, h.config, &h.trace);
  if (!h.trace) return report(run_status, "run");
  const std::string abort_message = run_status == VSHP_OK ? "" : vshp_last_error();

  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) {
    std::cerr << "vshp: cannot create output directory '" << out_dir << "': " << ec.message() << "\n";
    return kOutput;
  }
  const std::string name = vshp_scenario_name(h.scenario);
  const std::filesystem::path base(out_dir);
  const std::string csv = (base / (name + ".csv")).string();
  const std::string summary_path = (base / (name + ".summary.json")).string();

  s = vshp_trace_write_csv(h.trace, csv.c_str());
  if (s != VSHP_OK) return report(s, "writing trace");
  char* summary = nullptr;
  s = vshp_trace_summary_json(h.trace, &summary);
  if (s != VSHP_OK) return report(s, "summary");
  {
    std::ofstream out(summary_path, std::ios::binary);
    out << summary;
    if (!out) {
      vshp_string_free(summary);
      std::cerr << "vshp: cannot write '" << summary_path << "'\n";
      return kOutput;
    }
  }
  std::cout << summary;
  vshp_string_free(summary);

  char* diag = nullptr;
  if (vshp_trace_diagnostics(h.trace, &diag) == VSHP_OK) {
    // Show the first few; the trace keeps the full list.
    std::string text(diag);
    std::size_t pos = 0;
    int shown = 0, total = 0;
    for (std::size_t nl; (nl = text.find('\n', pos)) != std::string::npos; pos = nl + 1, ++total) {
      if (shown < 10) {
        std::cerr << text.substr(pos, nl - pos + 1);
        ++shown;
      }
    }
    if (total > shown) std::cerr << "... " << (total - shown) << " more diagnostics\n";
    vshp_string_free(diag);
  }
  std::cerr << "wrote " << csv << " and " << summary_path << "\n";
  if (run_status != VSHP_OK) {
    std::cerr << "vshp: " << abort_message << "\n";
    return exit_for(run_status);
  }
  return kOk;
}

int cmd_validate(const std::string& path) {
  Handles h;
  vshp_status s = vshp_config_load(path.c_str(), &h.config);
  if (s != VSHP_OK) return report(s, "validate");
  int passed = 0;
  char* text = nullptr;
  s = vshp_config_validate(h.config, &passed, &text);
  if (s != VSHP_OK) return report(s, "validate");
  std::cout << text;
  vshp_string_free(text);
  return passed ? kOk : kConfig;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Variable-speed hydropower MPC simulator"};
  app.require_subcommand(1);

  std::string scenario, config_path, out_dir = ".";
  std::vector<std::string> sets;
  auto* run = app.add_subcommand("run", "Run a built-in scenario or a scenario JSON file");
  run->add_option("scenario", scenario,
                  "scenario1 | scenario2 | scenario3 | generator-loss-mpc | generator-loss-pid | path.json")
      ->required();
  run->add_option("--config", config_path, "Configuration JSON (defaults built in)");
  run->add_option("--out", out_dir, "Output directory")->capture_default_str();
  run->add_option("--set", sets, "Override group.field=value (repeatable)")->take_all();

  std::string validate_path;
  auto* validate = app.add_subcommand("validate", "Check a configuration file");
  validate->add_option("config", validate_path, "Configuration JSON")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  if (*run) return cmd_run(scenario, config_path, out_dir, sets);
  return cmd_validate(validate_path);
}
