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

#include "vshp/config.hpp"

#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>

#include "vshp/errors.hpp"

namespace vshp {

using nlohmann::json;

namespace {

// Field visitors: one place that names every serialized member.

template <class F>
void visit(WaterwayParams& p, F&& f) {
  f("t_g", p.t_g);
  f("c_s", p.c_s);
  f("t_w1", p.t_w1);
  f("t_w2", p.t_w2);
  f("f_0", p.f_0);
  f("f_p1", p.f_p1);
  f("f_p2", p.f_p2);
}

template <class F>
void visit(TurbineParams& p, F&& f) {
  f("h_r_over_h_rt", p.h_r_over_h_rt);
  f("q_r_over_q_rt", p.q_r_over_q_rt);
  f("alpha_1r", p.alpha_1r);
  f("xi", p.xi);
  f("psi", p.psi);
  f("sigma", p.sigma);
}

template <class F>
void visit(GeneratorParams& p, F&& f) {
  f("h_gen", p.h_gen);
  f("d_gen", p.d_gen);
  f("omega_ref", p.omega_ref);
}

template <class F>
void visit(VsgParams& p, F&& f) {
  f("k_vsg_p", p.k_vsg_p);
  f("k_vsg_d", p.k_vsg_d);
  f("f_star", p.f_star);
  f("p_g_min", p.p_g_min);
  f("p_g_max", p.p_g_max);
}

template <class F>
void visit(GridParams& p, F&& f) {
  f("h_grid", p.h_grid);
  f("s_n", p.s_n);
  f("d_m", p.d_m);
  f("omega_s", p.omega_s);
  f("omega_f", p.omega_f);
  f("omega_fdot", p.omega_fdot);
}

template <class F>
void visit(MpcConfig& c, F&& f) {
  f("n_steps", c.n_steps);
  f("dt", c.dt);
  f("block_sizes", c.block_sizes);
  f("q_diag", c.q_diag);
  f("q_delta_diag", c.q_delta_diag);
  f("r_diag", c.r_diag);
  f("r_delta_diag", c.r_delta_diag);
  f("d_x", c.d_x);
  f("d_u", c.d_u);
  f("rho", c.rho);
  f("s_diag", c.s_diag);
  f("x_low", c.x_low);
  f("x_high", c.x_high);
  f("dx_high", c.dx_high);
  f("u_low", c.u_low);
  f("u_high", c.u_high);
  f("du_high", c.du_high);
  f("p_g_ref", c.p_g_ref);
  f("qp_max_iterations", c.qp_max_iterations);
}

template <class F>
void visit(EstimatorConfig& c, F&& f) {
  f("q_noise_diag", c.q_noise_diag);
  f("r_noise_diag", c.r_noise_diag);
}

template <class F>
void visit(PidConfig& c, F&& f) {
  f("kp", c.kp);
  f("ki", c.ki);
  f("kd", c.kd);
  f("rate_limit", c.rate_limit);
  f("g_min", c.g_min);
  f("g_max", c.g_max);
  f("anti_windup", c.anti_windup);
}

template <class F>
void visit_groups(Config& c, F&& f) {
  f("waterway", c.plant.waterway);
  f("turbine", c.plant.turbine);
  f("generator", c.plant.generator);
  f("vsg", c.plant.vsg);
  f("grid", c.plant.grid);
  f("mpc", c.mpc);
  f("estimator", c.estimator);
  f("pid", c.pid);
}

template <class Group>
json group_to_json(const Group& g) {
  Group copy = g;
  json j = json::object();
  visit(copy, [&](const char* name, auto& value) { j[name] = value; });
  return j;
}

template <class T>
void read_value(const json& j, T& out, const std::string& where) {
  try {
    out = j.get<T>();
  } catch (const json::exception& e) {
    throw ConfigError("field '" + where + "': " + e.what());
  }
}

template <class T, std::size_t N>
void read_value(const json& j, std::array<T, N>& out, const std::string& where) {
  if (!j.is_array() || j.size() != N) {
    throw ConfigError("field '" + where + "': expected an array of " + std::to_string(N) +
                      " numbers");
  }
  for (std::size_t i = 0; i < N; ++i) read_value(j[i], out[i], where + "." + std::to_string(i));
}

template <class Group>
void group_from_json(const json& j, Group& g, const std::string& group_name) {
  if (!j.is_object()) throw ConfigError("group '" + group_name + "' must be an object");
  std::set<std::string> known;
  visit(g, [&](const char* name, auto& value) {
    known.insert(name);
    if (auto it = j.find(name); it != j.end()) {
      read_value(*it, value, group_name + "." + name);
    }
  });
  std::vector<std::string> unknown;
  for (const auto& item : j.items()) {
    if (!known.count(item.key())) unknown.push_back(group_name + "." + item.key());
  }
  if (!unknown.empty()) {
    std::string msg = "unknown configuration fields:";
    for (const auto& u : unknown) msg += " " + u;
    throw ConfigError(msg);
  }
}

json config_to_json(const Config& config) {
  Config copy = config;
  json j = json::object();
  visit_groups(copy, [&](const char* name, auto& group) { j[name] = group_to_json(group); });
  return j;
}

Config config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("configuration document must be a JSON object");
  Config c;
  std::set<std::string> known;
  visit_groups(c, [&](const char* name, auto& group) {
    known.insert(name);
    if (auto it = j.find(name); it != j.end()) group_from_json(*it, group, name);
  });
  for (const auto& item : j.items()) {
    if (!known.count(item.key())) throw ConfigError("unknown configuration group '" + item.key() + "'");
  }
  return c;
}

std::string fmt(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

}  // namespace

bool ValidationReport::passed() const {
  for (const auto& g : groups) {
    if (!g.passed) return false;
  }
  return true;
}

std::string ValidationReport::to_string() const {
  std::ostringstream os;
  for (const auto& g : groups) {
    os << (g.passed ? "PASS " : "FAIL ") << g.name << "\n";
    for (const auto& m : g.messages) os << "  - " << m << "\n";
  }
  return os.str();
}

Config default_config() { return prepare_config(Config{}); }

Config config_from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("parse error: ") + e.what());
  }
  return config_from_json(j);
}

std::string config_to_json_text(const Config& config) { return config_to_json(config).dump(2); }

Config load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open configuration file '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();
  try {
    return config_from_json(json::parse(text));
  } catch (const json::parse_error& e) {
    // Translate the byte offset into line:column.
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ParseError(path + ":" + std::to_string(line) + ":" + std::to_string(col) +
                      ": parse error: " + e.what());
  }
}

void apply_override(Config& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("override '" + assignment + "' must have the form group.field=value");
  }
  apply_override(config, assignment.substr(0, eq), assignment.substr(eq + 1));
}

void apply_override(Config& config, const std::string& key, const std::string& value) {
  json doc = config_to_json(config);
  std::vector<std::string> parts;
  {
    std::stringstream ss(key);
    std::string part;
    while (std::getline(ss, part, '.')) parts.push_back(part);
  }
  if (parts.size() < 2) throw ConfigError("override key '" + key + "' must be group.field");
  json* node = &doc;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const std::string& p = parts[i];
    if (node->is_array()) {
      std::size_t idx = 0;
      try {
        idx = std::stoul(p);
      } catch (const std::exception&) {
        throw ConfigError("override key '" + key + "': '" + p + "' is not an array index");
      }
      if (idx >= node->size()) throw ConfigError("override key '" + key + "': index out of range");
      node = &(*node)[idx];
    } else if (node->is_object()) {
      if (!node->contains(p)) throw ConfigError("override key '" + key + "': unknown field '" + p + "'");
      node = &(*node)[p];
    } else {
      throw ConfigError("override key '" + key + "' descends into a scalar");
    }
  }
  json parsed;
  try {
    parsed = json::parse(value);
  } catch (const json::parse_error&) {
    parsed = value;
  }
  *node = parsed;
  config = config_from_json(doc);
}

void check_block_sizes(int n_steps, const std::vector<int>& block_sizes) {
  if (block_sizes.empty()) throw ConfigError("move blocking: block_sizes must not be empty");
  for (int b : block_sizes) {
    if (b <= 0) throw ConfigError("move blocking: block sizes must be positive");
  }
  const long sum = std::accumulate(block_sizes.begin(), block_sizes.end(), 0L);
  if (sum != n_steps) {
    throw ConfigError("move blocking: block_sizes sum to " + std::to_string(sum) +
                      " but the horizon has " + std::to_string(n_steps) + " steps");
  }
}

ValidationReport validate_config(const Config& c) {
  ValidationReport report;
  auto group = [&](const std::string& name) -> ValidationGroup& {
    report.groups.push_back(ValidationGroup{name, true, {}});
    return report.groups.back();
  };
  auto require = [](ValidationGroup& g, bool ok, const std::string& msg) {
    if (!ok) {
      g.passed = false;
      g.messages.push_back(msg);
    }
  };
  auto finite_positive = [](double v) { return std::isfinite(v) && v > 0.0; };
  auto finite_nonneg = [](double v) { return std::isfinite(v) && v >= 0.0; };

  {
    auto& g = group("waterway");
    const auto& w = c.plant.waterway;
    require(g, finite_positive(w.t_g), "t_g must be positive (got " + fmt(w.t_g) + ")");
    require(g, finite_positive(w.c_s), "c_s must be positive (got " + fmt(w.c_s) + ")");
    require(g, finite_positive(w.t_w1), "t_w1 must be positive (got " + fmt(w.t_w1) + ")");
    require(g, finite_positive(w.t_w2), "t_w2 must be positive (got " + fmt(w.t_w2) + ")");
    require(g, finite_nonneg(w.f_0), "f_0 must be >= 0 (got " + fmt(w.f_0) + ")");
    require(g, finite_nonneg(w.f_p1), "f_p1 must be >= 0 (got " + fmt(w.f_p1) + ")");
    require(g, finite_nonneg(w.f_p2), "f_p2 must be >= 0 (got " + fmt(w.f_p2) + ")");
  }
  {
    auto& g = group("turbine");
    const auto& t = c.plant.turbine;
    require(g, finite_positive(t.h_r_over_h_rt), "h_r_over_h_rt must be positive");
    require(g, finite_positive(t.q_r_over_q_rt), "q_r_over_q_rt must be positive");
    require(g, std::isfinite(t.sigma), "sigma must be finite");
    // Arcsine domain over every admissible opening.
    const double g_hi = std::max({c.mpc.u_high[kGateRef], c.pid.g_max, 1.0});
    const double arg = t.q_r_over_q_rt * g_hi * std::sin(t.alpha_1r);
    require(g, std::isfinite(arg) && std::abs(arg) <= 1.0,
            "q_r_over_q_rt * g * sin(alpha_1r) = " + fmt(arg) + " at g = " + fmt(g_hi) +
                " leaves the arcsine domain [-1, 1]");
    if (g.passed) {
      try {
        (void)calibrate_rated_point(c.plant);
      } catch (const Error& e) {
        require(g, false, e.what());
      }
    }
  }
  {
    auto& g = group("generator");
    require(g, finite_positive(c.plant.generator.h_gen), "h_gen must be positive");
    require(g, std::isfinite(c.plant.generator.d_gen), "d_gen must be finite");
    require(g, finite_positive(c.plant.generator.omega_ref), "omega_ref must be positive");
  }
  {
    auto& g = group("vsg");
    const auto& v = c.plant.vsg;
    require(g, finite_nonneg(v.k_vsg_p), "k_vsg_p must be >= 0 (got " + fmt(v.k_vsg_p) + ")");
    require(g, finite_nonneg(v.k_vsg_d), "k_vsg_d must be >= 0 (got " + fmt(v.k_vsg_d) + ")");
    require(g, std::isfinite(v.f_star), "f_star must be finite");
    require(g, v.p_g_min < v.p_g_max, "p_g_min must be below p_g_max");
  }
  {
    auto& g = group("grid");
    const auto& gr = c.plant.grid;
    require(g, finite_positive(gr.h_grid), "h_grid must be positive");
    require(g, finite_positive(gr.s_n), "s_n must be positive");
    require(g, finite_nonneg(gr.d_m), "d_m must be >= 0");
    require(g, finite_positive(gr.omega_s), "omega_s must be positive");
    require(g, finite_positive(gr.omega_f), "omega_f (frequency filter corner) must be positive");
    require(g, finite_positive(gr.omega_fdot), "omega_fdot (ROCOF filter corner) must be positive");
  }
  {
    auto& g = group("mpc");
    const auto& m = c.mpc;
    require(g, m.n_steps > 0, "n_steps must be positive");
    require(g, finite_positive(m.dt), "dt must be positive");
    try {
      check_block_sizes(m.n_steps, m.block_sizes);
    } catch (const ConfigError& e) {
      require(g, false, e.what());
    }
    auto psd = [&](const char* name, const auto& diag) {
      for (std::size_t i = 0; i < diag.size(); ++i) {
        require(g, finite_nonneg(diag[i]),
                std::string(name) + "[" + std::to_string(i) + "] = " + fmt(diag[i]) +
                    ": cost diagonals must be nonnegative (cost matrices must be positive "
                    "semidefinite)");
      }
    };
    psd("q_diag", m.q_diag);
    psd("q_delta_diag", m.q_delta_diag);
    psd("r_diag", m.r_diag);
    psd("r_delta_diag", m.r_delta_diag);
    psd("s_diag", m.s_diag);
    for (std::size_t i = 0; i < m.rho.size(); ++i) {
      require(g, finite_nonneg(m.rho[i]), "rho[" + std::to_string(i) + "] must be >= 0");
    }
    for (int i = 0; i < kNumStates; ++i) {
      require(g, m.x_low[i] <= m.x_high[i],
              "x_low[" + std::to_string(i) + "] must not exceed x_high[" + std::to_string(i) + "]");
      require(g, m.dx_high[i] >= 0.0, "dx_high[" + std::to_string(i) + "] must be >= 0");
    }
    for (int i = 0; i < kNumInputs; ++i) {
      require(g, m.u_low[i] <= m.u_high[i],
              "u_low[" + std::to_string(i) + "] must not exceed u_high[" + std::to_string(i) + "]");
      require(g, m.du_high[i] >= 0.0, "du_high[" + std::to_string(i) + "] must be >= 0");
    }
    require(g, m.u_low[kGateRef] > 0.0, "guide vane reference lower bound must be positive");
    require(g, std::isfinite(m.p_g_ref), "p_g_ref must be finite");
    require(g, m.qp_max_iterations > 0, "qp_max_iterations must be positive");
  }
  {
    auto& g = group("estimator");
    for (std::size_t i = 0; i < 4; ++i) {
      require(g, finite_nonneg(c.estimator.q_noise_diag[i]),
              "q_noise_diag[" + std::to_string(i) + "] must be >= 0 (process covariance PSD)");
      require(g, finite_positive(c.estimator.r_noise_diag[i]),
              "r_noise_diag[" + std::to_string(i) + "] must be > 0 (measurement covariance PD)");
    }
  }
  {
    auto& g = group("pid");
    const auto& p = c.pid;
    require(g, std::isfinite(p.kp) && std::isfinite(p.ki) && std::isfinite(p.kd),
            "gains must be finite");
    require(g, finite_positive(p.rate_limit), "rate_limit must be positive");
    require(g, p.g_min > 0.0 && p.g_min < p.g_max, "need 0 < g_min < g_max");
  }
  return report;
}

Config prepare_config(const Config& config) {
  const ValidationReport report = validate_config(config);
  if (!report.passed()) {
    std::string msg = "invalid configuration:";
    for (const auto& g : report.groups) {
      for (const auto& m : g.messages) msg += "\n  " + g.name + ": " + m;
    }
    throw ConfigError(msg);
  }
  Config out = config;
  out.plant = calibrate_rated_point(config.plant);
  return out;
}

}  // namespace vshp
