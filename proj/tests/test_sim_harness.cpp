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

#include <doctest.h>

#include <cmath>

#include "test_support.hpp"
#include "vshp/errors.hpp"
#include "vshp/linearization.hpp"
#include "vshp/sim_harness.hpp"
#include "vshp/summary.hpp"

using namespace vshp;

namespace {

ScenarioSpec short_scenario(double duration = 6.0) {
  ScenarioSpec s = builtin_scenario("scenario1");
  s.duration = duration;
  return s;
}

}  // namespace

TEST_CASE("RK4 on x' = -x") {
  Eigen::Matrix<double, 1, 1> x;
  x << 1.0;
  for (int k = 0; k < 100; ++k) x = rk4_step([](const auto& v) { return decltype(x)(-v); }, x, 0.01);
  CHECK(std::abs(x[0] - std::exp(-1.0)) <= 1e-9);
}

TEST_CASE("integrator keeps an equilibrium") {
  const Config c = test::calibrated();
  const StationaryPoint sp = solve_stationary(-0.8, 0.8, c.plant);
  PlantState s = PlantState::from_vector(sp.x_s);
  const ControlInputs u = ControlInputs::from_vector(sp.u_s);
  for (int k = 0; k < 100; ++k) {
    const PlantState next = integrate_step(s, u, c.plant, 0.01);
    CHECK((next.vector() - s.vector()).lpNorm<Eigen::Infinity>() <= 1e-12);
    s = next;
  }
}

TEST_CASE("step halving converges at fourth order") {
  const Config c = test::calibrated();
  const StationaryPoint sp = solve_stationary(-0.8, 0.8, c.plant);
  ControlInputs u = ControlInputs::from_vector(sp.u_s);
  u.g_star -= 0.05;
  u.p_pb += 0.05;
  auto run = [&](double dt) {
    PlantState s = PlantState::from_vector(sp.x_s);
    const int n = static_cast<int>(std::lround(60.0 / dt));
    for (int k = 0; k < n; ++k) s = integrate_step(s, u, c.plant, dt);
    return s.vector();
  };
  CHECK((run(0.01) - run(0.005)).lpNorm<Eigen::Infinity>() <= 1e-6);
}

TEST_CASE("integrator reports leaving the model domain") {
  const Config c = test::calibrated();
  PlantState s = PlantState::from_vector(solve_stationary(-0.8, 0.8, c.plant).x_s);
  s.omega = std::nan("");
  ControlInputs u;
  u.g_star = s.g;
  CHECK_THROWS_AS(integrate_step(s, u, c.plant, 0.01), Error);
  CHECK_THROWS_AS(integrate_step(PlantState{}, u, c.plant, 0.01), DomainError);
}

TEST_CASE("PID governor") {
  PidConfig cfg;
  PidGovernorState s = make_pid_governor(cfg, 0.8, 1.0);
  auto [g, next] = pid_governor_step(s, 1.0, 0.01);
  CHECK(g == 0.8);

  // Rate limit is symmetric.
  auto [g_up, s_up] = pid_governor_step(s, 0.5, 0.01);
  CHECK(g_up == doctest::Approx(0.8 + 0.2 * 0.01).epsilon(1e-14));
  auto [g_dn, s_dn] = pid_governor_step(s, 1.5, 0.01);
  CHECK(g_dn == doctest::Approx(0.8 - 0.2 * 0.01).epsilon(1e-14));
  CHECK(s_up.integral == s.integral);  // frozen while saturated

  // Windup comparison: hold a large error, then release it.
  auto overshoot = [&](bool anti_windup, double hold) {
    PidConfig pc = cfg;
    pc.anti_windup = anti_windup;
    PidGovernorState st = make_pid_governor(pc, 0.5, 1.0);
    for (double t = 0.0; t < hold; t += 0.01) st = pid_governor_step(st, 0.7, 0.01).second;
    double peak = 0.0;
    for (double t = 0.0; t < 20.0; t += 0.01) {
      st = pid_governor_step(st, 1.0, 0.01).second;
      peak = std::max(peak, st.g_star);
    }
    return peak;
  };
  CHECK(overshoot(true, 20.0) == doctest::Approx(overshoot(true, 5.0)).epsilon(1e-12));
  CHECK(overshoot(false, 20.0) > overshoot(false, 5.0));
  CHECK_THROWS_AS(pid_governor_step(s, 1.0, 0.0), ConfigError);
}

TEST_CASE("scenario specs") {
  for (const std::string& name : builtin_scenario_names()) {
    const ScenarioSpec s = builtin_scenario(name);
    CHECK(s.name == name);
    validate_scenario(s);
    const ScenarioSpec back = scenario_from_json_text(scenario_to_json_text(s));
    CHECK(scenario_to_json_text(back) == scenario_to_json_text(s));
  }
  CHECK_THROWS_AS(builtin_scenario("scenario4"), UnknownScenarioError);

  const ScenarioSpec gl = generator_loss_scenario(ControllerKind::kPid);
  REQUIRE(gl.events.size() == 2);
  CHECK(gl.events[0].time == 0.0);
  CHECK(gl.events[1].time == 0.0);
  CHECK(gl.controller == ControllerKind::kPid);

  ScenarioSpec bad = short_scenario();
  bad.mpc_dt = 0.015;
  CHECK_THROWS_AS(validate_scenario(bad), ConfigError);
  bad = short_scenario();
  std::swap(bad.events[0], bad.events[1]);
  CHECK_THROWS_AS(validate_scenario(bad), ConfigError);
  bad = short_scenario();
  bad.events[0].field = "d_m";
  CHECK_THROWS_AS(validate_scenario(bad), ConfigError);
  CHECK_THROWS_AS(scenario_from_json_text("{\"duration\": 10, \"bogus\": 1}"), ConfigError);
  CHECK_THROWS_AS(scenario_from_json_text("{\"duration\": "), ParseError);
}

TEST_CASE("short closed-loop run") {
  const Config c = test::calibrated();
  const ScenarioSpec spec = short_scenario();
  const SimTrace a = run_scenario(spec, c);
  REQUIRE_FALSE(a.aborted);
  CHECK(a.columns() == trace_columns());
  CHECK(a.rows() == static_cast<std::size_t>(spec.duration / (spec.sim_dt * spec.log_every)) + 1);

  const auto t = a.column("time_s");
  for (std::size_t i = 1; i < t.size(); ++i) {
    CHECK(t[i] - t[i - 1] == doctest::Approx(spec.sim_dt * spec.log_every).epsilon(1e-9));
  }
  for (std::size_t r = 0; r < a.rows(); ++r) {
    for (std::size_t col = 0; col < a.columns().size(); ++col) CHECK(std::isfinite(a.at(r, col)));
  }

  const auto g_star = a.column("g_star");
  const auto p_g = a.column("p_g");
  const auto step = a.column("controller_step");
  double prev = g_star[0];
  for (std::size_t i = 0; i < g_star.size(); ++i) {
    CHECK(g_star[i] >= 0.1);
    CHECK(g_star[i] <= 1.3);
    CHECK(p_g[i] >= 0.0);
    CHECK(p_g[i] <= 1.0);
    if (step[i] == 1.0) {
      CHECK(std::abs(g_star[i] - prev) <= 0.04 + 1e-9);
      prev = g_star[i];
    }
  }

  // Determinism.
  const SimTrace b = run_scenario(spec, c);
  CHECK(a.to_csv() == b.to_csv());

  const RunSummary s = summarize(a);
  CHECK(s.rows == a.rows());
  // One decision at the start of every controller period; none at the final instant.
  CHECK(s.qp_solves == std::lround(spec.duration / spec.mpc_dt));
  CHECK(s.qp_failures == 0);
  CHECK(s.max_kkt_residual <= 1e-8);
}

TEST_CASE("overrides reach the plant") {
  const Config c = test::calibrated();
  ScenarioSpec spec = short_scenario(2.0);
  spec.overrides.emplace_back("vsg.k_vsg_p", "25");
  const SimTrace tr = run_scenario(spec, c);
  double peak = 0.0;
  for (double v : tr.column("delta_f")) peak = std::max(peak, std::abs(v));
  // Droop 4 % lets the frequency run well past the 1 % droop plateau.
  CHECK(peak > 0.006);

  spec.overrides.emplace_back("vsg.nonsense", "1");
  CHECK_THROWS_AS(run_scenario(spec, c), ConfigError);
}

TEST_CASE("summary metrics on a hand-made trace") {
  SimTrace tr(trace_columns());
  std::vector<double> row(trace_columns().size(), 0.0);
  const auto idx = [&](const char* n) { return tr.column_index(n); };
  for (int i = 0; i < 3; ++i) {
    std::fill(row.begin(), row.end(), 0.0);
    row[idx("time_s")] = i;
    row[idx("delta_f")] = i == 1 ? -0.003 : 0.001;
    row[idx("omega")] = 1.0;
    row[idx("omega_ref")] = i == 2 ? 0.9 : 1.0;
    row[idx("h_st")] = 1.0 + 0.01 * i;
    row[idx("controller_step")] = i == 1 ? 0.0 : 1.0;
    row[idx("qp_status")] = i == 2 ? 1.0 : 0.0;
    row[idx("kkt_residual")] = i == 2 ? 1.0 : 1e-12;
    row[idx("slack_h_st")] = 0.002 * i;
    tr.append(row);
  }
  const RunSummary s = summarize(tr);
  CHECK(s.peak_abs_delta_f == 0.003);
  CHECK(s.steady_abs_delta_f == 0.001);
  CHECK(s.peak_abs_speed_error == doctest::Approx(0.1));
  CHECK(s.max_h_st == 1.02);
  CHECK(s.min_h_st == 1.0);
  CHECK(s.max_slack[kSurgeHead] == 0.004);
  CHECK(s.qp_solves == 2);
  CHECK(s.qp_failures == 1);
  CHECK(s.max_kkt_residual == 1e-12);
  CHECK_THROWS(tr.append({1.0}));
}
