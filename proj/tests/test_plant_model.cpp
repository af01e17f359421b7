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
#include "vshp/plant_model.hpp"
#include "vshp/sim_harness.hpp"

using namespace vshp;

TEST_CASE("governor servo") {
  WaterwayParams w;
  CHECK(governor_deriv(0.8, 0.8, w) == 0.0);
  CHECK(governor_deriv(0.8, 0.9, w) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(governor_deriv(1.0, 0.96, w) == doctest::Approx(-0.2).epsilon(1e-12));
}

TEST_CASE("waterway") {
  WaterwayParams w;
  PlantState s;
  s.q = s.q_hr = 0.7;
  s.h_st = 0.93;
  CHECK(waterway_deriv(s, w).h_st_dot == 0.0);

  for (double f0 : {0.0, 0.01, 0.3}) {
    w.f_0 = f0;
    s.q = s.q_hr = 1.0;
    s.h_st = 1.0 - w.f_p2;
    CHECK(waterway_deriv(s, w).q_hr_dot == doctest::Approx(0.0).scale(1.0));
  }

  w = WaterwayParams{};
  s.h_st = 1.0;
  CHECK(waterway_deriv(s, w).h == doctest::Approx(0.98).epsilon(1e-14));

  // Any flow with q_hr = q and the friction-balanced surge head is at rest.
  for (double q : {0.2, 0.55, 1.2}) {
    s.q = s.q_hr = q;
    s.h_st = 1.0 - w.f_p2 * q * q;
    const WaterwayRates r = waterway_deriv(s, w);
    CHECK(std::abs(r.h_st_dot) < 1e-15);
    CHECK(std::abs(r.q_hr_dot) < 1e-15);
  }
}

TEST_CASE("turbine") {
  const Config c = test::calibrated();
  const TurbineParams& t = c.plant.turbine;
  PlantState s = rated_state(c.plant);

  s.g = 1.0 / t.q_r_over_q_rt;
  CHECK(turbine_outputs(s, t, 1.0, 1.0).outputs.alpha_1 == doctest::Approx(t.alpha_1r).epsilon(1e-14));

  s.g = 0.7;
  s.q = 0.63;
  s.omega = 1.0;
  const double h = (s.q / s.g) * (s.q / s.g) / t.h_r_over_h_rt;
  CHECK(std::abs(turbine_outputs(s, t, 1.0, h).q_dot) < 1e-15);

  // Rated point against an independent transcription of the Euler equation.
  s = rated_state(c.plant);
  const double h_rated = waterway_deriv(s, c.plant.waterway).h;
  const double a1 = std::asin(t.q_r_over_q_rt * std::sin(t.alpha_1r));
  const double p_m = t.q_r_over_q_rt / t.h_r_over_h_rt *
                     (t.xi * (std::tan(t.alpha_1r) * std::sin(a1) + std::cos(a1)) - t.psi) / h_rated;
  CHECK(p_m == doctest::Approx(1.0).epsilon(1e-9));
  const TurbineResult r = turbine_outputs(s, t, c.plant.waterway.t_w1, h_rated);
  CHECK(r.outputs.p_m == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(std::abs(r.q_dot) < 1e-9);

  SUBCASE("domain errors") {
    s.g = 1.2;
    TurbineParams wide = t;
    wide.alpha_1r = 1.4;
    CHECK_THROWS_AS(turbine_outputs(s, wide, 1.0, 1.0), DomainError);
    s.g = 1.0;
    CHECK_THROWS_AS(turbine_outputs(s, t, 1.0, 0.0), DomainError);
    CHECK_THROWS_AS(turbine_outputs(s, t, 1.0, -0.1), DomainError);
  }
}

TEST_CASE("alpha_1 increases with the opening") {
  const TurbineParams t = test::calibrated().plant.turbine;
  PlantState s;
  s.q = 0.5;
  double prev = -1.0;
  for (double g = 0.1; g <= 1.3 + 1e-12; g += 0.01) {
    s.g = g;
    const double a = turbine_outputs(s, t, 1.0, 1.0).outputs.alpha_1;
    CHECK(a > prev);
    prev = a;
  }
}

TEST_CASE("generator swing") {
  GeneratorParams gp;
  CHECK(generator_speed_deriv(0.7, 0.7, gp.omega_ref, gp) == 0.0);
  CHECK(generator_speed_deriv(0.86, 0.8, 1.0, gp) == doctest::Approx(0.01).epsilon(1e-12));
  CHECK(generator_speed_deriv(0.86, 0.8, 1.2, gp) == doctest::Approx(0.06 / 7.2).epsilon(1e-12));
  CHECK_THROWS_AS(generator_speed_deriv(0.8, 0.8, 0.0, gp), DomainError);
}

TEST_CASE("vsg power") {
  VsgParams v;
  CHECK(vsg_power(0.0, 0.0, 0.8, v) == 0.8);
  v.k_vsg_d = 0.0;
  CHECK(vsg_power(-0.004, 0.0, 0.8, v) == doctest::Approx(0.4).epsilon(1e-12));
  CHECK(vsg_power(-0.02, 0.0, 0.8, v) == 0.0);

  // Monotone in both arguments within the clamp band.
  v = VsgParams{};
  double prev = -1.0;
  for (double df = -0.02; df <= 0.02; df += 1e-4) {
    const double p = vsg_power(df, 0.0, 0.5, v);
    CHECK(p >= prev);
    prev = p;
  }
  prev = -1.0;
  for (double ps = -0.5; ps <= 1.5; ps += 0.01) {
    const double p = vsg_power(0.001, 0.0, ps, v);
    CHECK(p >= prev);
    prev = p;
  }
}

TEST_CASE("grid swing") {
  GridParams g;
  g.d_m = 0.0;
  CHECK(grid_freq_deriv(0.5, -0.5, 0.0, g) == 0.0);
  CHECK(grid_freq_deriv(0.8, -0.4, 0.0, g) == doctest::Approx(0.4 / 50.7).epsilon(1e-12));
  CHECK(grid_freq_deriv(0.0, -0.4, 0.0, g) == doctest::Approx(-0.4 / 50.7).epsilon(1e-12));
}

TEST_CASE("plant_deriv at and around a stationary point") {
  Config c = test::calibrated();
  const StationaryPoint sp = solve_stationary(-0.8, 0.8, c.plant);
  const PlantState s = PlantState::from_vector(sp.x_s);
  ControlInputs u = ControlInputs::from_vector(sp.u_s);
  CHECK(plant_deriv(s, u, c.plant).lpNorm<Eigen::Infinity>() <= 1e-10);

  u.p_pb += 0.01;
  // The virtual inertia shares the first instant of the imbalance with the grid.
  const double expected = 0.01 / (2.0 * c.plant.grid.h_grid + c.plant.vsg.k_vsg_d);
  StateVector d = plant_deriv(s, u, c.plant);
  CHECK(d[kDeltaF] == doctest::Approx(expected).epsilon(1e-10));
  CHECK(std::abs(d[kFlow]) < 1e-10);

  c.plant.vsg.k_vsg_d = 0.0;
  d = plant_deriv(s, u, c.plant);
  CHECK(d[kDeltaF] == doctest::Approx(0.01 / (2.0 * 25.35)).epsilon(1e-10));
  CHECK(std::abs(d[kSpeed]) < 1e-10);  // without the ROCOF term P_g is unchanged at t = 0+
}

TEST_CASE("calibration") {
  PlantParams raw;
  const PlantParams cal = calibrate_rated_point(raw);
  CHECK(cal.turbine.xi > 0.0);
  CHECK(cal.turbine.psi > 0.0);
  const PlantParams again = calibrate_rated_point(cal);
  CHECK(again.turbine.xi == cal.turbine.xi);
  CHECK(again.turbine.psi == cal.turbine.psi);
  CHECK(again.turbine.h_r_over_h_rt == cal.turbine.h_r_over_h_rt);

  // Inlet angle past 90 degrees would need a negative velocity coefficient.
  raw.turbine.alpha_1r = 2.0;
  raw.turbine.q_r_over_q_rt = 0.5;
  CHECK_THROWS_AS(calibrate_rated_point(raw), ConfigError);
}

TEST_CASE("property: stationarity over the operating envelope") {
  const Config c = test::calibrated();
  auto rng = test::rng(1);
  std::uniform_real_distribution<double> p(0.2, 0.95), ref(0.2, 1.0);
  for (int i = 0; i < 25; ++i) {
    const double p_g_star = ref(rng);
    const double p_pb = -p(rng);
    const StationaryPoint sp = solve_stationary(p_pb, p_g_star, c.plant);
    CHECK(plant_deriv(PlantState::from_vector(sp.x_s), ControlInputs::from_vector(sp.u_s), c.plant)
              .lpNorm<Eigen::Infinity>() <= 1e-8);
  }
}

TEST_CASE("property: speed falls while the load exceeds the turbine power") {
  const Config c = test::calibrated();
  PlantParams p = c.plant;
  p.generator.d_gen = 0.0;
  auto rng = test::rng(2);
  std::uniform_real_distribution<double> pm(0.0, 1.0), extra(1e-3, 0.5), om(0.5, 1.5);
  for (int i = 0; i < 200; ++i) {
    const double m = pm(rng);
    CHECK(generator_speed_deriv(m, m + extra(rng), om(rng), p.generator) < 0.0);
  }
}

TEST_CASE("property: surge tank mass balance") {
  const Config c = test::calibrated();
  const PlantParams& p = c.plant;
  StationaryPoint sp = solve_stationary(-0.8, 0.8, p);
  PlantState s = PlantState::from_vector(sp.x_s);
  ControlInputs u = ControlInputs::from_vector(sp.u_s);
  u.g_star = 0.7;  // closes the gate and sets the surge tank swinging
  const double dt = 0.01;
  const double h0 = s.h_st;
  double integral = 0.0;
  for (int k = 0; k < 500; ++k) {
    // Same RK4 stages on the flow mismatch as the integrator uses on h_st.
    auto mismatch = [&](const PlantState& x) { return (x.q_hr - x.q) / p.waterway.c_s; };
    const StateVector x = s.vector();
    const auto f = [&](const StateVector& v) {
      return plant_deriv(PlantState::from_vector(v), u, p);
    };
    const StateVector k1 = f(x), k2 = f(x + 0.5 * dt * k1), k3 = f(x + 0.5 * dt * k2);
    integral += dt / 6.0 *
                (mismatch(PlantState::from_vector(x)) + 2.0 * mismatch(PlantState::from_vector(x + 0.5 * dt * k1)) +
                 2.0 * mismatch(PlantState::from_vector(x + 0.5 * dt * k2)) +
                 mismatch(PlantState::from_vector(x + dt * k3)));
    s = integrate_step(s, u, p, dt);
  }
  CHECK(std::abs(s.h_st - h0) > 1e-4);
  CHECK(s.h_st - h0 == doctest::Approx(integral).epsilon(1e-12).scale(1.0));
}
