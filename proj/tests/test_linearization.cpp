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

#include "oracles.hpp"
#include "test_support.hpp"
#include "vshp/errors.hpp"
#include "vshp/linearization.hpp"
#include "vshp/reference_speed.hpp"

using namespace vshp;

using namespace vshp::test;

TEST_CASE("stationary point examples") {
  const Config c = test::calibrated();
  const PlantParams& p = c.plant;

  // Balanced demand leaves no frequency deviation.
  for (double pg : {0.3, 0.6, 0.8, 1.0}) {
    const StationaryPoint sp = solve_stationary(-pg, pg, p);
    CHECK(std::abs(sp.x_s[kDeltaF]) < 1e-12);
    CHECK(sp.u_s[kGateRef] == sp.x_s[kGate]);
    CHECK(sp.x_s[kSpeed] == doctest::Approx(reference_speed(pg)).epsilon(1e-10));
    CHECK(sp.residual <= 1e-8);
  }

  // Full load: converter at 1 with the speed on the optimal-speed curve.
  const StationaryPoint full = solve_stationary(-1.0, 1.0, p);
  CHECK(full.x_s[kSpeed] == doctest::Approx(1.09).epsilon(1e-10));

  // The rated point itself is an equilibrium of the plant with g* = 1.
  ControlInputs u;
  u.p_g_star = 1.0;
  u.p_pb = -1.0;
  u.g_star = 1.0;
  CHECK(plant_deriv(rated_state(p), u, p).lpNorm<Eigen::Infinity>() <= 1e-9);

  // p_g* = 2 with a matching demand is outside the converter range.
  CHECK_THROWS_AS(solve_stationary(-2.0, 2.0, p), InfeasibleError);
}

TEST_CASE("stationary solve is idempotent") {
  const Config c = test::calibrated();
  const StationaryPoint sp = solve_stationary(-0.55, 0.7, c.plant);
  const StationaryPoint again = solve_stationary(-0.55, 0.7, c.plant, {}, sp.x_s);
  CHECK(again.iterations <= 1);
  CHECK((again.x_s - sp.x_s).lpNorm<Eigen::Infinity>() < 1e-10);
}

TEST_CASE("analytic Jacobian entries") {
  const Config c = test::calibrated();
  const PlantParams& p = c.plant;
  const LinearModel m = linearize(-0.8, 0.8, p, 0.2);
  CHECK(m.a_c(kGate, kGate) == doctest::Approx(-1.0 / p.waterway.t_g).epsilon(1e-8));
  CHECK(m.b_c(kGate, kGateRef) == doctest::Approx(1.0 / p.waterway.t_g).epsilon(1e-8));
  // With virtual inertia the converter absorbs part of every imbalance.
  CHECK(m.b_c(kDeltaF, kPowerBalance) ==
        doctest::Approx(1.0 / (2.0 * p.grid.h_grid + p.vsg.k_vsg_d)).epsilon(1e-8));
  PlantParams no_inertia = p;
  no_inertia.vsg.k_vsg_d = 0.0;
  const LinearModel m0 = linearize(-0.8, 0.8, no_inertia, 0.2);
  CHECK(m0.b_c(kDeltaF, kPowerBalance) ==
        doctest::Approx(p.grid.omega_s / (2.0 * p.grid.h_grid * p.grid.s_n)).epsilon(1e-8));
  CHECK(m.warnings.empty());
}

TEST_CASE("discretize") {
  StateMatrix a = StateMatrix::Zero();
  InputMatrix b = InputMatrix::Random();
  DiscreteModel d = discretize(a, b, 0.2);
  CHECK(d.a_t == StateMatrix::Identity());

  a(0, 0) = -1.0;
  d = discretize(a, b, 0.2);
  CHECK(d.a_t(0, 0) == 0.8);

  InputMatrix b2 = b;
  b2.col(1) *= 2.0;
  const DiscreteModel d2 = discretize(a, b2, 0.2);
  CHECK(d2.b_t.col(1) == (2.0 * d.b_t.col(1)).eval());
  CHECK_THROWS_AS(discretize(a, b, 0.0), ConfigError);
}

TEST_CASE("property: finite differences agree with Richardson") {
  const Config c = test::calibrated();
  const PlantParams& p = c.plant;
  auto rng = test::rng(3);
  std::uniform_real_distribution<double> ud(-0.003, 0.003), ug(0.3, 1.1), uq(0.3, 1.1), uh(0.85, 1.05),
      uw(0.85, 1.1), upg(0.3, 0.9);
  int checked = 0;
  while (checked < 20) {
    StateVector x;
    x << ud(rng), ug(rng), uq(rng), uq(rng), uh(rng), uw(rng);
    InputVector u;
    u << upg(rng), -upg(rng), ug(rng);
    const PlantEvaluation ev = evaluate_plant(PlantState::from_vector(x), ControlInputs::from_vector(u), p);
    // Interior points only: the stencil must not reach the converter clamp.
    if (ev.p_g_unclamped < c.plant.vsg.p_g_min + 0.1 || ev.p_g_unclamped > c.plant.vsg.p_g_max - 0.1) continue;
    const Jacobians j = jacobian(x, u, p);
    const Full r = richardson(x, u, p);
    const double scale_a = std::max(1.0, r.a.lpNorm<Eigen::Infinity>());
    const double scale_b = std::max(1.0, r.b.lpNorm<Eigen::Infinity>());
    CHECK((j.a_c - r.a).lpNorm<Eigen::Infinity>() / scale_a <= 1e-6);
    CHECK((j.b_c - r.b).lpNorm<Eigen::Infinity>() / scale_b <= 1e-6);
    CHECK(j.warnings.empty());
    ++checked;
  }
}

TEST_CASE("property: discretization is exact bitwise") {
  const Config c = test::calibrated();
  for (double dt : {0.2, 0.05, 0.013}) {
    const LinearModel m = linearize(-0.7, 0.75, c.plant, dt);
    const StateMatrix ref = m.a_c * dt + StateMatrix::Identity();
    CHECK((m.a_t.array() == ref.array()).all());
    CHECK((m.b_t.array() == (m.b_c * dt).array()).all());
  }
}

TEST_CASE("property: stationarity on a 5x5 envelope grid") {
  const Config c = test::calibrated();
  for (int i = 0; i < 5; ++i) {
    for (int j = 0; j < 5; ++j) {
      const double p_pb = -(0.2 + 0.175 * i);
      const double p_g_star = 0.2 + 0.175 * j;
      const StationaryPoint sp = solve_stationary(p_pb, p_g_star, c.plant);
      CHECK(sp.residual <= 1e-8);
    }
  }
}

TEST_CASE("clamped converter gives a one-sided stencil") {
  const Config c = test::calibrated();
  StateVector x;
  x << 0.0, 0.8, 0.8, 0.8, 0.99, 1.0;
  InputVector u;
  u << 1.0, -1.0, 0.8;  // balanced at P_g = 1: exactly on the upper converter limit
  const Jacobians j = jacobian(x, u, c.plant);
  CHECK_FALSE(j.warnings.empty());
}
