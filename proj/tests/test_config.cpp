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

#include <cstdio>
#include <fstream>

#include "vshp/config.hpp"
#include "vshp/errors.hpp"

using namespace vshp;

namespace {

std::string write_temp(const std::string& name, const std::string& text) {
  const std::string path = std::string(VSHP_TEST_TMP) + "/" + name;
  std::ofstream(path) << text;
  return path;
}

const ValidationGroup* find_group(const ValidationReport& r, const std::string& name) {
  for (const auto& g : r.groups)
    if (g.name == name) return &g;
  return nullptr;
}

}  // namespace

TEST_CASE("defaults validate and round-trip") {
  const Config c = default_config();
  CHECK(validate_config(c).passed());
  const Config back = config_from_json_text(config_to_json_text(c));
  CHECK(config_to_json_text(back) == config_to_json_text(c));
  CHECK(c.mpc.block_sizes.size() == 21);
  CHECK(c.mpc.s_diag[kSurgeHead] == 1e6);
  CHECK(c.plant.waterway.c_s == 50.0);
}

TEST_CASE("partial documents fill in defaults") {
  const Config c = config_from_json_text(R"({"vsg": {"k_vsg_p": 25}})");
  CHECK(c.plant.vsg.k_vsg_p == 25.0);
  CHECK(c.plant.vsg.k_vsg_d == 10.0);
  CHECK_THROWS_AS(config_from_json_text(R"({"vsg": {"k_vsg_q": 25}})"), ConfigError);
  CHECK_THROWS_AS(config_from_json_text(R"({"nope": {}})"), ConfigError);
}

TEST_CASE("overrides") {
  Config c = default_config();
  apply_override(c, "vsg.k_vsg_p=25");
  CHECK(c.plant.vsg.k_vsg_p == 25.0);
  apply_override(c, "mpc.x_low.5=0.85");
  CHECK(c.mpc.x_low[kSpeed] == 0.85);
  apply_override(c, "mpc.block_sizes", "[41]");
  CHECK(c.mpc.block_sizes == std::vector<int>{41});
  CHECK_THROWS_AS(apply_override(c, "vsg.k_vsg_p"), ConfigError);
  CHECK_THROWS_AS(apply_override(c, "vsg.unknown=1"), ConfigError);
  CHECK_THROWS_AS(apply_override(c, "mpc.x_low.9=1"), ConfigError);
}

TEST_CASE("validation names the offending group and field") {
  Config c = default_config();
  c.plant.waterway.c_s = -1.0;
  c.mpc.block_sizes = {2, 2};
  const ValidationReport r = validate_config(c);
  CHECK_FALSE(r.passed());
  const ValidationGroup* w = find_group(r, "waterway");
  REQUIRE(w != nullptr);
  CHECK_FALSE(w->passed);
  REQUIRE_FALSE(w->messages.empty());
  CHECK(w->messages[0].find("c_s") != std::string::npos);
  CHECK_FALSE(find_group(r, "mpc")->passed);
  CHECK(find_group(r, "grid")->passed);
  CHECK(r.to_string().find("FAIL waterway") != std::string::npos);
  CHECK_THROWS_AS(prepare_config(c), ConfigError);

  Config arc = default_config();
  arc.plant.turbine.alpha_1r = 1.5;
  CHECK_FALSE(find_group(validate_config(arc), "turbine")->passed);
}

TEST_CASE("files") {
  const std::string ok = write_temp("cfg_ok.json", R"({"grid": {"h_grid": 19.0}})");
  CHECK(load_config_file(ok).plant.grid.h_grid == 19.0);

  const std::string bad = write_temp("cfg_bad.json", "{\n  \"grid\": {\n    \"h_grid\": 19.0,,\n  }\n}\n");
  try {
    load_config_file(bad);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    const std::string msg = e.what();
    CHECK(msg.find(bad + ":3:") != std::string::npos);
  }
  CHECK_THROWS_AS(load_config_file(std::string(VSHP_TEST_TMP) + "/does_not_exist.json"), ConfigError);
  CHECK_THROWS_AS(config_from_json_text("{"), ParseError);
}
