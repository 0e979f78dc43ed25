/*
 * Copyright 2026 The dapsim Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <doctest.h>

#include "dapsim/error.hpp"
#include "dapsim/grid_model.hpp"
#include "fixtures.hpp"

using namespace dapsim;

namespace {

Grid two_sites() {
  Grid g;
  const auto a = g.add_data_center("A");
  const auto b = g.add_data_center("B");
  g.add_storage_element(a, "A_SE", 1000.0);
  g.add_storage_element(b, "B_SE", 1000.0, 500.0);
  g.add_worker_node(b, "B_WN", 500.0, 2, 1e6);
  return g;
}

}  // namespace

TEST_CASE("bandwidth is read in Mbps and stored in MB per tick") {
  auto topo = fixtures::single_link_topology(1.0);
  topo["links"][0]["bandwidth_mbps"] = 10000;
  const Grid g = build_grid(topo.dump());
  REQUIRE(g.links().size() == 1);
  CHECK(g.links()[0].bandwidth == 1250.0);
  CHECK(g.links()[0].id == "SE->WN");
}

TEST_CASE("empty topology is a valid grid") {
  const Grid g = build_grid(R"({"data_centers": []})");
  CHECK(g.data_centers().empty());
  CHECK(g.links().empty());
  CHECK(g.storage_elements().empty());
}

TEST_CASE("links are uni-directional") {
  Grid g = two_sites();
  g.add_link("A_SE", "B_SE", 10.0, 0.0, 0.0, 1);
  CHECK(g.find_link("A_SE", "B_SE") != nullptr);
  CHECK(g.find_link("B_SE", "A_SE") == nullptr);
  CHECK(g.find_link("A_SE", "A_SE") == nullptr);

  g.add_link("B_SE", "A_SE", 20.0, 1.0, 0.0, 5);
  const VirtualLink* ab = g.find_link("A_SE", "B_SE");
  const VirtualLink* ba = g.find_link("B_SE", "A_SE");
  REQUIRE(ab != nullptr);
  REQUIRE(ba != nullptr);
  CHECK(ab != ba);
  CHECK(ab->bandwidth == 10.0);
  CHECK(ba->bandwidth == 20.0);
  CHECK(ba->bg_update_period == 5);
}

TEST_CASE("topology validation") {
  auto dangling = fixtures::single_link_topology(1.0);
  dangling["links"][0]["src"] = "NOWHERE";
  CHECK_THROWS_AS(build_grid(dangling.dump()), ValidationError);

  Grid g = two_sites();
  CHECK_THROWS_AS(g.add_link("A_SE", "B_SE", 0.0, 0.0, 0.0, 1), ValidationError);
  CHECK_THROWS_AS(g.add_link("A_SE", "B_SE", 1.0, 0.0, -1.0, 1), ValidationError);
  CHECK_THROWS_AS(g.add_link("A_SE", "B_SE", 1.0, 0.0, 0.0, 0), ValidationError);
  g.add_link("A_SE", "B_SE", 1.0, 0.0, 0.0, 1);
  CHECK_THROWS_AS(g.add_link("A_SE", "B_SE", 1.0, 0.0, 0.0, 1), ValidationError);
  CHECK_THROWS_AS(g.add_storage_element(0, "B_WN", 1.0), ValidationError);
  CHECK_THROWS_AS(g.add_worker_node(0, "X", 1.0, 0, 1.0), ValidationError);
  CHECK_THROWS_AS(g.add_protocol(Protocol{"p", 1.0}), ValidationError);
  CHECK_THROWS_AS(build_grid("{not json"), ValidationError);
}

TEST_CASE("storage accounting and quota headroom") {
  Grid g = two_sites();
  const auto f = g.add_file("f", 300.0);
  CHECK(g.quota_headroom_mb(1) == 500.0);
  const auto r = g.add_replica(f, 1, 0);
  CHECK(g.storage_elements()[1].used_mb == 300.0);
  CHECK(g.free_mb(1) == 700.0);
  CHECK(g.quota_headroom_mb(1) == 200.0);
  const auto big = g.add_file("big", 800.0);
  CHECK_THROWS_AS(g.add_replica(big, 1, 0), ValidationError);
  g.remove_replica(r);
  CHECK(g.storage_elements()[1].used_mb == 0.0);
}

TEST_CASE("settings apply to the targeted protocol and links") {
  auto topo = fixtures::single_link_topology(100.0);
  Grid g = build_grid(topo.dump());
  const SettingSpec spec = parse_setting(R"({"overhead": 0.02, "mu": 36.9, "sigma": 14.4, "protocol": "https"})");
  apply_setting(g, spec.theta, spec.target);
  CHECK(g.protocols()[0].overhead == 0.02);
  CHECK(g.links()[0].bg_mu == 36.9);
  CHECK(g.links()[0].bg_sigma == 14.4);

  const SettingSpec round = parse_setting(setting_to_json(spec));
  CHECK(round.theta == spec.theta);
  CHECK(round.target.protocol == spec.target.protocol);

  CHECK_THROWS_AS(apply_setting(g, {0.02, 1.0, 1.0}, {std::string("ftp"), {}}), ValidationError);
  CHECK_THROWS_AS(apply_setting(g, {0.02, 1.0, 1.0}, {std::nullopt, {"WN->SE"}}), ValidationError);
  CHECK_THROWS_AS(apply_setting(g, {1.0, 1.0, 1.0}, {}), ValidationError);
}

TEST_CASE("grid_to_json round-trips the static topology") {
  const Grid g = build_grid(fixtures::single_link_topology(100.0, 0.01, 3.0, 1.5, 4).dump());
  const Grid h = build_grid(grid_to_json(g));
  REQUIRE(h.links().size() == 1);
  CHECK(h.links()[0].bandwidth == 100.0);
  CHECK(h.links()[0].bg_mu == 3.0);
  CHECK(h.links()[0].bg_update_period == 4);
  CHECK(h.protocols()[0].overhead == 0.01);
}
