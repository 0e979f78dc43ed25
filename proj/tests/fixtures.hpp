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

#pragma once

#include <string>
#include <vector>

#include <json.hpp>

// Small topologies and workloads shared by the test binaries.
namespace fixtures {

using nlohmann::json;

/// One storage element "SE" streaming to one worker node "WN" over a single
/// link of `mb_per_tick` MB per tick.
inline json single_link_topology(double mb_per_tick, double overhead = 0.0, double bg_mu = 0.0,
                                 double bg_sigma = 0.0, long update_period = 1, int slots = 64) {
  return json{
      {"protocols", {{{"name", "https"}, {"overhead", overhead}}}},
      {"data_centers",
       {{{"id", "DC-A"}, {"storage_elements", {{{"id", "SE"}, {"capacity_mb", 1e12}}}}},
        {{"id", "DC-B"}, {"worker_nodes", {{{"id", "WN"}, {"mips", 1000}, {"slots", slots}, {"scratch_mb", 1e9}}}}}}},
      {"links",
       {{{"src", "SE"},
         {"dst", "WN"},
         {"bandwidth_mbps", mb_per_tick * 8.0},
         {"bg_mu", bg_mu},
         {"bg_sigma", bg_sigma},
         {"bg_update_period", update_period}}}}};
}

inline json remote_job(long tick, int n_threads, std::vector<double> files_mb, const std::string& src = "SE",
                       const std::string& dst = "WN") {
  return json{{"tick", tick},         {"n_threads", n_threads}, {"files_mb", files_mb}, {"profile", "remote_access"},
              {"protocol", "https"}, {"src", src},             {"dst", dst}};
}

inline json replay(std::vector<json> jobs) {
  json doc{{"wms_policy", "pinned"}, {"replay", json::array()}};
  for (auto& j : jobs) doc["replay"].push_back(std::move(j));
  return doc;
}

}  // namespace fixtures
