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

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "dapsim/grid_model.hpp"

namespace dapsim {

/// One completed file access: the regression sample.
struct Observation {
  double T = 0.0;      // transfer time in ticks
  double S = 0.0;      // file size, MB
  double ConTh = 0.0;  // MB moved by sibling threads of the same process on the link
  double ConPr = 0.0;  // MB moved by other campaign processes on the link
  Tick start_tick = 0;
  std::string link;
  std::string job;  // empty when the transfer had no owning job
  ProfileKind profile = ProfileKind::remote_access;

  friend bool operator==(const Observation&, const Observation&) = default;
};

inline constexpr const char* kObservationCsvHeader = "T,S,ConTh,ConPr,start_tick,link,job,profile";

void write_observations_csv(std::ostream& out, const std::vector<Observation>& observations);
void save_observations_csv(const std::filesystem::path& path, const std::vector<Observation>& observations);
std::vector<Observation> read_observations_csv(std::istream& in);
std::vector<Observation> load_observations_csv(const std::filesystem::path& path);

/// Shortest text that parses back to the same double.
std::string format_double(double v);

}  // namespace dapsim
