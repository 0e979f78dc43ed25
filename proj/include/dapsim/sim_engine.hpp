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

#include <cstdint>
#include <optional>
#include <vector>

#include "dapsim/events.hpp"
#include "dapsim/grid_model.hpp"
#include "dapsim/observation.hpp"
#include "dapsim/workload.hpp"

namespace dapsim {

/// Simulated time. Advances by exactly one tick per step.
class SimClock {
 public:
  Tick now() const noexcept { return now_; }
  void step() noexcept { ++now_; }

 private:
  Tick now_ = 0;
};

struct RunOptions {
  std::uint64_t seed = 0;
  Tick horizon = 1;
  bool record_events = false;
};

struct JobSummary {
  std::string id;
  JobState state = JobState::queued;
};

struct SimulationResult {
  std::vector<Observation> observations;  // in completion order
  std::vector<Event> events;
  std::vector<JobSummary> jobs;
  Tick end_tick = 0;      // last tick executed
  bool truncated = false; // horizon reached with work outstanding
};

/// Runs one simulation. Each tick executes, in order: background-load
/// refresh, job submission, per-link chunk transfers, completion bookkeeping.
/// The result is a pure function of the arguments.
///
/// Throws ValidationError when the workload references unknown hosts or a
/// route has no declared link.
SimulationResult run(const Grid& grid, const Workload& workload, const std::optional<SettingSpec>& setting,
                     const RunOptions& options);

}  // namespace dapsim
