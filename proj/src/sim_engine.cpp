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

#include "dapsim/sim_engine.hpp"

#include <ostream>

#include "dapsim/error.hpp"
#include "dapsim/transfer.hpp"

namespace dapsim {

namespace {

Observation to_observation(const Grid& grid, const std::vector<Job>& jobs, const FinishedTransfer& f) {
  const ActiveTransfer& t = f.transfer;
  Observation o;
  o.T = static_cast<double>(f.completed_at - t.start_tick + 1);
  o.S = t.size;
  o.ConTh = t.conth_accum;
  o.ConPr = t.conpr_accum;
  o.start_tick = t.start_tick;
  o.link = grid.links()[t.link].id;
  if (t.owner_job) o.job = jobs[*t.owner_job].id;
  o.profile = t.kind;
  return o;
}

}  // namespace

SimulationResult run(const Grid& topology, const Workload& workload, const std::optional<SettingSpec>& setting,
                     const RunOptions& options) {
  if (options.horizon < 1) throw ValidationError("run: horizon must be >= 1");

  Grid grid = topology;
  if (setting) apply_setting(grid, setting->theta, setting->target);

  EventLog log(options.record_events);
  TransferEngine transfers(grid, options.seed);
  transfers.set_placement_ttl(workload.ddm.placement_ttl);
  WorkloadDriver driver(grid, workload, transfers, log);
  const Ddm ddm(workload.ddm);

  SimulationResult result;
  SimClock clock;
  for (;; clock.step()) {
    const Tick now = clock.now();

    transfers.begin_tick(now);

    if (ddm.sweep_due(now)) {
      for (std::size_t r : ddm.cleanup(grid, now)) {
        log.record(now, "replica_removed", grid.files()[grid.replicas()[r].file].id,
                   grid.storage_elements()[grid.replicas()[r].location].id);
      }
    }
    driver.submit_due(now);

    if (transfers.active_count() > 0) {
      for (const auto& f : transfers.advance(now)) {
        result.observations.push_back(to_observation(grid, driver.jobs(), f));
        if (log.enabled()) {
          const auto& o = result.observations.back();
          log.record(now, "transfer_done", o.job.empty() ? std::string("-") : o.job,
                     o.link + " T=" + format_double(o.T) + " S=" + format_double(o.S));
        }
        driver.on_transfer_finished(f, now);
      }
    }
    driver.finish_compute(now);

    const bool idle = driver.finished() && transfers.idle();
    if (idle || now + 1 >= options.horizon) {
      result.truncated = !idle;
      break;
    }
  }

  result.end_tick = clock.now();
  for (const auto& j : driver.jobs()) result.jobs.push_back(JobSummary{j.id, j.state});
  result.events = log.release();
  return result;
}

void write_event_log(std::ostream& out, const std::vector<Event>& events) {
  for (const auto& e : events) out << e.tick << ',' << e.kind << ',' << e.subject << ',' << e.detail << '\n';
}

}  // namespace dapsim
