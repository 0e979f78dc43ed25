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
#include <deque>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dapsim/events.hpp"
#include "dapsim/grid_model.hpp"
#include "dapsim/transfer.hpp"

namespace dapsim {

/// Declarative description of one job submission.
struct JobTemplate {
  Tick tick = 0;
  int n_threads = 1;
  std::vector<double> files_mb;
  ProfileKind profile = ProfileKind::remote_access;
  std::string protocol;
  std::string src;                 // storage element holding the input replicas
  std::optional<std::string> dst;  // worker node; required by the pinned policy
  std::optional<std::string> via;  // local storage element for data placement
  double compute_mi = 0.0;
};

enum class WmsPolicy { pinned, round_robin, least_loaded };

const char* to_string(WmsPolicy policy) noexcept;
WmsPolicy parse_wms_policy(std::string_view name);

struct DdmConfig {
  Tick sweep_period = 0;  // 0 disables the cleanup sweep
  std::optional<Tick> placement_ttl;
};

struct Workload {
  std::vector<JobTemplate> jobs;
  WmsPolicy policy = WmsPolicy::pinned;
  DdmConfig ddm;

  std::size_t file_count() const;
};

/// Shape of a production-style campaign: `steps` submission rounds
/// `period_ticks` apart, each with a random number of jobs, threads and file
/// sizes. With `target_files` set, exactly that many files are spread over
/// the steps while respecting the per-step ranges.
struct GeneratorSpec {
  int steps = 26;
  Tick period_ticks = 900;
  Tick start_tick = 0;
  std::pair<int, int> jobs_per_step{1, 12};
  std::pair<int, int> threads{1, 4};
  std::pair<double, double> file_mb{300.0, 3000.0};
  std::optional<int> target_files;
  std::uint64_t seed = 0;
  ProfileKind profile = ProfileKind::remote_access;
  std::string protocol;
  std::string src;
  std::optional<std::string> dst;
  std::optional<std::string> via;
  double compute_mi = 0.0;
};

/// Number of submission steps covering `duration` at `period` cadence,
/// counting both endpoints.
int steps_for_duration(Tick duration, Tick period);

Workload generate_production_workload(const GeneratorSpec& spec);

/// Parses a workload document holding either `generator` or `replay`.
Workload parse_workload(std::string_view json_text);
Workload load_workload(const std::filesystem::path& path);
/// Always emits the replay form.
std::string workload_to_json(const Workload& workload);

enum class JobState { queued, fetching_input, computing, done, failed };

const char* to_string(JobState state) noexcept;

struct Job {
  std::string id;
  std::size_t template_index = 0;
  std::vector<std::size_t> assigned_replicas;
  std::vector<AccessProfile> profiles;  // index-synchronized with assigned_replicas
  int n_threads = 1;
  double compute_mi = 0.0;
  JobState state = JobState::queued;
  Tick submit_tick = 0;
  std::optional<std::size_t> node;
};

/// Workload management: binds queued jobs to worker nodes with free slots.
class Wms {
 public:
  explicit Wms(WmsPolicy policy) : policy_(policy) {}

  WmsPolicy policy() const noexcept { return policy_; }

  /// Chooses a worker node for a job and occupies one of its slots. Returns
  /// nothing when no eligible node has a free slot.
  std::optional<std::size_t> submit(Grid& grid, std::optional<std::size_t> pinned_node);

 private:
  WmsPolicy policy_;
  std::size_t cursor_ = 0;
};

/// Distributed data management: replica cleanup by TTL.
class Ddm {
 public:
  explicit Ddm(DdmConfig config) : config_(std::move(config)) {}

  const DdmConfig& config() const noexcept { return config_; }
  bool sweep_due(Tick now) const noexcept { return config_.sweep_period > 0 && now % config_.sweep_period == 0; }

  /// Removes every resident replica whose lease has elapsed at `now`.
  std::vector<std::size_t> cleanup(Grid& grid, Tick now) const;

 private:
  DdmConfig config_;
};

/// Runs the job lifecycle (submission, input fetching, compute) on top of a
/// TransferEngine. Driven by the simulation loop.
class WorkloadDriver {
 public:
  /// Materializes files and source replicas on `grid` and validates every
  /// statically resolvable route. Throws ValidationError on unknown hosts,
  /// protocols or missing links.
  WorkloadDriver(Grid& grid, const Workload& workload, TransferEngine& transfers, EventLog& log);

  /// Submits due and previously queued jobs.
  void submit_due(Tick now);
  /// Hands a completed transfer back to its job.
  void on_transfer_finished(const FinishedTransfer& finished, Tick now);
  /// Completes compute phases ending at `now`.
  void finish_compute(Tick now);

  bool finished() const noexcept;
  const std::vector<Job>& jobs() const noexcept { return jobs_; }
  /// Highest number of simultaneous remote streams any job reached.
  int peak_remote_streams(std::size_t job) const { return runtime_.at(job).peak_remote; }

 private:
  struct PendingInput {
    std::size_t replica;
    std::size_t index;  // position in the job's input list
  };
  struct JobRuntime {
    std::deque<PendingInput> remote_queue;
    std::deque<PendingInput> stage_queue;
    int active_remote = 0;
    int peak_remote = 0;
    bool stage_active = false;
    std::size_t inputs_left = 0;
    std::optional<std::size_t> stage_process;
    std::vector<std::pair<std::size_t, std::size_t>> remote_process;  // link -> process
    double scratch_mb = 0.0;
    Tick compute_done = 0;
  };

  void start_job(std::size_t job, std::size_t node, Tick now);
  void pump(std::size_t job, Tick now);
  void input_complete(std::size_t job, Tick now);
  void finalize(std::size_t job, Tick now, JobState state, const std::string& reason);
  std::size_t local_storage_element(std::size_t job) const;
  std::size_t remote_process_for(std::size_t job, std::size_t replica, std::size_t node);

  Grid& grid_;
  TransferEngine& transfers_;
  EventLog& log_;
  Wms wms_;
  std::vector<JobTemplate> templates_;
  std::vector<Job> jobs_;
  std::vector<JobRuntime> runtime_;
  std::vector<std::size_t> submission_order_;  // job indices sorted by tick
  std::size_t next_submission_ = 0;
  std::deque<std::size_t> queued_;
  std::vector<std::size_t> computing_;
  std::size_t open_jobs_ = 0;
};

}  // namespace dapsim
