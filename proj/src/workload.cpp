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

#include "dapsim/workload.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <json.hpp>

#include "dapsim/error.hpp"
#include "dapsim/random.hpp"
#include "json_util.hpp"

namespace dapsim {

using nlohmann::json;

const char* to_string(WmsPolicy policy) noexcept {
  switch (policy) {
    case WmsPolicy::pinned: return "pinned";
    case WmsPolicy::round_robin: return "round_robin";
    case WmsPolicy::least_loaded: return "least_loaded";
  }
  return "unknown";
}

WmsPolicy parse_wms_policy(std::string_view name) {
  if (name == "pinned") return WmsPolicy::pinned;
  if (name == "round_robin") return WmsPolicy::round_robin;
  if (name == "least_loaded") return WmsPolicy::least_loaded;
  throw ValidationError("unknown WMS policy '" + std::string(name) + "'");
}

const char* to_string(JobState state) noexcept {
  switch (state) {
    case JobState::queued: return "queued";
    case JobState::fetching_input: return "fetching_input";
    case JobState::computing: return "computing";
    case JobState::done: return "done";
    case JobState::failed: return "failed";
  }
  return "unknown";
}

std::size_t Workload::file_count() const {
  std::size_t n = 0;
  for (const auto& j : jobs) n += j.files_mb.size();
  return n;
}

int steps_for_duration(Tick duration, Tick period) {
  if (period < 1 || duration < 0) throw ValidationError("steps_for_duration: invalid duration/period");
  return static_cast<int>(duration / period) + 1;
}

// ---------------------------------------------------------------------------
// Generator

namespace {

void check_range(std::pair<int, int> r, int floor, const char* what) {
  if (r.first < floor || r.first > r.second) {
    throw ValidationError(std::string("generator: invalid range for ") + what);
  }
}

double draw_file_size(RandomSource& rng, std::pair<double, double> range) {
  if (range.first == range.second) return range.first;
  const double v = std::round(rng.uniform(range.first, range.second));
  return std::clamp(v, range.first, range.second);
}

}  // namespace

Workload generate_production_workload(const GeneratorSpec& spec) {
  if (spec.steps < 1) throw ValidationError("generator: steps must be >= 1");
  if (spec.period_ticks < 1) throw ValidationError("generator: period_ticks must be >= 1");
  if (spec.start_tick < 0) throw ValidationError("generator: start_tick must be >= 0");
  check_range(spec.jobs_per_step, 1, "jobs_per_step");
  check_range(spec.threads, 1, "threads");
  if (!(spec.file_mb.first > 0.0) || spec.file_mb.first > spec.file_mb.second) {
    throw ValidationError("generator: invalid range for file_mb");
  }

  RandomSource rng(mix_seed(spec.seed, hash_id("workload-generator")));
  // threads per job, grouped per step
  std::vector<std::vector<int>> steps(static_cast<std::size_t>(spec.steps));

  if (!spec.target_files) {
    for (auto& step : steps) {
      const auto n_jobs = rng.uniform_int(spec.jobs_per_step.first, spec.jobs_per_step.second);
      for (std::int64_t j = 0; j < n_jobs; ++j) {
        step.push_back(static_cast<int>(rng.uniform_int(spec.threads.first, spec.threads.second)));
      }
    }
  } else {
    const long lo = static_cast<long>(spec.steps) * spec.jobs_per_step.first * spec.threads.first;
    const long hi = static_cast<long>(spec.steps) * spec.jobs_per_step.second * spec.threads.second;
    const long target = *spec.target_files;
    if (target < lo || target > hi) {
      throw ValidationError("generator: target_files " + std::to_string(target) + " outside feasible range [" +
                            std::to_string(lo) + ", " + std::to_string(hi) + "]");
    }
    for (auto& step : steps) step.assign(static_cast<std::size_t>(spec.jobs_per_step.first), spec.threads.first);
    long remaining = target - lo;

    // Grow one file at a time: either one more thread for an existing job or
    // a new minimal job, chosen uniformly among the legal moves of a random
    // growable step.
    struct Move {
      std::size_t step;
      std::ptrdiff_t job;  // -1 adds a job
    };
    std::vector<Move> moves;
    while (remaining > 0) {
      moves.clear();
      for (std::size_t s = 0; s < steps.size(); ++s) {
        for (std::size_t j = 0; j < steps[s].size(); ++j) {
          if (steps[s][j] < spec.threads.second) moves.push_back({s, static_cast<std::ptrdiff_t>(j)});
        }
        if (static_cast<int>(steps[s].size()) < spec.jobs_per_step.second && spec.threads.first <= remaining) {
          moves.push_back({s, -1});
        }
      }
      if (moves.empty()) throw InternalError("generator: no legal move left");
      const Move m = moves[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(moves.size()) - 1))];
      if (m.job < 0) {
        steps[m.step].push_back(spec.threads.first);
        remaining -= spec.threads.first;
      } else {
        ++steps[m.step][static_cast<std::size_t>(m.job)];
        --remaining;
      }
    }
  }

  Workload w;
  w.policy = spec.dst ? WmsPolicy::pinned : WmsPolicy::round_robin;
  for (std::size_t s = 0; s < steps.size(); ++s) {
    for (int threads : steps[s]) {
      JobTemplate t;
      t.tick = spec.start_tick + static_cast<Tick>(s) * spec.period_ticks;
      t.n_threads = threads;
      for (int f = 0; f < threads; ++f) t.files_mb.push_back(draw_file_size(rng, spec.file_mb));
      t.profile = spec.profile;
      t.protocol = spec.protocol;
      t.src = spec.src;
      t.dst = spec.dst;
      t.via = spec.via;
      t.compute_mi = spec.compute_mi;
      w.jobs.push_back(std::move(t));
    }
  }
  return w;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

std::pair<double, double> read_pair(const json& obj, const char* key, std::pair<double, double> fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj[key];
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
    throw ValidationError(std::string("generator: '") + key + "' must be [min, max]");
  }
  return {v[0].get<double>(), v[1].get<double>()};
}

std::pair<int, int> read_int_pair(const json& obj, const char* key, std::pair<int, int> fallback) {
  auto p = read_pair(obj, key, {fallback.first, fallback.second});
  if (p.first != std::floor(p.first) || p.second != std::floor(p.second)) {
    throw ValidationError(std::string("generator: '") + key + "' must hold integers");
  }
  return {static_cast<int>(p.first), static_cast<int>(p.second)};
}

std::optional<std::string> optional_string(const json& obj, const char* key, const char* what) {
  if (!obj.contains(key) || obj[key].is_null()) return std::nullopt;
  return detail::require_string(obj, key, what);
}

}  // namespace

Workload parse_workload(std::string_view json_text) {
  const json doc = detail::parse_json(json_text, "workload");
  if (!doc.is_object()) throw ValidationError("workload: top level must be an object");
  const bool has_generator = doc.contains("generator");
  const bool has_replay = doc.contains("replay");
  if (has_generator == has_replay) throw ValidationError("workload: exactly one of 'generator' or 'replay' required");

  Workload w;
  if (has_generator) {
    const json& g = doc["generator"];
    if (!g.is_object()) throw ValidationError("workload: 'generator' must be an object");
    GeneratorSpec spec;
    spec.period_ticks = detail::integer_or(g, "period_ticks", spec.period_ticks, "generator");
    if (g.contains("duration_ticks")) {
      spec.steps = steps_for_duration(detail::require_integer(g, "duration_ticks", "generator"), spec.period_ticks);
    } else {
      spec.steps = static_cast<int>(detail::integer_or(g, "steps", spec.steps, "generator"));
    }
    spec.start_tick = detail::integer_or(g, "start_tick", 0, "generator");
    spec.jobs_per_step = read_int_pair(g, "jobs_per_step", spec.jobs_per_step);
    spec.threads = read_int_pair(g, "threads", spec.threads);
    spec.file_mb = read_pair(g, "file_mb", spec.file_mb);
    if (g.contains("target_files") && !g["target_files"].is_null()) {
      spec.target_files = static_cast<int>(detail::require_integer(g, "target_files", "generator"));
    }
    spec.seed = static_cast<std::uint64_t>(detail::integer_or(g, "seed", 0, "generator"));
    spec.profile = parse_profile_kind(detail::require_string(g, "profile", "generator"));
    spec.protocol = detail::require_string(g, "protocol", "generator");
    spec.src = detail::require_string(g, "src", "generator");
    spec.dst = optional_string(g, "dst", "generator");
    spec.via = optional_string(g, "via", "generator");
    spec.compute_mi = detail::number_or(g, "compute_mi", 0.0, "generator");
    w = generate_production_workload(spec);
  } else {
    for (const auto& r : detail::array_or_empty(doc, "replay", "workload")) {
      JobTemplate t;
      t.tick = detail::require_integer(r, "tick", "replay entry");
      t.n_threads = static_cast<int>(detail::integer_or(r, "n_threads", 1, "replay entry"));
      for (const auto& f : detail::array_or_empty(r, "files_mb", "replay entry")) {
        if (!f.is_number()) throw ValidationError("replay entry: files_mb must be numbers");
        t.files_mb.push_back(f.get<double>());
      }
      t.profile = parse_profile_kind(detail::require_string(r, "profile", "replay entry"));
      t.protocol = detail::require_string(r, "protocol", "replay entry");
      t.src = detail::require_string(r, "src", "replay entry");
      t.dst = optional_string(r, "dst", "replay entry");
      t.via = optional_string(r, "via", "replay entry");
      t.compute_mi = detail::number_or(r, "compute_mi", 0.0, "replay entry");
      w.jobs.push_back(std::move(t));
    }
  }

  if (doc.contains("wms_policy")) w.policy = parse_wms_policy(detail::require_string(doc, "wms_policy", "workload"));
  if (doc.contains("ddm")) {
    const json& d = doc["ddm"];
    w.ddm.sweep_period = detail::integer_or(d, "sweep_period", 0, "ddm");
    if (d.contains("placement_ttl") && !d["placement_ttl"].is_null()) {
      w.ddm.placement_ttl = detail::require_integer(d, "placement_ttl", "ddm");
    }
  }
  for (const auto& t : w.jobs) {
    if (t.tick < 0) throw ValidationError("workload: negative submission tick");
    if (t.n_threads < 1) throw ValidationError("workload: n_threads must be >= 1");
    for (double s : t.files_mb) {
      if (!(s > 0.0)) throw ValidationError("workload: file sizes must be positive");
    }
  }
  if (w.ddm.sweep_period < 0) throw ValidationError("ddm: sweep_period must be >= 0");
  return w;
}

Workload load_workload(const std::filesystem::path& path) { return parse_workload(read_text_file(path)); }

std::string workload_to_json(const Workload& workload) {
  json doc;
  doc["wms_policy"] = to_string(workload.policy);
  json ddm{{"sweep_period", workload.ddm.sweep_period}};
  if (workload.ddm.placement_ttl) ddm["placement_ttl"] = *workload.ddm.placement_ttl;
  doc["ddm"] = ddm;
  doc["replay"] = json::array();
  for (const auto& t : workload.jobs) {
    json e{{"tick", t.tick},         {"n_threads", t.n_threads}, {"files_mb", t.files_mb},
           {"profile", to_string(t.profile)}, {"protocol", t.protocol}, {"src", t.src}};
    if (t.dst) e["dst"] = *t.dst;
    if (t.via) e["via"] = *t.via;
    if (t.compute_mi != 0.0) e["compute_mi"] = t.compute_mi;
    doc["replay"].push_back(std::move(e));
  }
  return doc.dump(1);
}

// ---------------------------------------------------------------------------
// WMS / DDM

std::optional<std::size_t> Wms::submit(Grid& grid, std::optional<std::size_t> pinned_node) {
  auto has_slot = [&](std::size_t i) {
    const WorkerNode& wn = grid.worker_nodes()[i];
    return wn.busy_slots < wn.slots;
  };
  std::optional<std::size_t> chosen;
  const std::size_t n = grid.worker_nodes().size();
  if (pinned_node) {
    if (has_slot(*pinned_node)) chosen = pinned_node;
  } else if (policy_ == WmsPolicy::round_robin) {
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t i = (cursor_ + k) % n;
      if (has_slot(i)) {
        chosen = i;
        cursor_ = i + 1;
        break;
      }
    }
  } else if (policy_ == WmsPolicy::least_loaded) {
    for (std::size_t i = 0; i < n; ++i) {
      if (!has_slot(i)) continue;
      if (!chosen) {
        chosen = i;
        continue;
      }
      const WorkerNode& a = grid.worker_nodes()[i];
      const WorkerNode& b = grid.worker_nodes()[*chosen];
      // busy/slots comparison without division
      if (static_cast<long>(a.busy_slots) * b.slots < static_cast<long>(b.busy_slots) * a.slots) chosen = i;
    }
  }
  if (chosen) ++grid.worker_node(*chosen).busy_slots;
  return chosen;
}

std::vector<std::size_t> Ddm::cleanup(Grid& grid, Tick now) const {
  std::vector<std::size_t> removed;
  for (std::size_t i = 0; i < grid.replicas().size(); ++i) {
    const Replica& r = grid.replicas()[i];
    if (r.resident && r.ttl && r.created_at + *r.ttl <= now) {
      grid.remove_replica(i);
      removed.push_back(i);
    }
  }
  return removed;
}

// ---------------------------------------------------------------------------
// Job lifecycle

namespace {

std::size_t require_host(const Grid& grid, const std::string& id, HostKind kind, const std::string& job) {
  auto h = grid.find_host(id);
  if (!h) throw ValidationError("job " + job + ": unknown host '" + id + "'");
  if (h->kind != kind) {
    throw ValidationError("job " + job + ": host '" + id + "' is not a " +
                          (kind == HostKind::storage_element ? "storage element" : "worker node"));
  }
  return h->index;
}

void require_link(const Grid& grid, const std::string& src, const std::string& dst) {
  if (!grid.find_link(src, dst)) throw ValidationError("missing link (" + src + "," + dst + ")");
}

}  // namespace

WorkloadDriver::WorkloadDriver(Grid& grid, const Workload& workload, TransferEngine& transfers, EventLog& log)
    : grid_(grid), transfers_(transfers), log_(log), wms_(workload.policy), templates_(workload.jobs) {
  jobs_.reserve(templates_.size());
  runtime_.resize(templates_.size());
  for (std::size_t j = 0; j < templates_.size(); ++j) {
    const JobTemplate& t = templates_[j];
    Job job;
    job.id = "j" + std::to_string(j);
    job.template_index = j;
    job.n_threads = t.n_threads;
    job.compute_mi = t.compute_mi;
    job.submit_tick = t.tick;
    if (t.n_threads < 1) throw ValidationError("job " + job.id + ": n_threads must be >= 1");
    if (!(t.compute_mi >= 0.0)) throw ValidationError("job " + job.id + ": negative compute_mi");

    const auto protocol = grid_.find_protocol(t.protocol);
    if (!protocol) throw ValidationError("job " + job.id + ": unknown protocol '" + t.protocol + "'");
    const std::size_t src = require_host(grid_, t.src, HostKind::storage_element, job.id);
    std::optional<std::size_t> dst;
    if (t.dst) dst = require_host(grid_, *t.dst, HostKind::worker_node, job.id);
    if (!dst && wms_.policy() == WmsPolicy::pinned) {
      throw ValidationError("job " + job.id + ": pinned policy requires 'dst'");
    }
    if (t.via) require_host(grid_, *t.via, HostKind::storage_element, job.id);

    if (dst) {
      const std::string& wn = *t.dst;
      switch (t.profile) {
        case ProfileKind::remote_access: require_link(grid_, t.src, wn); break;
        case ProfileKind::stage_in:
          if (grid_.storage_elements()[src].data_center != grid_.worker_nodes()[*dst].data_center) {
            throw ValidationError("job " + job.id + ": stage_in source " + t.src + " is not local to " + wn);
          }
          require_link(grid_, t.src, wn);
          break;
        case ProfileKind::data_placement: {
          const auto& dc = grid_.data_centers()[grid_.worker_nodes()[*dst].data_center];
          if (!t.via && dc.storage_elements.empty()) {
            throw ValidationError("job " + job.id + ": no local storage element for placement at " + wn);
          }
          const std::string& local = t.via ? *t.via : grid_.storage_elements()[dc.storage_elements.front()].id;
          if (local == t.src) throw ValidationError("job " + job.id + ": placement source equals destination");
          require_link(grid_, t.src, local);
          require_link(grid_, local, wn);
          break;
        }
      }
    }

    for (std::size_t f = 0; f < t.files_mb.size(); ++f) {
      const std::size_t file = grid_.add_file(job.id + "_f" + std::to_string(f), t.files_mb[f]);
      job.assigned_replicas.push_back(grid_.add_replica(file, src, 0));
      job.profiles.push_back(AccessProfile{t.profile, *protocol});
    }
    jobs_.push_back(std::move(job));
  }

  submission_order_.resize(templates_.size());
  std::iota(submission_order_.begin(), submission_order_.end(), std::size_t{0});
  std::stable_sort(submission_order_.begin(), submission_order_.end(),
                   [&](std::size_t a, std::size_t b) { return templates_[a].tick < templates_[b].tick; });
}

void WorkloadDriver::submit_due(Tick now) {
  while (next_submission_ < submission_order_.size() &&
         templates_[submission_order_[next_submission_]].tick <= now) {
    const std::size_t j = submission_order_[next_submission_++];
    queued_.push_back(j);
    ++open_jobs_;
    log_.record(now, "job_submit", jobs_[j].id, std::to_string(jobs_[j].assigned_replicas.size()) + " files");
  }
  for (std::size_t k = 0; k < queued_.size();) {
    const std::size_t j = queued_[k];
    std::optional<std::size_t> pinned;
    if (const auto& dst = templates_[j].dst) pinned = grid_.find_host(*dst)->index;
    if (auto node = wms_.submit(grid_, pinned)) {
      queued_.erase(queued_.begin() + static_cast<std::ptrdiff_t>(k));
      start_job(j, *node, now);
    } else {
      ++k;
    }
  }
}

std::size_t WorkloadDriver::local_storage_element(std::size_t job) const {
  const JobTemplate& t = templates_[job];
  if (t.via) return grid_.find_host(*t.via)->index;
  const auto& dc = grid_.data_centers()[grid_.worker_nodes()[*jobs_[job].node].data_center];
  if (dc.storage_elements.empty()) {
    throw TransferError(TransferError::Reason::missing_link,
                        "no local storage element at " + grid_.worker_nodes()[*jobs_[job].node].id);
  }
  return dc.storage_elements.front();
}

std::size_t WorkloadDriver::remote_process_for(std::size_t job, std::size_t replica, std::size_t node) {
  const HostRef src{HostKind::storage_element, grid_.replicas()[replica].location};
  const auto link = grid_.find_link(src, HostRef{HostKind::worker_node, node});
  // A missing link is reported by start_transfer; any key works here.
  const std::size_t key = link ? *link : grid_.links().size();
  auto& procs = runtime_[job].remote_process;
  for (const auto& [l, p] : procs) {
    if (l == key) return p;
  }
  procs.emplace_back(key, transfers_.new_process());
  return procs.back().second;
}

void WorkloadDriver::start_job(std::size_t j, std::size_t node, Tick now) {
  Job& job = jobs_[j];
  JobRuntime& rt = runtime_[j];
  job.node = node;
  job.state = JobState::fetching_input;
  log_.record(now, "job_start", job.id, grid_.worker_nodes()[node].id);

  rt.inputs_left = job.assigned_replicas.size();
  try {
    for (std::size_t i = 0; i < job.assigned_replicas.size(); ++i) {
      const PendingInput input{job.assigned_replicas[i], i};
      switch (job.profiles[i].kind) {
        case ProfileKind::remote_access: rt.remote_queue.push_back(input); break;
        case ProfileKind::stage_in: rt.stage_queue.push_back(input); break;
        case ProfileKind::data_placement: {
          StartRequest req{job.profiles[i], input.replica,
                           HostRef{HostKind::storage_element, local_storage_element(j)}, j,
                           transfers_.new_process(), 1};
          const ActiveTransfer& t = transfers_.start_transfer(req, now);
          log_.record(now, "transfer_start", job.id, grid_.links()[t.link].id + " data_placement");
          break;
        }
      }
    }
    if (rt.inputs_left == 0) {
      rt.inputs_left = 1;
      input_complete(j, now);
      return;
    }
    pump(j, now);
  } catch (const TransferError& e) {
    finalize(j, now, JobState::failed, e.what());
  }
}

void WorkloadDriver::pump(std::size_t j, Tick now) {
  Job& job = jobs_[j];
  JobRuntime& rt = runtime_[j];
  while (rt.active_remote < job.n_threads && !rt.remote_queue.empty()) {
    const PendingInput input = rt.remote_queue.front();
    rt.remote_queue.pop_front();
    StartRequest req{job.profiles[input.index], input.replica, HostRef{HostKind::worker_node, *job.node}, j,
                     remote_process_for(j, input.replica, *job.node), job.n_threads};
    const ActiveTransfer& t = transfers_.start_transfer(req, now);
    ++rt.active_remote;
    rt.peak_remote = std::max(rt.peak_remote, rt.active_remote);
    log_.record(now, "transfer_start", job.id, grid_.links()[t.link].id + " remote_access");
  }
  if (!rt.stage_active && !rt.stage_queue.empty()) {
    const PendingInput input = rt.stage_queue.front();
    rt.stage_queue.pop_front();
    if (!grid_.replicas()[input.replica].resident) {
      throw TransferError(TransferError::Reason::missing_link, "replica expired before stage-in");
    }
    if (!rt.stage_process) rt.stage_process = transfers_.new_process();
    StartRequest req{AccessProfile{ProfileKind::stage_in, job.profiles[input.index].protocol}, input.replica,
                     HostRef{HostKind::worker_node, *job.node}, j, *rt.stage_process, 1};
    const ActiveTransfer& t = transfers_.start_transfer(req, now);
    rt.stage_active = true;
    rt.scratch_mb += t.size;
    log_.record(now, "transfer_start", job.id, grid_.links()[t.link].id + " stage_in");
  }
}

void WorkloadDriver::on_transfer_finished(const FinishedTransfer& finished, Tick now) {
  const ActiveTransfer& t = finished.transfer;
  if (!t.owner_job) return;
  const std::size_t j = *t.owner_job;
  if (jobs_[j].state != JobState::fetching_input) return;
  JobRuntime& rt = runtime_[j];
  try {
    switch (t.kind) {
      case ProfileKind::remote_access:
        --rt.active_remote;
        input_complete(j, now);
        break;
      case ProfileKind::stage_in:
        rt.stage_active = false;
        input_complete(j, now);
        break;
      case ProfileKind::data_placement: {
        std::size_t index = 0;
        const auto& assigned = jobs_[j].assigned_replicas;
        while (index < assigned.size() && assigned[index] != t.replica) ++index;
        rt.stage_queue.push_back(PendingInput{*finished.new_replica, index});
        break;
      }
    }
    if (jobs_[j].state == JobState::fetching_input) pump(j, now);
  } catch (const TransferError& e) {
    finalize(j, now, JobState::failed, e.what());
  }
}

void WorkloadDriver::input_complete(std::size_t j, Tick now) {
  JobRuntime& rt = runtime_[j];
  if (--rt.inputs_left > 0) return;
  Job& job = jobs_[j];
  const double mips = grid_.worker_nodes()[*job.node].mips;
  const auto ticks = static_cast<Tick>(std::ceil(job.compute_mi / mips));
  if (ticks <= 0) {
    finalize(j, now, JobState::done, "");
    return;
  }
  job.state = JobState::computing;
  rt.compute_done = now + ticks;
  computing_.push_back(j);
  log_.record(now, "job_compute", job.id, std::to_string(ticks) + " ticks");
}

void WorkloadDriver::finish_compute(Tick now) {
  if (computing_.empty()) return;
  std::vector<std::size_t> due;
  std::erase_if(computing_, [&](std::size_t j) {
    if (runtime_[j].compute_done != now) return false;
    due.push_back(j);
    return true;
  });
  std::sort(due.begin(), due.end());
  for (std::size_t j : due) finalize(j, now, JobState::done, "");
}

void WorkloadDriver::finalize(std::size_t j, Tick now, JobState state, const std::string& reason) {
  Job& job = jobs_[j];
  JobRuntime& rt = runtime_[j];
  if (state == JobState::failed) transfers_.cancel_owner(j);
  job.state = state;
  if (job.node) {
    WorkerNode& wn = grid_.worker_node(*job.node);
    --wn.busy_slots;
    wn.scratch_used_mb = std::max(0.0, wn.scratch_used_mb - rt.scratch_mb);
  }
  rt.scratch_mb = 0.0;
  rt.remote_queue.clear();
  rt.stage_queue.clear();
  --open_jobs_;
  log_.record(now, state == JobState::done ? "job_done" : "job_failed", job.id, reason);
}

bool WorkloadDriver::finished() const noexcept {
  return next_submission_ == submission_order_.size() && queued_.empty() && open_jobs_ == 0;
}

}  // namespace dapsim
