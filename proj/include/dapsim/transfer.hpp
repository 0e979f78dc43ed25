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

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dapsim/error.hpp"
#include "dapsim/grid_model.hpp"
#include "dapsim/random.hpp"

namespace dapsim {

/// How a replica is fetched: protocol plus host-class pair implied by `kind`
/// (data_placement SE->SE, stage_in local SE->WN, remote_access SE->WN).
struct AccessProfile {
  ProfileKind kind = ProfileKind::remote_access;
  std::size_t protocol = 0;
};

/// True when `kind` admits a transfer from `src` to `dst` on this grid.
bool profile_admits(const Grid& grid, ProfileKind kind, HostRef src, HostRef dst);

struct ActiveTransfer {
  std::size_t id = 0;
  std::size_t replica = 0;
  std::size_t link = 0;
  std::size_t protocol = 0;
  ProfileKind kind = ProfileKind::remote_access;
  HostRef dst;
  std::optional<std::size_t> owner_job;
  std::size_t process = 0;
  int n_threads = 1;  // thread count of the owning process
  double size = 0.0;
  double remaining = 0.0;
  Tick start_tick = 0;  // first tick in which the transfer holds bandwidth
  double conth_accum = 0.0;
  double conpr_accum = 0.0;
};

/// Per-thread chunk for one tick:
/// bandwidth / (background_load + campaign_load) / n_threads, minus the
/// protocol overhead fraction.
double chunk_size(const VirtualLink& link, int n_threads, const Protocol& protocol);

/// Resamples the held background load: max(0, N(bg_mu, bg_sigma^2)).
/// `now` must be a multiple of the link's update period.
void update_background_load(VirtualLink& link, RandomSource& rng, Tick now);

/// Credits one tick of bandwidth to every transfer on `link`.
///
/// Each transfer receives min(chunk_size, remaining). ConTh grows by what
/// sibling transfers of the same process received this tick, ConPr by what
/// other processes received. Returns the credited chunk per transfer; a
/// transfer is complete when its `remaining` reaches zero.
///
/// Throws InternalError when link.campaign_load differs from the number of
/// distinct processes in `transfers`.
std::vector<double> advance_link_tick(VirtualLink& link, std::span<ActiveTransfer> transfers,
                                      std::span<const Protocol> protocols);

class TransferError : public Error {
 public:
  enum class Reason { missing_link, class_mismatch, quota_exceeded, scratch_exhausted };
  TransferError(Reason reason, const std::string& what)
      : Error(ErrorKind::validation, what), reason_(reason) {}
  Reason reason() const noexcept { return reason_; }

 private:
  Reason reason_;
};

struct StartRequest {
  AccessProfile profile;
  std::size_t replica = 0;
  HostRef dst;
  std::optional<std::size_t> owner_job;
  std::size_t process = 0;
  int n_threads = 1;
};

struct FinishedTransfer {
  ActiveTransfer transfer;
  Tick completed_at = 0;
  std::optional<std::size_t> new_replica;  // set for data placements
};

/// Owns every in-flight transfer of one simulation run and the per-link
/// load bookkeeping. Transfers registered during tick t start moving data
/// in tick t + 1.
class TransferEngine {
 public:
  TransferEngine(Grid& grid, std::uint64_t seed);

  std::size_t new_process() noexcept { return next_process_++; }

  /// Validates and registers a transfer. For data placement the destination
  /// quota is reserved atomically; for stage-in the scratch space is.
  const ActiveTransfer& start_transfer(const StartRequest& request, Tick now);

  /// Promotes transfers registered before `now` to active and refreshes the
  /// background load of every busy link.
  void begin_tick(Tick now);

  /// Moves one tick of data on every busy link; returns completed transfers
  /// in link order.
  std::vector<FinishedTransfer> advance(Tick now);

  /// Drops every transfer owned by `job`, releasing reservations.
  void cancel_owner(std::size_t job);

  void set_placement_ttl(std::optional<Tick> ttl) { placement_ttl_ = ttl; }

  bool idle() const noexcept { return active_count_ == 0 && pending_.empty(); }
  std::size_t active_count() const noexcept { return active_count_; }
  const std::vector<ActiveTransfer>& active_on(std::size_t link) const { return active_.at(link); }

 private:
  struct LinkState {
    std::uint64_t seed = 0;
    std::int64_t held_update = -1;
    std::vector<std::pair<std::size_t, int>> process_refs;  // process -> active transfers
  };

  void add_process_ref(std::size_t link, std::size_t process);
  void drop_process_ref(std::size_t link, std::size_t process);
  void release(const ActiveTransfer& t);

  Grid& grid_;
  std::vector<std::vector<ActiveTransfer>> active_;
  std::vector<LinkState> links_;
  std::vector<ActiveTransfer> pending_;
  std::size_t active_count_ = 0;
  std::size_t next_id_ = 0;
  std::size_t next_process_ = 0;
  std::optional<Tick> placement_ttl_;
};

}  // namespace dapsim
