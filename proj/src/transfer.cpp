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

#include "dapsim/transfer.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace dapsim {

namespace {

// Remaining volume below this fraction of the file size counts as delivered;
// it absorbs rounding from non-integral chunk sizes.
constexpr double kCompletionEpsilon = 1e-9;

void credit_tick(VirtualLink& link, std::span<ActiveTransfer> transfers, std::span<const Protocol> protocols,
                 std::span<double> credits) {
  thread_local std::vector<std::pair<std::size_t, double>> process_sums;
  thread_local std::vector<std::size_t> slot;
  process_sums.clear();
  slot.resize(transfers.size());

  for (std::size_t i = 0; i < transfers.size(); ++i) {
    const std::size_t p = transfers[i].process;
    std::size_t s = 0;
    while (s < process_sums.size() && process_sums[s].first != p) ++s;
    if (s == process_sums.size()) process_sums.emplace_back(p, 0.0);
    slot[i] = s;
  }
  if (static_cast<int>(process_sums.size()) != link.campaign_load) {
    throw InternalError("link " + link.id + ": campaign_load " + std::to_string(link.campaign_load) +
                        " but " + std::to_string(process_sums.size()) + " active processes");
  }

  double total = 0.0;
  for (std::size_t i = 0; i < transfers.size(); ++i) {
    const ActiveTransfer& t = transfers[i];
    const double c = std::min(chunk_size(link, t.n_threads, protocols[t.protocol]), t.remaining);
    credits[i] = c;
    total += c;
    process_sums[slot[i]].second += c;
  }

  for (std::size_t i = 0; i < transfers.size(); ++i) {
    ActiveTransfer& t = transfers[i];
    const double same_process = process_sums[slot[i]].second;
    t.conth_accum += std::max(0.0, same_process - credits[i]);
    t.conpr_accum += std::max(0.0, total - same_process);
    t.remaining -= credits[i];
    if (t.remaining <= kCompletionEpsilon * t.size) t.remaining = 0.0;
  }
}

}  // namespace

bool profile_admits(const Grid& grid, ProfileKind kind, HostRef src, HostRef dst) {
  if (src.kind != HostKind::storage_element) return false;
  switch (kind) {
    case ProfileKind::data_placement:
      return dst.kind == HostKind::storage_element && dst != src;
    case ProfileKind::stage_in:
      return dst.kind == HostKind::worker_node && grid.host_data_center(src) == grid.host_data_center(dst);
    case ProfileKind::remote_access:
      return dst.kind == HostKind::worker_node;
  }
  return false;
}

double chunk_size(const VirtualLink& link, int n_threads, const Protocol& protocol) {
  double chunk = (link.bandwidth / (link.background_load + link.campaign_load)) / n_threads;
  chunk -= chunk * protocol.overhead;
  return chunk;
}

void update_background_load(VirtualLink& link, RandomSource& rng, Tick now) {
  if (now % link.bg_update_period != 0) {
    throw InternalError("link " + link.id + ": background update off period at tick " + std::to_string(now));
  }
  link.background_load = std::max(0.0, normal_draw(rng, link.bg_mu, link.bg_sigma));
}

std::vector<double> advance_link_tick(VirtualLink& link, std::span<ActiveTransfer> transfers,
                                      std::span<const Protocol> protocols) {
  std::vector<double> credits(transfers.size(), 0.0);
  if (!transfers.empty()) credit_tick(link, transfers, protocols, credits);
  return credits;
}

TransferEngine::TransferEngine(Grid& grid, std::uint64_t seed)
    : grid_(grid), active_(grid.links().size()), links_(grid.links().size()) {
  for (std::size_t i = 0; i < links_.size(); ++i) {
    links_[i].seed = mix_seed(seed, hash_id(grid.links()[i].id));
    grid_.link(i).campaign_load = 0;
  }
}

const ActiveTransfer& TransferEngine::start_transfer(const StartRequest& request, Tick now) {
  const Replica& replica = grid_.replicas().at(request.replica);
  if (!replica.resident) throw InternalError("transfer of a removed replica");
  const HostRef src{HostKind::storage_element, replica.location};
  const std::string& src_id = grid_.host_id(src);
  const std::string& dst_id = grid_.host_id(request.dst);
  const ProfileKind kind = request.profile.kind;

  if (!profile_admits(grid_, kind, src, request.dst)) {
    throw TransferError(TransferError::Reason::class_mismatch,
                        std::string(to_string(kind)) + " does not admit " + src_id + " -> " + dst_id);
  }
  const auto link = grid_.find_link(src, request.dst);
  if (!link) {
    throw TransferError(TransferError::Reason::missing_link, "no link (" + src_id + "," + dst_id + ")");
  }
  if (request.profile.protocol >= grid_.protocols().size()) throw InternalError("protocol index out of range");
  if (request.n_threads < 1) throw InternalError("transfer with n_threads < 1");

  const double size = grid_.files().at(replica.file).size_mb;
  if (kind == ProfileKind::data_placement) {
    if (grid_.quota_headroom_mb(request.dst.index) < size) {
      throw TransferError(TransferError::Reason::quota_exceeded,
                          "quota exceeded on " + dst_id + " for " + grid_.files()[replica.file].id);
    }
    grid_.storage_element(request.dst.index).reserved_mb += size;
  } else if (kind == ProfileKind::stage_in) {
    WorkerNode& wn = grid_.worker_node(request.dst.index);
    if (wn.scratch_used_mb + size > wn.scratch_mb) {
      throw TransferError(TransferError::Reason::scratch_exhausted, "scratch exhausted on " + dst_id);
    }
    wn.scratch_used_mb += size;
  }

  ActiveTransfer t;
  t.id = next_id_++;
  t.replica = request.replica;
  t.link = *link;
  t.protocol = request.profile.protocol;
  t.kind = kind;
  t.dst = request.dst;
  t.owner_job = request.owner_job;
  t.process = request.process;
  t.n_threads = request.n_threads;
  t.size = size;
  t.remaining = size;
  t.start_tick = now + 1;
  pending_.push_back(std::move(t));
  return pending_.back();
}

void TransferEngine::begin_tick(Tick now) {
  if (!pending_.empty()) {
    auto ready = std::stable_partition(pending_.begin(), pending_.end(),
                                       [now](const ActiveTransfer& t) { return t.start_tick <= now; });
    for (auto it = pending_.begin(); it != ready; ++it) {
      add_process_ref(it->link, it->process);
      active_[it->link].push_back(std::move(*it));
      ++active_count_;
    }
    pending_.erase(pending_.begin(), ready);
  }

  for (std::size_t i = 0; i < active_.size(); ++i) {
    if (active_[i].empty()) continue;
    VirtualLink& link = grid_.link(i);
    const std::int64_t update = now / link.bg_update_period;
    if (update != links_[i].held_update) {
      // Draw k of a link comes from its own counter-addressed stream, so a
      // lazily refreshed load equals an eagerly maintained one.
      RandomSource rng(mix_seed(links_[i].seed, static_cast<std::uint64_t>(update)));
      update_background_load(link, rng, update * link.bg_update_period);
      links_[i].held_update = update;
    }
  }
}

std::vector<FinishedTransfer> TransferEngine::advance(Tick now) {
  std::vector<FinishedTransfer> finished;
  thread_local std::vector<double> credits;
  const std::span<const Protocol> protocols(grid_.protocols());
  for (std::size_t i = 0; i < active_.size(); ++i) {
    auto& transfers = active_[i];
    if (transfers.empty()) continue;
    credits.resize(transfers.size());
    credit_tick(grid_.link(i), transfers, protocols, credits);

    auto done = std::stable_partition(transfers.begin(), transfers.end(),
                                      [](const ActiveTransfer& t) { return t.remaining > 0.0; });
    for (auto it = done; it != transfers.end(); ++it) {
      drop_process_ref(i, it->process);
      --active_count_;
      FinishedTransfer f{std::move(*it), now, std::nullopt};
      if (f.transfer.kind == ProfileKind::data_placement) {
        StorageElement& se = grid_.storage_element(f.transfer.dst.index);
        se.reserved_mb = std::max(0.0, se.reserved_mb - f.transfer.size);
        const std::size_t file = grid_.replicas()[f.transfer.replica].file;
        f.new_replica = grid_.add_replica(file, f.transfer.dst.index, now, placement_ttl_);
      }
      finished.push_back(std::move(f));
    }
    transfers.erase(done, transfers.end());
  }
  return finished;
}

void TransferEngine::cancel_owner(std::size_t job) {
  auto owned = [job](const ActiveTransfer& t) { return t.owner_job && *t.owner_job == job; };
  for (std::size_t i = 0; i < active_.size(); ++i) {
    auto& transfers = active_[i];
    for (const auto& t : transfers) {
      if (!owned(t)) continue;
      drop_process_ref(i, t.process);
      --active_count_;
      release(t);
    }
    std::erase_if(transfers, owned);
  }
  for (const auto& t : pending_) {
    if (owned(t)) release(t);
  }
  std::erase_if(pending_, owned);
}

void TransferEngine::release(const ActiveTransfer& t) {
  if (t.kind == ProfileKind::data_placement) {
    StorageElement& se = grid_.storage_element(t.dst.index);
    se.reserved_mb = std::max(0.0, se.reserved_mb - t.size);
  }
}

void TransferEngine::add_process_ref(std::size_t link, std::size_t process) {
  auto& refs = links_[link].process_refs;
  for (auto& [p, n] : refs) {
    if (p == process) {
      ++n;
      return;
    }
  }
  refs.emplace_back(process, 1);
  grid_.link(link).campaign_load = static_cast<int>(refs.size());
}

void TransferEngine::drop_process_ref(std::size_t link, std::size_t process) {
  auto& refs = links_[link].process_refs;
  for (auto it = refs.begin(); it != refs.end(); ++it) {
    if (it->first != process) continue;
    if (--it->second == 0) refs.erase(it);
    grid_.link(link).campaign_load = static_cast<int>(refs.size());
    return;
  }
  throw InternalError("dropping unknown process from link " + grid_.links()[link].id);
}

}  // namespace dapsim
