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

#include <compare>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace dapsim {

/// One tick abstracts one second of wall time.
using Tick = std::int64_t;

enum class HostKind { storage_element, worker_node };

/// Typed index of a host inside a Grid.
struct HostRef {
  HostKind kind = HostKind::storage_element;
  std::size_t index = 0;

  friend auto operator<=>(const HostRef&, const HostRef&) = default;
};

enum class ProfileKind { data_placement, stage_in, remote_access };

const char* to_string(ProfileKind kind) noexcept;
ProfileKind parse_profile_kind(std::string_view name);

struct Protocol {
  std::string name;
  double overhead = 0.0;  // fraction of each chunk lost to coordination, in [0, 1)
};

struct StorageElement {
  std::string id;
  std::size_t data_center = 0;
  double capacity_mb = 0.0;
  double quota_mb = 0.0;     // admissible volume for data placement; defaults to capacity
  double used_mb = 0.0;      // sum of resident replica sizes
  double reserved_mb = 0.0;  // space promised to in-flight placements
  std::vector<std::size_t> replicas;
};

struct WorkerNode {
  std::string id;
  std::size_t data_center = 0;
  double mips = 1.0;
  int slots = 1;
  double scratch_mb = 0.0;
  double scratch_used_mb = 0.0;
  int busy_slots = 0;
};

/// Uni-directional end-to-end channel between two hosts.
struct VirtualLink {
  std::string id;  // "<src>-><dst>"
  HostRef src;
  HostRef dst;
  double bandwidth = 0.0;  // MB per tick
  double bg_mu = 0.0;
  double bg_sigma = 0.0;
  Tick bg_update_period = 1;
  double background_load = 0.0;
  int campaign_load = 0;
};

struct File {
  std::string id;
  double size_mb = 0.0;
};

struct Replica {
  std::size_t file = 0;
  std::size_t location = 0;  // storage element index
  Tick created_at = 0;
  std::optional<Tick> ttl;   // absent means permanent
  bool resident = true;
};

struct DataCenter {
  std::string id;
  std::vector<std::size_t> storage_elements;
  std::vector<std::size_t> worker_nodes;
};

class Grid {
 public:
  const std::vector<DataCenter>& data_centers() const noexcept { return data_centers_; }
  const std::vector<StorageElement>& storage_elements() const noexcept { return storage_elements_; }
  const std::vector<WorkerNode>& worker_nodes() const noexcept { return worker_nodes_; }
  const std::vector<VirtualLink>& links() const noexcept { return links_; }
  const std::vector<Protocol>& protocols() const noexcept { return protocols_; }
  const std::vector<File>& files() const noexcept { return files_; }
  const std::vector<Replica>& replicas() const noexcept { return replicas_; }

  StorageElement& storage_element(std::size_t i) { return storage_elements_.at(i); }
  WorkerNode& worker_node(std::size_t i) { return worker_nodes_.at(i); }
  VirtualLink& link(std::size_t i) { return links_.at(i); }
  Protocol& protocol(std::size_t i) { return protocols_.at(i); }

  std::optional<HostRef> find_host(std::string_view id) const;
  const std::string& host_id(HostRef host) const;
  std::size_t host_data_center(HostRef host) const;

  /// The unique link for the ordered (src, dst) pair, if declared.
  std::optional<std::size_t> find_link(HostRef src, HostRef dst) const;
  const VirtualLink* find_link(std::string_view src_id, std::string_view dst_id) const;
  std::optional<std::size_t> find_link_by_id(std::string_view link_id) const;
  std::optional<std::size_t> find_protocol(std::string_view name) const;

  // Construction. Each adder validates its own arguments and id uniqueness.
  std::size_t add_protocol(Protocol protocol);
  std::size_t add_data_center(std::string id);
  std::size_t add_storage_element(std::size_t data_center, std::string id, double capacity_mb,
                                  std::optional<double> quota_mb = std::nullopt);
  std::size_t add_worker_node(std::size_t data_center, std::string id, double mips, int slots,
                              double scratch_mb);
  std::size_t add_link(std::string_view src_id, std::string_view dst_id, double bandwidth_mb_per_tick,
                       double bg_mu, double bg_sigma, Tick bg_update_period);

  // Storage accounting.
  std::size_t add_file(std::string id, double size_mb);
  /// Places a replica on `se`; throws ValidationError when capacity would be exceeded.
  std::size_t add_replica(std::size_t file, std::size_t se, Tick now,
                          std::optional<Tick> ttl = std::nullopt);
  void remove_replica(std::size_t replica);
  double free_mb(std::size_t se) const;
  /// Remaining placement quota on `se`, counting resident and reserved volume.
  double quota_headroom_mb(std::size_t se) const;

 private:
  std::vector<DataCenter> data_centers_;
  std::vector<StorageElement> storage_elements_;
  std::vector<WorkerNode> worker_nodes_;
  std::vector<VirtualLink> links_;
  std::vector<Protocol> protocols_;
  std::vector<File> files_;
  std::vector<Replica> replicas_;

  std::unordered_map<std::string, HostRef> hosts_;
  std::unordered_map<std::string, std::size_t> data_center_ids_;
  std::unordered_map<std::string, std::size_t> file_ids_;
  std::map<std::pair<HostRef, HostRef>, std::size_t> link_index_;
};

/// Builds and validates a grid from the JSON topology document
/// (`protocols`, `data_centers`, `links`). Bandwidth is read in Mbps and
/// stored as MB/tick (divided by 8).
Grid build_grid(std::string_view json_text);
Grid load_grid(const std::filesystem::path& path);
/// Inverse of build_grid for the static topology (files and replicas are not serialized).
std::string grid_to_json(const Grid& grid);

/// The calibrated parameter vector: protocol overhead and the background
/// load distribution (mean, standard deviation).
struct SimulatorSetting {
  double overhead = 0.0;
  double mu = 0.0;
  double sigma = 0.0;

  friend bool operator==(const SimulatorSetting&, const SimulatorSetting&) = default;
};

/// Where a setting applies. An absent protocol means every protocol; an
/// empty link list means every link.
struct SettingTarget {
  std::optional<std::string> protocol;
  std::vector<std::string> links;
};

struct SettingSpec {
  SimulatorSetting theta;
  SettingTarget target;
};

void apply_setting(Grid& grid, const SimulatorSetting& theta, const SettingTarget& target);
SettingSpec parse_setting(std::string_view json_text);
SettingSpec load_setting(const std::filesystem::path& path);
std::string setting_to_json(const SettingSpec& spec);

/// Reads a whole file; throws IoError.
std::string read_text_file(const std::filesystem::path& path);

}  // namespace dapsim
