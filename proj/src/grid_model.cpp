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

#include "dapsim/grid_model.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "dapsim/error.hpp"
#include "json_util.hpp"

namespace dapsim {

using nlohmann::json;

const char* to_string(ProfileKind kind) noexcept {
  switch (kind) {
    case ProfileKind::data_placement: return "data_placement";
    case ProfileKind::stage_in: return "stage_in";
    case ProfileKind::remote_access: return "remote_access";
  }
  return "unknown";
}

ProfileKind parse_profile_kind(std::string_view name) {
  if (name == "data_placement") return ProfileKind::data_placement;
  if (name == "stage_in") return ProfileKind::stage_in;
  if (name == "remote_access") return ProfileKind::remote_access;
  throw ValidationError("unknown access profile '" + std::string(name) + "'");
}

std::optional<HostRef> Grid::find_host(std::string_view id) const {
  auto it = hosts_.find(std::string(id));
  if (it == hosts_.end()) return std::nullopt;
  return it->second;
}

const std::string& Grid::host_id(HostRef host) const {
  return host.kind == HostKind::storage_element ? storage_elements_.at(host.index).id
                                                : worker_nodes_.at(host.index).id;
}

std::size_t Grid::host_data_center(HostRef host) const {
  return host.kind == HostKind::storage_element ? storage_elements_.at(host.index).data_center
                                                : worker_nodes_.at(host.index).data_center;
}

std::optional<std::size_t> Grid::find_link(HostRef src, HostRef dst) const {
  auto it = link_index_.find({src, dst});
  if (it == link_index_.end()) return std::nullopt;
  return it->second;
}

const VirtualLink* Grid::find_link(std::string_view src_id, std::string_view dst_id) const {
  auto src = find_host(src_id);
  auto dst = find_host(dst_id);
  if (!src || !dst) return nullptr;
  auto idx = find_link(*src, *dst);
  return idx ? &links_[*idx] : nullptr;
}

std::optional<std::size_t> Grid::find_link_by_id(std::string_view link_id) const {
  for (std::size_t i = 0; i < links_.size(); ++i) {
    if (links_[i].id == link_id) return i;
  }
  return std::nullopt;
}

std::optional<std::size_t> Grid::find_protocol(std::string_view name) const {
  for (std::size_t i = 0; i < protocols_.size(); ++i) {
    if (protocols_[i].name == name) return i;
  }
  return std::nullopt;
}

std::size_t Grid::add_protocol(Protocol protocol) {
  if (protocol.name.empty()) throw ValidationError("protocol name must not be empty");
  if (find_protocol(protocol.name)) throw ValidationError("duplicate protocol '" + protocol.name + "'");
  if (!(protocol.overhead >= 0.0 && protocol.overhead < 1.0)) {
    throw ValidationError("protocol '" + protocol.name + "': overhead must lie in [0, 1)");
  }
  protocols_.push_back(std::move(protocol));
  return protocols_.size() - 1;
}

std::size_t Grid::add_data_center(std::string id) {
  if (id.empty()) throw ValidationError("data center id must not be empty");
  if (data_center_ids_.count(id)) throw ValidationError("duplicate data center id '" + id + "'");
  data_center_ids_.emplace(id, data_centers_.size());
  data_centers_.push_back(DataCenter{std::move(id), {}, {}});
  return data_centers_.size() - 1;
}

std::size_t Grid::add_storage_element(std::size_t data_center, std::string id, double capacity_mb,
                                      std::optional<double> quota_mb) {
  if (data_center >= data_centers_.size()) throw ValidationError("unknown data center index");
  if (id.empty()) throw ValidationError("storage element id must not be empty");
  if (hosts_.count(id)) throw ValidationError("duplicate host id '" + id + "'");
  if (!(capacity_mb >= 0.0)) throw ValidationError("storage element '" + id + "': negative capacity");
  const double quota = quota_mb.value_or(capacity_mb);
  if (!(quota >= 0.0)) throw ValidationError("storage element '" + id + "': negative quota");
  const std::size_t index = storage_elements_.size();
  hosts_.emplace(id, HostRef{HostKind::storage_element, index});
  StorageElement se;
  se.id = std::move(id);
  se.data_center = data_center;
  se.capacity_mb = capacity_mb;
  se.quota_mb = quota;
  storage_elements_.push_back(std::move(se));
  data_centers_[data_center].storage_elements.push_back(index);
  return index;
}

std::size_t Grid::add_worker_node(std::size_t data_center, std::string id, double mips, int slots,
                                  double scratch_mb) {
  if (data_center >= data_centers_.size()) throw ValidationError("unknown data center index");
  if (id.empty()) throw ValidationError("worker node id must not be empty");
  if (hosts_.count(id)) throw ValidationError("duplicate host id '" + id + "'");
  if (!(mips > 0.0)) throw ValidationError("worker node '" + id + "': mips must be positive");
  if (slots < 1) throw ValidationError("worker node '" + id + "': slots must be >= 1");
  if (!(scratch_mb >= 0.0)) throw ValidationError("worker node '" + id + "': negative scratch");
  const std::size_t index = worker_nodes_.size();
  hosts_.emplace(id, HostRef{HostKind::worker_node, index});
  WorkerNode wn;
  wn.id = std::move(id);
  wn.data_center = data_center;
  wn.mips = mips;
  wn.slots = slots;
  wn.scratch_mb = scratch_mb;
  worker_nodes_.push_back(std::move(wn));
  data_centers_[data_center].worker_nodes.push_back(index);
  return index;
}

std::size_t Grid::add_link(std::string_view src_id, std::string_view dst_id, double bandwidth,
                           double bg_mu, double bg_sigma, Tick bg_update_period) {
  auto src = find_host(src_id);
  auto dst = find_host(dst_id);
  if (!src) throw ValidationError("link endpoint '" + std::string(src_id) + "' is not a declared host");
  if (!dst) throw ValidationError("link endpoint '" + std::string(dst_id) + "' is not a declared host");
  std::string id = std::string(src_id) + "->" + std::string(dst_id);
  if (link_index_.count({*src, *dst})) throw ValidationError("duplicate link " + id);
  if (!(bandwidth > 0.0) || !std::isfinite(bandwidth)) {
    throw ValidationError("link " + id + ": bandwidth must be positive");
  }
  if (!std::isfinite(bg_mu)) throw ValidationError("link " + id + ": bg_mu must be finite");
  if (!(bg_sigma >= 0.0) || !std::isfinite(bg_sigma)) {
    throw ValidationError("link " + id + ": bg_sigma must be >= 0");
  }
  if (bg_update_period < 1) throw ValidationError("link " + id + ": bg_update_period must be >= 1");
  VirtualLink link;
  link.id = std::move(id);
  link.src = *src;
  link.dst = *dst;
  link.bandwidth = bandwidth;
  link.bg_mu = bg_mu;
  link.bg_sigma = bg_sigma;
  link.bg_update_period = bg_update_period;
  link_index_.emplace(std::make_pair(*src, *dst), links_.size());
  links_.push_back(std::move(link));
  return links_.size() - 1;
}

std::size_t Grid::add_file(std::string id, double size_mb) {
  if (!(size_mb > 0.0) || !std::isfinite(size_mb)) {
    throw ValidationError("file '" + id + "': size must be positive");
  }
  if (file_ids_.count(id)) throw ValidationError("duplicate file id '" + id + "'");
  file_ids_.emplace(id, files_.size());
  files_.push_back(File{std::move(id), size_mb});
  return files_.size() - 1;
}

std::size_t Grid::add_replica(std::size_t file, std::size_t se, Tick now, std::optional<Tick> ttl) {
  const File& f = files_.at(file);
  StorageElement& store = storage_elements_.at(se);
  if (store.used_mb + store.reserved_mb + f.size_mb > store.capacity_mb) {
    throw ValidationError("storage element '" + store.id + "' cannot hold file '" + f.id + "'");
  }
  store.used_mb += f.size_mb;
  store.replicas.push_back(replicas_.size());
  replicas_.push_back(Replica{file, se, now, ttl, true});
  return replicas_.size() - 1;
}

void Grid::remove_replica(std::size_t replica) {
  Replica& r = replicas_.at(replica);
  if (!r.resident) return;
  StorageElement& store = storage_elements_.at(r.location);
  store.used_mb -= files_.at(r.file).size_mb;
  if (store.used_mb < 0.0) store.used_mb = 0.0;
  std::erase(store.replicas, replica);
  r.resident = false;
}

double Grid::free_mb(std::size_t se) const {
  const StorageElement& s = storage_elements_.at(se);
  return s.capacity_mb - s.used_mb - s.reserved_mb;
}

double Grid::quota_headroom_mb(std::size_t se) const {
  const StorageElement& s = storage_elements_.at(se);
  return std::min(s.quota_mb, s.capacity_mb) - s.used_mb - s.reserved_mb;
}

Grid build_grid(std::string_view json_text) {
  const json doc = detail::parse_json(json_text, "topology");
  if (!doc.is_object()) throw ValidationError("topology: top level must be an object");
  Grid grid;

  for (const auto& p : detail::array_or_empty(doc, "protocols", "topology")) {
    grid.add_protocol(Protocol{detail::require_string(p, "name", "protocol"),
                               detail::number_or(p, "overhead", 0.0, "protocol")});
  }

  for (const auto& dc : detail::array_or_empty(doc, "data_centers", "topology")) {
    const std::size_t dci = grid.add_data_center(detail::require_string(dc, "id", "data center"));
    for (const auto& se : detail::array_or_empty(dc, "storage_elements", "data center")) {
      std::optional<double> quota;
      if (se.contains("quota_mb")) quota = detail::require_number(se, "quota_mb", "storage element");
      grid.add_storage_element(dci, detail::require_string(se, "id", "storage element"),
                               detail::number_or(se, "capacity_mb", 1.0e12, "storage element"), quota);
    }
    for (const auto& wn : detail::array_or_empty(dc, "worker_nodes", "data center")) {
      grid.add_worker_node(dci, detail::require_string(wn, "id", "worker node"),
                           detail::number_or(wn, "mips", 1000.0, "worker node"),
                           static_cast<int>(detail::integer_or(wn, "slots", 1, "worker node")),
                           detail::number_or(wn, "scratch_mb", 1.0e9, "worker node"));
    }
  }

  for (const auto& l : detail::array_or_empty(doc, "links", "topology")) {
    const double mbps = detail::require_number(l, "bandwidth_mbps", "link");
    grid.add_link(detail::require_string(l, "src", "link"), detail::require_string(l, "dst", "link"),
                  mbps / 8.0, detail::number_or(l, "bg_mu", 0.0, "link"),
                  detail::number_or(l, "bg_sigma", 0.0, "link"),
                  detail::integer_or(l, "bg_update_period", 1, "link"));
  }
  return grid;
}

Grid load_grid(const std::filesystem::path& path) { return build_grid(read_text_file(path)); }

std::string grid_to_json(const Grid& grid) {
  json doc;
  doc["protocols"] = json::array();
  for (const auto& p : grid.protocols()) doc["protocols"].push_back({{"name", p.name}, {"overhead", p.overhead}});
  doc["data_centers"] = json::array();
  for (const auto& dc : grid.data_centers()) {
    json d{{"id", dc.id}, {"storage_elements", json::array()}, {"worker_nodes", json::array()}};
    for (std::size_t i : dc.storage_elements) {
      const auto& se = grid.storage_elements()[i];
      d["storage_elements"].push_back({{"id", se.id}, {"capacity_mb", se.capacity_mb}, {"quota_mb", se.quota_mb}});
    }
    for (std::size_t i : dc.worker_nodes) {
      const auto& wn = grid.worker_nodes()[i];
      d["worker_nodes"].push_back(
          {{"id", wn.id}, {"mips", wn.mips}, {"slots", wn.slots}, {"scratch_mb", wn.scratch_mb}});
    }
    doc["data_centers"].push_back(std::move(d));
  }
  doc["links"] = json::array();
  for (const auto& l : grid.links()) {
    doc["links"].push_back({{"src", grid.host_id(l.src)},
                            {"dst", grid.host_id(l.dst)},
                            {"bandwidth_mbps", l.bandwidth * 8.0},
                            {"bg_mu", l.bg_mu},
                            {"bg_sigma", l.bg_sigma},
                            {"bg_update_period", l.bg_update_period}});
  }
  return doc.dump(2);
}

void apply_setting(Grid& grid, const SimulatorSetting& theta, const SettingTarget& target) {
  if (!(theta.overhead >= 0.0 && theta.overhead < 1.0)) {
    throw ValidationError("setting: overhead must lie in [0, 1)");
  }
  if (!(theta.sigma >= 0.0) || !std::isfinite(theta.mu)) {
    throw ValidationError("setting: sigma must be >= 0 and mu finite");
  }
  if (target.protocol) {
    auto p = grid.find_protocol(*target.protocol);
    if (!p) throw ValidationError("setting: unknown protocol '" + *target.protocol + "'");
    grid.protocol(*p).overhead = theta.overhead;
  } else {
    for (std::size_t i = 0; i < grid.protocols().size(); ++i) grid.protocol(i).overhead = theta.overhead;
  }
  auto set_link = [&](std::size_t i) {
    grid.link(i).bg_mu = theta.mu;
    grid.link(i).bg_sigma = theta.sigma;
  };
  if (target.links.empty()) {
    for (std::size_t i = 0; i < grid.links().size(); ++i) set_link(i);
  } else {
    for (const auto& id : target.links) {
      auto i = grid.find_link_by_id(id);
      if (!i) throw ValidationError("setting: unknown link '" + id + "'");
      set_link(*i);
    }
  }
}

SettingSpec parse_setting(std::string_view json_text) {
  const json doc = detail::parse_json(json_text, "setting");
  if (!doc.is_object()) throw ValidationError("setting: top level must be an object");
  SettingSpec spec;
  spec.theta.overhead = detail::require_number(doc, "overhead", "setting");
  spec.theta.mu = detail::require_number(doc, "mu", "setting");
  spec.theta.sigma = detail::require_number(doc, "sigma", "setting");
  if (doc.contains("protocol") && !doc["protocol"].is_null()) {
    spec.target.protocol = detail::require_string(doc, "protocol", "setting");
  }
  for (const auto& l : detail::array_or_empty(doc, "links", "setting")) {
    if (!l.is_string()) throw ValidationError("setting: links must be strings");
    spec.target.links.push_back(l.get<std::string>());
  }
  return spec;
}

SettingSpec load_setting(const std::filesystem::path& path) { return parse_setting(read_text_file(path)); }

std::string setting_to_json(const SettingSpec& spec) {
  json doc{{"overhead", spec.theta.overhead}, {"mu", spec.theta.mu}, {"sigma", spec.theta.sigma}};
  if (spec.target.protocol) doc["protocol"] = *spec.target.protocol;
  if (!spec.target.links.empty()) doc["links"] = spec.target.links;
  return doc.dump(2);
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace dapsim
