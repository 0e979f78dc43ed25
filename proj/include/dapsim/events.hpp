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

#include <ostream>
#include <string>
#include <vector>

#include "dapsim/grid_model.hpp"

namespace dapsim {

struct Event {
  Tick tick = 0;
  std::string kind;
  std::string subject;
  std::string detail;
};

/// Debug event log; a disabled log drops records without formatting them.
class EventLog {
 public:
  explicit EventLog(bool enabled = false) : enabled_(enabled) {}

  bool enabled() const noexcept { return enabled_; }

  template <class Detail>
  void record(Tick tick, const char* kind, const std::string& subject, Detail&& detail) {
    if (enabled_) events_.push_back(Event{tick, kind, subject, std::string(std::forward<Detail>(detail))});
  }

  const std::vector<Event>& events() const noexcept { return events_; }
  std::vector<Event> release() { return std::move(events_); }

 private:
  bool enabled_;
  std::vector<Event> events_;
};

/// Writes `tick,event_kind,subject_id,detail`, one event per line.
void write_event_log(std::ostream& out, const std::vector<Event>& events);

}  // namespace dapsim
