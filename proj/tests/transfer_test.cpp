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

#include <doctest.h>

#include <cmath>
#include <vector>

#include "dapsim/transfer.hpp"
#include "fixtures.hpp"

using namespace dapsim;

namespace {

VirtualLink make_link(double bandwidth, double background, int campaign) {
  VirtualLink link;
  link.id = "L";
  link.bandwidth = bandwidth;
  link.background_load = background;
  link.campaign_load = campaign;
  return link;
}

ActiveTransfer make_transfer(std::size_t process, int n_threads, double size) {
  ActiveTransfer t;
  t.process = process;
  t.n_threads = n_threads;
  t.size = size;
  t.remaining = size;
  return t;
}

// Grid with a placement source, a quota-limited destination and a worker node.
Grid placement_grid() {
  Grid g;
  const auto a = g.add_data_center("A");
  const auto b = g.add_data_center("B");
  g.add_protocol(Protocol{"gsiftp", 0.0});
  g.add_storage_element(a, "A_SE", 1e9);
  g.add_storage_element(b, "B_SE", 1e9, 200.0);
  g.add_worker_node(b, "B_WN", 1000.0, 4, 1e9);
  g.add_link("A_SE", "B_SE", 100.0, 0.0, 0.0, 1);
  g.add_link("A_SE", "B_WN", 100.0, 0.0, 0.0, 1);
  return g;
}

}  // namespace

TEST_CASE("chunk_size evaluates the per-thread fair share") {
  const Protocol plain{"p", 0.0};
  const Protocol lossy{"q", 0.02};
  CHECK(chunk_size(make_link(100.0, 3.0, 1), 2, plain) == doctest::Approx(12.5).epsilon(1e-15));
  CHECK(chunk_size(make_link(1250.0, 0.0, 1), 1, lossy) == doctest::Approx(1225.0).epsilon(1e-15));
  CHECK(chunk_size(make_link(100.0, 0.0, 4), 1, plain) == 25.0);
}

TEST_CASE("background load is clamped at zero and held between updates") {
  VirtualLink link = make_link(100.0, 7.0, 0);
  RandomSource rng(3);
  link.bg_mu = 0.0;
  link.bg_sigma = 0.0;
  update_background_load(link, rng, 0);
  CHECK(link.background_load == 0.0);

  link.bg_mu = -5.0;
  update_background_load(link, rng, 1);
  CHECK(link.background_load == 0.0);

  link.bg_mu = -1.0;
  link.bg_sigma = 2.0;
  for (int i = 0; i < 1000; ++i) {
    update_background_load(link, rng, i);
    REQUIRE(link.background_load >= 0.0);
  }

  link.bg_update_period = 10;
  CHECK_THROWS_AS(update_background_load(link, rng, 15), InternalError);
  CHECK_NOTHROW(update_background_load(link, rng, 20));
}

TEST_CASE("two threads of one job split the process share") {
  VirtualLink link = make_link(100.0, 0.0, 1);
  const std::vector<Protocol> protocols{{"p", 0.0}};
  std::vector<ActiveTransfer> transfers{make_transfer(0, 2, 100.0), make_transfer(0, 2, 100.0)};

  auto credits = advance_link_tick(link, transfers, protocols);
  CHECK(credits == std::vector<double>{50.0, 50.0});
  credits = advance_link_tick(link, transfers, protocols);
  CHECK(credits == std::vector<double>{50.0, 50.0});
  for (const auto& t : transfers) {
    CHECK(t.remaining == 0.0);
    CHECK(t.conth_accum == 100.0);
    CHECK(t.conpr_accum == 0.0);
  }
}

TEST_CASE("separate processes count as competing traffic") {
  VirtualLink link = make_link(100.0, 0.0, 2);
  const std::vector<Protocol> protocols{{"p", 0.0}};
  std::vector<ActiveTransfer> transfers{make_transfer(0, 1, 500.0), make_transfer(1, 1, 500.0)};
  const auto credits = advance_link_tick(link, transfers, protocols);
  CHECK(credits == std::vector<double>{50.0, 50.0});
  CHECK(transfers[0].conpr_accum == 50.0);
  CHECK(transfers[0].conth_accum == 0.0);
}

TEST_CASE("the last chunk is truncated at the remaining volume") {
  VirtualLink link = make_link(1250.0, 0.0, 1);
  const std::vector<Protocol> protocols{{"p", 0.02}};
  std::vector<ActiveTransfer> transfers{make_transfer(0, 1, 10.0)};
  const auto credits = advance_link_tick(link, transfers, protocols);
  CHECK(credits[0] == 10.0);
  CHECK(transfers[0].remaining == 0.0);
}

TEST_CASE("inconsistent campaign load is an internal error") {
  VirtualLink link = make_link(100.0, 0.0, 1);
  const std::vector<Protocol> protocols{{"p", 0.0}};
  std::vector<ActiveTransfer> transfers{make_transfer(0, 1, 10.0), make_transfer(1, 1, 10.0)};
  CHECK_THROWS_AS(advance_link_tick(link, transfers, protocols), InternalError);
}

TEST_CASE("credits on a link never exceed its capacity ceiling") {
  RandomSource rng(11);
  const std::vector<Protocol> protocols{{"a", 0.0}, {"b", 0.05}};
  for (int trial = 0; trial < 500; ++trial) {
    const int processes = static_cast<int>(rng.uniform_int(1, 5));
    std::vector<ActiveTransfer> transfers;
    for (int p = 0; p < processes; ++p) {
      const int threads = static_cast<int>(rng.uniform_int(1, 4));
      for (int k = 0; k < threads; ++k) {
        auto t = make_transfer(static_cast<std::size_t>(p), threads, rng.uniform(1.0, 500.0));
        t.protocol = static_cast<std::size_t>(rng.uniform_int(0, 1));
        transfers.push_back(t);
      }
    }
    VirtualLink link = make_link(rng.uniform(10.0, 200.0), rng.uniform(0.0, 50.0), processes);
    const auto credits = advance_link_tick(link, transfers, protocols);
    double total = 0.0;
    for (double c : credits) total += c;
    const double ceiling = link.bandwidth / (1.0 + link.background_load / link.campaign_load);
    REQUIRE(total <= ceiling * (1.0 + 1e-12));
    REQUIRE(total <= link.bandwidth);
  }
}

TEST_CASE("a heavier background load never finishes a transfer sooner") {
  const std::vector<Protocol> protocols{{"p", 0.0}};
  auto ticks_with = [&](double background) {
    VirtualLink link = make_link(100.0, background, 1);
    std::vector<ActiveTransfer> transfers{make_transfer(0, 1, 1000.0)};
    int ticks = 0;
    while (transfers[0].remaining > 0.0) {
      advance_link_tick(link, transfers, protocols);
      ++ticks;
    }
    return ticks;
  };
  int previous = 0;
  for (double bg : {0.0, 0.5, 1.0, 2.5, 7.0, 30.0}) {
    const int t = ticks_with(bg);
    CHECK(t >= previous);
    previous = t;
  }
}

TEST_CASE("transfer engine process accounting and admission") {
  Grid g = placement_grid();
  const auto f = g.add_file("f", 50.0);
  const auto r = g.add_replica(f, 0, 0);
  TransferEngine engine(g, 1);
  const HostRef wn{HostKind::worker_node, 0};
  const HostRef b_se{HostKind::storage_element, 1};
  const HostRef a_se{HostKind::storage_element, 0};

  SUBCASE("four threads of one job form one process") {
    const std::size_t process = engine.new_process();
    for (int k = 0; k < 4; ++k) {
      engine.start_transfer(StartRequest{{ProfileKind::remote_access, 0}, r, wn, 0, process, 4}, 0);
    }
    CHECK(g.links()[1].campaign_load == 0);  // registered, not yet moving
    engine.begin_tick(1);
    CHECK(engine.active_on(1).size() == 4);
    CHECK(g.links()[1].campaign_load == 1);
    CHECK(engine.active_on(1).front().start_tick == 1);
  }

  SUBCASE("placement over quota is rejected") {
    const auto big = g.add_file("big", 300.0);
    const auto rb = g.add_replica(big, 0, 0);
    try {
      engine.start_transfer(StartRequest{{ProfileKind::data_placement, 0}, rb, b_se, std::nullopt, 0, 1}, 0);
      FAIL("expected a quota error");
    } catch (const TransferError& e) {
      CHECK(e.reason() == TransferError::Reason::quota_exceeded);
    }
    engine.start_transfer(StartRequest{{ProfileKind::data_placement, 0}, r, b_se, std::nullopt, 0, 1}, 0);
    CHECK(g.storage_elements()[1].reserved_mb == 50.0);
  }

  SUBCASE("missing link and class mismatch") {
    const auto rb = g.add_replica(f, 1, 0);
    try {
      engine.start_transfer(StartRequest{{ProfileKind::data_placement, 0}, rb, a_se, std::nullopt, 0, 1}, 0);
      FAIL("expected a missing link");
    } catch (const TransferError& e) {
      CHECK(e.reason() == TransferError::Reason::missing_link);
      CHECK(std::string(e.what()).find("(B_SE,A_SE)") != std::string::npos);
    }
    try {
      engine.start_transfer(StartRequest{{ProfileKind::remote_access, 0}, r, b_se, std::nullopt, 0, 1}, 0);
      FAIL("expected a class mismatch");
    } catch (const TransferError& e) {
      CHECK(e.reason() == TransferError::Reason::class_mismatch);
    }
  }

  SUBCASE("completed placement creates a replica and releases the reservation") {
    engine.start_transfer(StartRequest{{ProfileKind::data_placement, 0}, r, b_se, std::nullopt, 0, 1}, 0);
    engine.begin_tick(1);
    const auto done = engine.advance(1);
    REQUIRE(done.size() == 1);
    REQUIRE(done[0].new_replica.has_value());
    CHECK(g.replicas()[*done[0].new_replica].location == 1);
    CHECK(g.storage_elements()[1].reserved_mb == 0.0);
    CHECK(g.storage_elements()[1].used_mb == 50.0);
    CHECK(engine.idle());
  }
}
