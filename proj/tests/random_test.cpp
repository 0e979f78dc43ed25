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
#include <set>

#include "dapsim/error.hpp"
#include "dapsim/random.hpp"

using namespace dapsim;

TEST_CASE("normal_draw with zero sigma returns mu exactly") {
  RandomSource rng(1);
  CHECK(normal_draw(rng, 5.0, 0.0) == 5.0);
  CHECK(normal_draw(rng, -5.0, 0.0) == -5.0);
}

TEST_CASE("normal_draw rejects negative sigma") {
  RandomSource rng(1);
  CHECK_THROWS_AS(normal_draw(rng, 0.0, -1.0), ValidationError);
}

TEST_CASE("normal_draw sample moments") {
  RandomSource rng(2024);
  constexpr int n = 100'000;
  double sum = 0.0;
  double sum_sq = 0.0;
  int above_one_sd = 0;
  for (int i = 0; i < n; ++i) {
    const double v = normal_draw(rng, 36.9, 14.4);
    sum += v;
    sum_sq += v * v;
    if (v > 36.9 + 14.4) ++above_one_sd;
  }
  const double mean = sum / n;
  const double sd = std::sqrt(sum_sq / n - mean * mean);
  // Standard error of the mean is 14.4 / sqrt(1e5) ~ 0.046.
  CHECK(std::abs(mean - 36.9) < 0.2);
  CHECK(std::abs(sd - 14.4) < 0.15);
  // P(Z > 1) = 0.158655; binomial standard error ~ 0.00116.
  CHECK(std::abs(above_one_sd / double(n) - 0.158655) < 0.005);
}

TEST_CASE("uniform stays in [0, 1) and uniform_int covers its closed range") {
  RandomSource rng(9);
  std::set<std::int64_t> seen;
  for (int i = 0; i < 10'000; ++i) {
    const double u = rng.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    const auto k = rng.uniform_int(-2, 3);
    REQUIRE(k >= -2);
    REQUIRE(k <= 3);
    seen.insert(k);
  }
  CHECK(seen.size() == 6);
  CHECK(rng.uniform_int(4, 4) == 4);
}

TEST_CASE("equal seeds give equal streams; forks are independent of parent use") {
  RandomSource a(77), b(77), c(78);
  bool differs = false;
  for (int i = 0; i < 16; ++i) {
    const auto va = a.next_u64();
    CHECK(va == b.next_u64());
    differs |= va != c.next_u64();
  }
  CHECK(differs);

  RandomSource parent(5);
  const auto first = parent.fork(3).next_u64();
  parent.next_u64();
  CHECK(parent.fork(3).next_u64() == first);
  CHECK(parent.fork(4).next_u64() != first);
}

TEST_CASE("mix_seed and hash_id separate nearby keys") {
  CHECK(mix_seed(1, 2) != mix_seed(2, 1));
  CHECK(mix_seed(0, 0) != mix_seed(0, 1));
  CHECK(hash_id("SE->WN") != hash_id("WN->SE"));
  CHECK(hash_id("") == 0xCBF29CE484222325ULL);
}
