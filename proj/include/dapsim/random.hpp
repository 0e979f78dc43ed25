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

#include <array>
#include <cstdint>
#include <string_view>

namespace dapsim {

/// Seeded pseudo-random source (xoshiro256** seeded through splitmix64).
///
/// The generator is cheap to construct, which lets the simulator derive
/// counter-addressed substreams: `RandomSource(mix_seed(link_seed, k))` is the
/// stream used for the k-th background update of a link, independent of how
/// many other links or events exist.
class RandomSource {
 public:
  explicit RandomSource(std::uint64_t seed = 0);

  std::uint64_t seed() const noexcept { return seed_; }

  std::uint64_t next_u64() noexcept;

  /// Uniform on [0, 1) with 53 bits of resolution.
  double uniform() noexcept;
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

  /// Uniform integer on the closed range [lo, hi].
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) noexcept;

  /// Standard normal variate (Marsaglia polar method).
  double standard_normal() noexcept;

  /// A child stream keyed by `stream`; the parent state is not advanced.
  RandomSource fork(std::uint64_t stream) const noexcept;

 private:
  std::uint64_t seed_;
  std::array<std::uint64_t, 4> state_{};
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// N(mu, sigma^2) draw. sigma == 0 returns mu exactly; sigma < 0 throws
/// ValidationError.
double normal_draw(RandomSource& rng, double mu, double sigma);

std::uint64_t splitmix64(std::uint64_t x) noexcept;
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) noexcept;
/// FNV-1a, used to key substreams by identifiers.
std::uint64_t hash_id(std::string_view id) noexcept;

}  // namespace dapsim
