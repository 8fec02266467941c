// Copyright 2026 The otafl Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <array>
#include <complex>
#include <cstdint>

namespace otafl {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11). The output
/// block is a pure function of (key, counter), which is what lets every
/// Monte Carlo trial own an addressable stream.
struct Philox4x32 {
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter generate(Counter counter, Key key) noexcept;
};

/// A reproducible random stream addressed by (master_seed, stream_index).
///
/// The master seed is the Philox key; the stream index occupies the upper
/// half of the 128-bit counter and the block position the lower half, so
/// distinct indices never overlap. Streams are single-owner: copy one to
/// replay the same draws (used for paired scheme comparisons), never share a
/// mutable instance across threads.
class RngStream {
 public:
  RngStream(std::uint64_t master_seed, std::uint64_t stream_index) noexcept;

  std::uint64_t master_seed() const noexcept { return seed_; }
  std::uint64_t stream_index() const noexcept { return stream_; }

  /// Child stream whose index is a hash of (this index, tag).
  RngStream substream(std::uint64_t tag) const noexcept;

  std::uint32_t next_u32() noexcept;
  std::uint64_t next_u64() noexcept;

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept;

  /// Uniform integer on [0, n); n must be positive.
  std::uint64_t uniform_index(std::uint64_t n) noexcept;

  /// Standard normal via Box-Muller (platform-independent, unlike
  /// std::normal_distribution).
  double normal() noexcept;

  /// Circularly-symmetric CN(0, variance).
  std::complex<double> complex_normal(double variance) noexcept;

 private:
  void refill() noexcept;

  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  Philox4x32::Counter buffer_{};
  int position_ = 4;
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

/// SplitMix64 finaliser, used for deriving stream indices.
std::uint64_t mix64(std::uint64_t x) noexcept;

}  // namespace otafl
