/*
 * Copyright 2026 The fliscc Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
//
// Every random draw in a simulation comes from a stream keyed by
// (experiment seed, purpose, entity, round). Streams never share state, so a
// device's draws do not depend on the order in which devices are scheduled.

#include <array>
#include <cstdint>
#include <limits>

namespace fliscc {

class Philox4x32 {
 public:
  using result_type = std::uint32_t;
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  Philox4x32() = default;
  Philox4x32(Key key, Counter counter) : key_(key), counter_(counter) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() {
    if (index_ == 4) {
      block_ = bijection(counter_, key_);
      increment();
      index_ = 0;
    }
    return block_[index_++];
  }

  /// Ten-round Philox bijection of one counter block.
  static constexpr Counter bijection(Counter ctr, Key key) {
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += kWeyl0;
        key[1] += kWeyl1;
      }
      const std::uint64_t p0 = std::uint64_t{kMul0} * ctr[0];
      const std::uint64_t p1 = std::uint64_t{kMul1} * ctr[2];
      const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
      const auto lo0 = static_cast<std::uint32_t>(p0);
      const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
      const auto lo1 = static_cast<std::uint32_t>(p1);
      ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
  }

 private:
  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

  void increment() {
    for (auto& word : counter_) {
      if (++word != 0) break;
    }
  }

  Key key_{};
  Counter counter_{};
  Counter block_{};
  int index_ = 4;
};

/// What a stream is used for; part of the stream key so that, e.g., the
/// channel draw and the noise draw of the same round are independent.
enum class StreamPurpose : std::uint32_t {
  kPartition = 1,
  kLocalTraining = 2,
  kChannel = 3,
  kNoise = 4,
  kProbe = 5,
  kInit = 6,
  kDataGen = 7,
  kTest = 8,
};

/// Opens the stream for (seed, purpose, entity, round). The 64-bit seed is
/// the Philox key; the remaining words seed the high counter words and the
/// low counter word walks the stream.
inline Philox4x32 make_stream(std::uint64_t seed, StreamPurpose purpose,
                              std::uint32_t entity, std::uint32_t round) {
  const Philox4x32::Key key = {static_cast<std::uint32_t>(seed),
                               static_cast<std::uint32_t>(seed >> 32)};
  const Philox4x32::Counter counter = {0u, static_cast<std::uint32_t>(purpose),
                                       entity, round};
  return Philox4x32(key, counter);
}

/// Entity id used for server-side streams (channel, noise).
inline constexpr std::uint32_t kServerEntity = 0xFFFFFFFFu;

}  // namespace fliscc
