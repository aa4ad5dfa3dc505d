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

// Sample-arrival schedules, label partitions, and the per-round sensing step
// that grows a device's cumulative dataset.

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "fliscc/core_model.hpp"

namespace fliscc {

enum class ScheduleStrategy { kUniform, kFrontLoaded, kAllAtStart };

ScheduleStrategy parse_schedule_strategy(std::string_view name);
std::string_view to_string(ScheduleStrategy strategy);

/// Per-device totals spread over T rounds.
///   uniform:      floor(total/T) per round, remainder to the earliest rounds.
///   front_loaded: ceil(total/2) in round 1, the rest uniform over rounds 2..T.
///   all_at_start: everything in round 1.
SensingSchedule build_schedule(ScheduleStrategy strategy,
                               std::span<const std::int64_t> totals_per_device,
                               int rounds,
                               std::span<const std::int64_t> initial_sizes = {});

/// Equal totals for all N devices.
SensingSchedule build_schedule(ScheduleStrategy strategy,
                               std::int64_t total_per_device, int devices,
                               int rounds);

/// Explicit N x T matrix of D_t^n. Throws std::invalid_argument on ragged or
/// negative input, or when the shape disagrees with the expected (N, T).
SensingSchedule build_schedule_explicit(
    std::vector<std::vector<std::int64_t>> matrix, int devices, int rounds,
    std::span<const std::int64_t> initial_sizes = {});

enum class PartitionMode { kIid, kDirichlet };

PartitionMode parse_partition_mode(std::string_view name);
std::string_view to_string(PartitionMode mode);

struct PartitionSpec {
  PartitionMode mode = PartitionMode::kIid;
  double gamma = 1.0;  // Dirichlet concentration; smaller means more skew
  std::uint64_t seed = 0;
};

/// Splits pool row indices into N disjoint arrival streams.
///
/// IID: every class is shuffled and dealt round-robin, so per-device sizes and
/// class histograms differ by at most one. Dirichlet: for each class a
/// proportion vector p ~ Dir(gamma * 1_N) decides how that class's samples are
/// divided among devices. Each stream is shuffled into its arrival order.
/// Deterministic given spec.seed.
std::vector<std::vector<std::size_t>> partition_assign(const SampleBatch& pool,
                                                       const PartitionSpec& spec,
                                                       int devices);

/// A device's arrival order over a shared pool.
struct SampleStream {
  const SampleBatch* pool = nullptr;
  std::vector<std::size_t> order;
  std::size_t cursor = 0;

  std::size_t remaining() const { return order.size() - cursor; }
};

/// Throws ConfigError unless every stream can supply the device's initial
/// samples plus its whole schedule row.
void validate_streams(const SensingSchedule& schedule,
                      std::span<const SampleStream> streams);

/// Loads the S_0^n initial samples of device n.
void sense_initial(DeviceState& device, const SensingSchedule& schedule,
                   SampleStream& stream);

/// Appends the D_t^n samples of round t to the device's cumulative dataset.
/// Throws std::logic_error if the stream runs dry (validate_streams prevents
/// this at setup).
void sense(DeviceState& device, int round, const SensingSchedule& schedule,
           SampleStream& stream);

}  // namespace fliscc
