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

#include "fliscc/sensing.hpp"

#include <algorithm>
#include <map>
#include <random>
#include <stdexcept>
#include <string>

#include "fliscc/errors.hpp"
#include "fliscc/rng.hpp"

namespace fliscc {

ScheduleStrategy parse_schedule_strategy(std::string_view name) {
  if (name == "uniform") return ScheduleStrategy::kUniform;
  if (name == "front_loaded") return ScheduleStrategy::kFrontLoaded;
  if (name == "all_at_start") return ScheduleStrategy::kAllAtStart;
  throw ConfigError("unknown schedule strategy '" + std::string(name) + "'");
}

std::string_view to_string(ScheduleStrategy strategy) {
  switch (strategy) {
    case ScheduleStrategy::kUniform:
      return "uniform";
    case ScheduleStrategy::kFrontLoaded:
      return "front_loaded";
    case ScheduleStrategy::kAllAtStart:
      return "all_at_start";
  }
  return "unknown";
}

namespace {

void spread_uniform(std::int64_t total, std::span<std::int64_t> rounds) {
  if (rounds.empty()) return;
  const auto t = static_cast<std::int64_t>(rounds.size());
  const std::int64_t base = total / t;
  const std::int64_t extra = total % t;
  for (std::int64_t i = 0; i < t; ++i) rounds[i] = base + (i < extra ? 1 : 0);
}

}  // namespace

SensingSchedule build_schedule(ScheduleStrategy strategy,
                               std::span<const std::int64_t> totals_per_device,
                               int rounds,
                               std::span<const std::int64_t> initial_sizes) {
  if (rounds < 0) throw std::invalid_argument("schedule: negative round count");
  std::vector<std::vector<std::int64_t>> counts;
  counts.reserve(totals_per_device.size());
  for (std::int64_t total : totals_per_device) {
    if (total < 0) throw std::invalid_argument("schedule: negative total");
    std::vector<std::int64_t> row(rounds, 0);
    if (rounds > 0) {
      switch (strategy) {
        case ScheduleStrategy::kUniform:
          spread_uniform(total, row);
          break;
        case ScheduleStrategy::kAllAtStart:
          row[0] = total;
          break;
        case ScheduleStrategy::kFrontLoaded:
          if (rounds == 1) {
            row[0] = total;
          } else {
            row[0] = (total + 1) / 2;
            spread_uniform(total - row[0], std::span(row).subspan(1));
          }
          break;
      }
    }
    counts.push_back(std::move(row));
  }
  return SensingSchedule(std::move(counts),
                         {initial_sizes.begin(), initial_sizes.end()});
}

SensingSchedule build_schedule(ScheduleStrategy strategy,
                               std::int64_t total_per_device, int devices,
                               int rounds) {
  if (devices < 1) throw std::invalid_argument("schedule: need at least one device");
  std::vector<std::int64_t> totals(devices, total_per_device);
  return build_schedule(strategy, totals, rounds);
}

SensingSchedule build_schedule_explicit(
    std::vector<std::vector<std::int64_t>> matrix, int devices, int rounds,
    std::span<const std::int64_t> initial_sizes) {
  if (static_cast<int>(matrix.size()) != devices) {
    throw std::invalid_argument("schedule matrix has " + std::to_string(matrix.size()) +
                                " rows, expected " + std::to_string(devices));
  }
  for (const auto& row : matrix) {
    if (static_cast<int>(row.size()) != rounds) {
      throw std::invalid_argument("schedule matrix row has " +
                                  std::to_string(row.size()) + " rounds, expected " +
                                  std::to_string(rounds));
    }
  }
  return SensingSchedule(std::move(matrix),
                         {initial_sizes.begin(), initial_sizes.end()});
}

PartitionMode parse_partition_mode(std::string_view name) {
  if (name == "iid") return PartitionMode::kIid;
  if (name == "dirichlet") return PartitionMode::kDirichlet;
  throw ConfigError("unknown partition mode '" + std::string(name) + "'");
}

std::string_view to_string(PartitionMode mode) {
  return mode == PartitionMode::kIid ? "iid" : "dirichlet";
}

std::vector<std::vector<std::size_t>> partition_assign(const SampleBatch& pool,
                                                       const PartitionSpec& spec,
                                                       int devices) {
  if (pool.empty()) throw std::invalid_argument("partition: empty pool");
  if (devices < 1) throw std::invalid_argument("partition: need at least one device");
  if (static_cast<std::size_t>(devices) > pool.size()) {
    throw std::invalid_argument("partition: " + std::to_string(devices) +
                                " devices exceed pool of " +
                                std::to_string(pool.size()) + " samples");
  }
  if (spec.mode == PartitionMode::kDirichlet && !(spec.gamma > 0.0)) {
    throw std::invalid_argument("partition: Dirichlet gamma must be positive");
  }

  auto rng = make_stream(spec.seed, StreamPurpose::kPartition, 0, 0);

  // Ordered by label so iteration order is deterministic.
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < pool.size(); ++i) by_class[pool.labels[i]].push_back(i);
  for (auto& [label, rows] : by_class) std::shuffle(rows.begin(), rows.end(), rng);

  std::vector<std::vector<std::size_t>> streams(devices);
  if (spec.mode == PartitionMode::kIid) {
    std::size_t dealt = 0;
    for (const auto& [label, rows] : by_class) {
      for (std::size_t row : rows) streams[dealt++ % devices].push_back(row);
    }
  } else {
    std::gamma_distribution<double> draw(spec.gamma, 1.0);
    std::vector<double> p(devices);
    for (const auto& [label, rows] : by_class) {
      double total = 0.0;
      for (double& v : p) total += (v = draw(rng));
      if (!(total > 0.0)) {
        // Every gamma variate underflowed; give the class to one device.
        std::fill(p.begin(), p.end(), 0.0);
        p[std::uniform_int_distribution<int>(0, devices - 1)(rng)] = 1.0;
        total = 1.0;
      }
      const auto count = static_cast<double>(rows.size());
      double cumulative = 0.0;
      std::size_t begin = 0;
      for (int n = 0; n < devices; ++n) {
        cumulative += p[n] / total;
        std::size_t end = n + 1 == devices
                              ? rows.size()
                              : std::min(rows.size(), static_cast<std::size_t>(
                                                          cumulative * count + 0.5));
        end = std::max(end, begin);
        streams[n].insert(streams[n].end(), rows.begin() + begin, rows.begin() + end);
        begin = end;
      }
    }
  }
  for (auto& stream : streams) std::shuffle(stream.begin(), stream.end(), rng);
  return streams;
}

void validate_streams(const SensingSchedule& schedule,
                      std::span<const SampleStream> streams) {
  if (static_cast<int>(streams.size()) != schedule.devices()) {
    throw ConfigError("have " + std::to_string(streams.size()) + " sample streams for " +
                      std::to_string(schedule.devices()) + " devices");
  }
  for (int n = 0; n < schedule.devices(); ++n) {
    const std::int64_t needed = schedule.initial_size(n) + schedule.total_sensed(n);
    if (static_cast<std::int64_t>(streams[n].remaining()) < needed) {
      throw ConfigError("device " + std::to_string(n) + " needs " +
                        std::to_string(needed) + " samples but its stream holds " +
                        std::to_string(streams[n].remaining()));
    }
  }
}

namespace {

void take(DeviceState& device, SampleStream& stream, std::int64_t count) {
  if (count < 0 || static_cast<std::size_t>(count) > stream.remaining()) {
    throw std::logic_error("sample stream of device " + std::to_string(device.id) +
                           " exhausted");
  }
  if (device.data.empty()) device.data.dim = stream.pool->dim;
  for (std::int64_t k = 0; k < count; ++k) {
    device.data.append(*stream.pool, stream.order[stream.cursor++]);
  }
}

}  // namespace

void sense_initial(DeviceState& device, const SensingSchedule& schedule,
                   SampleStream& stream) {
  take(device, stream, schedule.initial_size(device.id));
}

void sense(DeviceState& device, int round, const SensingSchedule& schedule,
           SampleStream& stream) {
  take(device, stream, schedule.new_count(device.id, round));
}

}  // namespace fliscc
