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

// Experiment configuration: a nested JSON document validated strictly
// (unknown keys and ill-typed values are ConfigErrors).

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fliscc/analysis.hpp"
#include "fliscc/cost.hpp"
#include "fliscc/learning.hpp"
#include "fliscc/ota_channel.hpp"
#include "fliscc/sensing.hpp"

namespace fliscc {

struct ModelConfig {
  ModelKind kind = ModelKind::kLogistic;
  std::size_t features = 20;
  int classes = 10;
  std::size_t hidden = 16;
  std::size_t dim = 10;             // quadratic parameter count
  std::vector<double> center;       // quadratic center; drawn when empty
  double center_scale = 1.0;
  double init_scale = 0.1;          // mlp weight initialization
};

enum class DataSource { kBlobs, kLogisticTeacher, kFile };

struct DataConfig {
  DataSource source = DataSource::kBlobs;
  std::string path;
  std::size_t pool_size = 0;  // 0: exactly what the schedule consumes
  std::size_t test_size = 1000;
  double separation = 2.0;
  double noise = 1.0;
  std::optional<std::uint64_t> seed;  // defaults to the experiment seed
};

struct ScheduleConfig {
  ScheduleStrategy strategy = ScheduleStrategy::kUniform;
  std::optional<std::int64_t> total_per_device = 6000;  // nullopt: whole stream
  std::int64_t initial_size = 0;
  std::vector<std::vector<std::int64_t>> matrix;  // explicit D_t^n, overrides strategy
};

struct ChannelConfig {
  PowerPolicy policy = PowerPolicy::kFullInversion;
  double lambda = 1.0;
  double noise_variance = 1.0;
  std::vector<double> max_power{10.0};  // one value or one per device
};

struct CostSettings {
  double slot_seconds = 1e-3;
  int symbols_per_block = 14;
  std::vector<double> cycles_per_sample{1e6};
  std::vector<double> energy_coeff{1e-28};
  std::vector<double> cpu_freq{1e9};
  CpuCharging charging = CpuCharging::kSamplesProcessed;
  bool include_downlink = false;
};

struct AnalysisConfig {
  int probes = 8;           // probe points spread over the run
  int probe_batches = 4;    // mini-batches per device per probe
  double probe_step = 1e-2; // displacement of the secant partner
  std::optional<double> f_star;  // unset: 0 for quadratic, else min observed loss
  bool iid_tag = false;
};

struct OutputConfig {
  std::string dir;
  int eval_stride = 1;
  std::optional<double> target_loss;
};

struct ExperimentConfig {
  Algorithm algorithm = Algorithm::kFedAvg;
  int devices = 10;
  int rounds = 50;
  std::uint64_t seed = 1;
  int threads = 1;  // 0: hardware concurrency
  bool error_free = false;
  ModelConfig model;
  LocalUpdateConfig training{0.001, 5, 32};
  ScheduleConfig schedule;
  DataConfig data;
  PartitionSpec partition;
  ChannelConfig channel;
  CostSettings cost;
  AnalysisConfig analysis;
  OutputConfig output;

  std::string source_text;  // the document this config was parsed from

  /// Throws ConfigError on inconsistent settings.
  void validate() const;
  std::uint64_t data_seed() const { return data.seed.value_or(seed); }
};

/// Parses a JSON document. Throws ConfigError on syntax errors, unknown keys,
/// wrong types, or failed validation.
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::string& path);

/// Expands a one-element list to `devices` entries; throws ConfigError for
/// any other length mismatch.
std::vector<double> per_device(const std::vector<double>& values, int devices,
                               std::string_view key);

/// Sets one sweepable quantity. Axes: gamma, sigma_z (alias noise_variance),
/// eta, tau, schedule, lambda, seed. Throws ConfigError for unknown axes or
/// unparsable values.
void apply_axis(ExperimentConfig& config, std::string_view axis, std::string_view value);

}  // namespace fliscc
