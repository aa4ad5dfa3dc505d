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

// Experiment orchestration: the sense / train / aggregate / update round
// loop for both algorithms, metric and cost recording, sweeps, and bound
// reports for finished runs.

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fliscc/analysis.hpp"
#include "fliscc/config.hpp"
#include "fliscc/cost.hpp"
#include "fliscc/learning.hpp"
#include "fliscc/sensing.hpp"

namespace fliscc {

/// Everything fixed before round 1: data, arrival streams, schedule.
struct ExperimentSetup {
  ModelSpec model;
  SampleBatch pool;
  SampleBatch test;
  SensingSchedule schedule;
  std::vector<std::vector<std::size_t>> streams;  // per-device row order into pool
  std::vector<DeviceHardware> hardware;
};

/// Generates or loads the data, partitions it and builds the schedule.
/// Throws ConfigError when the pool cannot feed the schedule.
ExperimentSetup build_setup(const ExperimentConfig& config);

struct ExperimentState {
  ParamVector global;  // w_{t-1} before round t runs
  std::vector<DeviceState> devices;
  std::vector<SampleStream> streams;
  int round = 0;  // last completed round
  double initial_loss = 0.0;
  bool initial_known = false;  // false while S_0 is empty and round 1 has not run
  double pending_grad_norm_sq = 0.0;  // ||∇F(w_{t-1}; S_{t-1})||^2 for the next round
};

ExperimentState init_state(const ExperimentConfig& config, const ExperimentSetup& setup);

struct RoundOutcome {
  RoundRecord record;
  RoundCost cost;
  Evaluation test{std::nan(""), std::nan("")};
  std::vector<ConstantProbe> probes;
};

/// Runs round t = state.round + 1. Module failures are rethrown as RoundError
/// carrying the round index and step name.
RoundOutcome run_round(ExperimentState& state, const ExperimentConfig& config,
                       const ExperimentSetup& setup);

struct RunOptions {
  bool keep_iterates = false;  // record w_t after every round
  std::optional<int> threads;  // overrides config.threads
};

struct ExperimentResult {
  TrainingTrace trace;
  std::vector<RoundCost> costs;
  std::vector<Evaluation> evals;
  std::vector<ConstantProbe> probes;
  std::vector<ParamVector> iterates;  // w_0, w_1, ... when requested
  std::optional<AssumptionConstants> constants;
  double f_star = 0.0;
  std::string f_star_source;
  std::string config_echo;
  double wall_seconds = 0.0;
  bool failed = false;
  bool diverged = false;
  std::string failure;

  std::vector<double> cumulative_latency() const;
  std::vector<double> cumulative_energy() const;
  double final_loss() const;
};

/// Runs all T rounds. A failing round stops the run; the partial trace is
/// kept and the result is marked failed.
ExperimentResult run_experiment(const ExperimentConfig& config, const RunOptions& options = {});
ExperimentResult run_experiment(const ExperimentConfig& config, const ExperimentSetup& setup,
                                const RunOptions& options = {});

/// Metrics CSV with the fixed column order. Values use shortest round-trip
/// formatting so reruns are byte-identical.
std::string metrics_csv(const ExperimentResult& result);

/// Writes metrics.csv, config.json, trace.json, constants.json and status
/// into dir (created if missing).
void write_result(const ExperimentResult& result, const ExperimentConfig& config,
                  const std::string& dir);

// Sweeps ---------------------------------------------------------------------

struct RunSummary {
  std::string value;
  Algorithm algorithm = Algorithm::kFedAvg;
  std::uint64_t seed = 0;
  bool failed = false;
  std::string failure;
  double final_loss = 0.0;
  double final_test_loss = 0.0;
  double final_accuracy = 0.0;
  double best_accuracy = 0.0;
  int rounds_to_target = -1;  // -1: never reached
  double total_latency = 0.0;
  double total_energy = 0.0;
};

RunSummary summarize(const ExperimentResult& result, const ExperimentConfig& config);

struct SweepCell {
  std::string value;
  Algorithm algorithm = Algorithm::kFedAvg;
  std::vector<RunSummary> runs;  // one per replicate seed
  int failures = 0;
  // Medians over successful replicates; NaN when none succeeded.
  double final_loss = 0.0;
  double final_test_loss = 0.0;
  double best_accuracy = 0.0;
  double rounds_to_target = 0.0;
  double total_latency = 0.0;
  double total_energy = 0.0;
};

struct SweepOptions {
  std::vector<Algorithm> algorithms;  // empty: the config's algorithm
  int replicates = 5;                 // seeds base, base+1, ...
  int workers = 1;                    // concurrent cells
};

struct SweepResult {
  std::string axis;
  std::vector<SweepCell> cells;
  const SweepCell& cell(const std::string& value, Algorithm algorithm) const;
  std::string comparison_csv() const;
};

/// One cell per (value, algorithm); failing runs are recorded, not fatal.
SweepResult run_sweep(const ExperimentConfig& base, const std::string& axis,
                      const std::vector<std::string>& values, const SweepOptions& options = {});

// Bounds ---------------------------------------------------------------------

struct BoundInputs {
  TrainingTrace trace;
  AssumptionConstants constants;
  double eta = 0.0;
  int tau = 1;
  double f_star = 0.0;
  std::string provenance;
};

/// Loads trace.json and constants.json (or the override file) from a run
/// directory. Throws ConfigError when files are missing or malformed.
BoundInputs load_bound_inputs(const std::string& dir,
                              const std::optional<std::string>& constants_path);

/// Evaluates the bound matching the trace's algorithm.
BoundReport compute_bound(const BoundInputs& inputs);

/// Writes bounds.txt and bounds.csv into dir.
void write_bound_report(const BoundReport& report, const std::string& dir);

}  // namespace fliscc
