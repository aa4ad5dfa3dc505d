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

// Command-line front end: run, sweep, bounds, check-lemma1, gen-data.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include "fliscc/analysis.hpp"
#include "fliscc/config.hpp"
#include "fliscc/data_io.hpp"
#include "fliscc/errors.hpp"
#include "fliscc/harness.hpp"
#include "fliscc/kernels.hpp"
#include "fliscc/rng.hpp"

namespace {

using namespace fliscc;

constexpr int kOk = 0;
constexpr int kFailure = 1;
constexpr int kConfigError = 2;
constexpr int kDivergence = 3;
constexpr int kInfeasible = 4;

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

int cmd_run(const std::string& config_path, const std::string& out_dir, int threads) {
  ExperimentConfig config = load_config(config_path);
  if (threads >= 0) config.threads = threads;
  const std::string dir = !out_dir.empty()          ? out_dir
                          : !config.output.dir.empty() ? config.output.dir
                                                       : "results";
  const ExperimentResult result = run_experiment(config);
  write_result(result, config, dir);
  std::printf("%s: %d rounds in %.2f s, final loss %.6g -> %s\n",
              std::string(to_string(config.algorithm)).c_str(), result.trace.length(),
              result.wall_seconds, result.final_loss(), dir.c_str());
  if (result.failed) {
    std::fprintf(stderr, "run failed: %s\n", result.failure.c_str());
    return result.diverged ? kDivergence : kFailure;
  }
  return kOk;
}

int cmd_sweep(const std::string& config_path, const std::string& axis,
              const std::string& values, const std::string& algorithms, int replicates,
              int workers, const std::string& out_dir) {
  const ExperimentConfig base = load_config(config_path);
  SweepOptions options;
  options.replicates = replicates;
  options.workers = workers;
  for (const std::string& a : split_list(algorithms)) {
    options.algorithms.push_back(parse_algorithm(a));
  }
  const SweepResult sweep = run_sweep(base, axis, split_list(values), options);
  const std::string table = sweep.comparison_csv();
  std::fputs(table.c_str(), stdout);
  const std::string dir = !out_dir.empty() ? out_dir
                          : !base.output.dir.empty() ? base.output.dir
                                                     : "sweep";
  std::filesystem::create_directories(dir);
  std::ofstream(std::filesystem::path(dir) / "comparison.csv", std::ios::binary) << table;
  for (const SweepCell& cell : sweep.cells) {
    for (const RunSummary& r : cell.runs) {
      if (r.failed) {
        std::fprintf(stderr, "%s=%s %s seed %llu failed: %s\n", axis.c_str(), cell.value.c_str(),
                     std::string(to_string(cell.algorithm)).c_str(),
                     static_cast<unsigned long long>(r.seed), r.failure.c_str());
      }
    }
  }
  return kOk;
}

int cmd_bounds(const std::string& dir, const std::string& constants) {
  const BoundInputs inputs =
      load_bound_inputs(dir, constants.empty() ? std::nullopt : std::optional(constants));
  const BoundReport report = compute_bound(inputs);
  write_bound_report(report, dir);
  std::fputs(report.to_text().c_str(), stdout);
  return report.feasible ? kOk : kInfeasible;
}

// Random instances of the data-split gradient identity.
int cmd_check_lemma1(int trials, std::uint64_t seed) {
  Philox4x32 rng = make_stream(seed, StreamPurpose::kTest, 0, 0);
  std::uniform_int_distribution<int> devices(1, 5);
  std::uniform_int_distribution<int> sizes(0, 20);
  std::uniform_int_distribution<int> kinds(0, 2);
  std::normal_distribution<double> normal(0.0, 1.0);
  double worst = 0.0;
  int failures = 0;
  for (int trial = 0; trial < trials; ++trial) {
    const std::size_t d = 3;
    const int classes = 3;
    ModelSpec model;
    switch (kinds(rng)) {
      case 0: {
        ParamVector c(d);
        for (std::size_t j = 0; j < d; ++j) c[j] = normal(rng);
        model = ModelSpec::quadratic(c);
        break;
      }
      case 1:
        model = ModelSpec::logistic(d, classes);
        break;
      default:
        model = ModelSpec::mlp(d, classes, 4);
    }
    const int N = devices(rng);
    std::vector<SampleBatch> old_data(N), new_data(N);
    std::size_t total = 0;
    for (int n = 0; n < N; ++n) {
      for (SampleBatch* b : {&old_data[n], &new_data[n]}) {
        b->dim = d;
        const int rows = sizes(rng);
        total += static_cast<std::size_t>(rows);
        for (int i = 0; i < rows; ++i) {
          for (std::size_t j = 0; j < d; ++j) b->features.push_back(normal(rng));
          b->labels.push_back(static_cast<int>(rng() % classes));
        }
      }
    }
    if (total == 0) continue;
    ParamVector w(model.param_count());
    for (std::size_t j = 0; j < w.size(); ++j) w[j] = normal(rng);
    const Lemma1Check check = lemma1_check(w, old_data, new_data, model);
    const double ratio = check.residual / (1.0 + check.lhs_norm);
    worst = std::max(worst, ratio);
    if (ratio > 1e-10) ++failures;
  }
  std::printf("lemma1: %d trials, worst residual/(1+|lhs|) = %.3e, %d above 1e-10\n", trials,
              worst, failures);
  return failures == 0 ? kOk : kFailure;
}

int cmd_gen_data(const std::string& spec_path) {
  const DataSpec spec = parse_data_spec(read_text(spec_path));
  const SampleBatch data = generate(spec);
  write_dataset(spec.output, data);
  std::printf("wrote %zu samples x %zu features to %s\n", data.size(), data.dim,
              spec.output.c_str());
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Federated learning with integrated sensing, communication and computation"};
  app.require_subcommand(1);
  std::string kernels;
  app.add_option("--kernels", kernels, "Vector kernel backend: scalar or avx2");

  std::string config_path, out_dir, axis, values, algorithms, dir, constants, spec_path;
  int threads = -1, replicates = 5, workers = 1, trials = 1000;
  std::uint64_t seed = 1;

  CLI::App* run = app.add_subcommand("run", "Run one experiment");
  run->add_option("config", config_path, "Experiment config (JSON)")->required();
  run->add_option("--out", out_dir, "Output directory (default: output.dir)");
  run->add_option("--threads", threads, "Device worker threads (0: all cores)");

  CLI::App* sweep = app.add_subcommand("sweep", "Sweep one axis over several values");
  sweep->add_option("config", config_path, "Base experiment config (JSON)")->required();
  sweep->add_option("--axis", axis, "gamma, sigma_z, eta, tau, schedule, lambda or seed")
      ->required();
  sweep->add_option("--values", values, "Comma-separated axis values")->required();
  sweep->add_option("--algorithms", algorithms, "Comma-separated algorithms (default: config)");
  sweep->add_option("--replicates", replicates, "Seeds per cell");
  sweep->add_option("--workers", workers, "Concurrent runs");
  sweep->add_option("--out", out_dir, "Directory for comparison.csv");

  CLI::App* bounds = app.add_subcommand("bounds", "Evaluate the convergence bound of a run");
  bounds->add_option("result-dir", dir, "Directory written by 'run'")->required();
  bounds->add_option("--constants", constants, "JSON file with L, sigma_sq, G, alpha_sq, beta_sq");

  CLI::App* lemma = app.add_subcommand("check-lemma1", "Check the gradient split identity");
  lemma->add_option("--trials", trials, "Random instances");
  lemma->add_option("--seed", seed, "Instance seed");

  CLI::App* gen = app.add_subcommand("gen-data", "Write a synthetic dataset");
  gen->add_option("spec", spec_path, "Dataset spec (JSON)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kConfigError;
  }

  try {
    if (!kernels.empty()) {
      kernels::set_backend(kernels == "scalar" ? kernels::Backend::kScalar
                           : kernels == "avx2" ? kernels::Backend::kAvx2
                                               : throw ConfigError("unknown kernels '" + kernels + "'"));
    }
    if (*run) return cmd_run(config_path, out_dir, threads);
    if (*sweep) {
      return cmd_sweep(config_path, axis, values, algorithms, replicates, workers, out_dir);
    }
    if (*bounds) return cmd_bounds(dir, constants);
    if (*lemma) return cmd_check_lemma1(trials, seed);
    if (*gen) return cmd_gen_data(spec_path);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfigError;
  } catch (const DivergenceError& e) {
    std::fprintf(stderr, "numeric divergence: %s\n", e.what());
    return kDivergence;
  } catch (const RoundError& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return e.diverged() ? kDivergence : kFailure;
  } catch (const InfeasibleBoundError& e) {
    std::fprintf(stderr, "infeasible bound: %s\n", e.what());
    return kInfeasible;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "invalid input: %s\n", e.what());
    return kConfigError;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kFailure;
  }
  return kFailure;
}
