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

#include "fliscc/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "fliscc/data_io.hpp"
#include "fliscc/errors.hpp"
#include "fliscc/ota_channel.hpp"
#include "fliscc/rng.hpp"

namespace fliscc {

namespace {

using nlohmann::json;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

// Runs fn(n) for n in [0, count) on up to `threads` workers with a static
// split. The first failure in index order is rethrown.
template <typename Fn>
void for_each_index(int count, int threads, Fn&& fn) {
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(count));
  auto body = [&](int n) {
    try {
      fn(n);
    } catch (...) {
      errors[static_cast<std::size_t>(n)] = std::current_exception();
    }
  };
  const int workers = std::min(threads, count);
  if (workers <= 1) {
    for (int n = 0; n < count; ++n) body(n);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (int n = w; n < count; n += workers) body(n);
      });
    }
    for (std::thread& t : pool) t.join();
  }
  for (const std::exception_ptr& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

template <typename Fn>
auto step(int round, const char* name, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const RoundError&) {
    throw;
  } catch (const std::exception& e) {
    throw RoundError(round, name, e);
  }
}

std::uint32_t u32(int v) { return static_cast<std::uint32_t>(v); }

ParamVector quadratic_center(const ExperimentConfig& config) {
  if (!config.model.center.empty()) return ParamVector(config.model.center);
  Philox4x32 rng = make_stream(config.data_seed(), StreamPurpose::kInit, 1, 0);
  std::normal_distribution<double> normal(0.0, 1.0);
  ParamVector c(config.model.dim);
  for (std::size_t j = 0; j < c.size(); ++j) c[j] = config.model.center_scale * normal(rng);
  return c;
}

ModelSpec make_model(const ExperimentConfig& config) {
  const ModelConfig& m = config.model;
  switch (m.kind) {
    case ModelKind::kQuadratic:
      return ModelSpec::quadratic(quadratic_center(config));
    case ModelKind::kLogistic:
      return ModelSpec::logistic(m.features, m.classes);
    case ModelKind::kMlp:
      return ModelSpec::mlp(m.features, m.classes, m.hidden);
  }
  throw ConfigError("unknown model kind");
}

void split_test(SampleBatch all, std::size_t test_size, std::uint64_t seed, SampleBatch& pool,
                SampleBatch& test) {
  if (test_size >= all.size()) {
    throw ConfigError("dataset of " + std::to_string(all.size()) +
                      " samples cannot hold a test set of " + std::to_string(test_size));
  }
  std::vector<std::size_t> order(all.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Philox4x32 rng = make_stream(seed, StreamPurpose::kTest, 0, 0);
  std::shuffle(order.begin(), order.end(), rng);
  const std::span<const std::size_t> rows(order);
  test = all.subset(rows.first(test_size));
  pool = all.subset(rows.subspan(test_size));
}

}  // namespace

ExperimentSetup build_setup(const ExperimentConfig& config) {
  config.validate();
  const int N = config.devices;
  const int T = config.rounds;
  ExperimentSetup setup;
  setup.model = make_model(config);
  setup.model.validate();

  const std::vector<std::int64_t> initial(static_cast<std::size_t>(N),
                                          config.schedule.initial_size);
  std::int64_t needed = 0;
  if (!config.schedule.matrix.empty()) {
    // Streams split the pool evenly, so size it for the hungriest device.
    std::int64_t most = 0;
    for (const auto& row : config.schedule.matrix) {
      most = std::max(most, std::accumulate(row.begin(), row.end(), std::int64_t{0}));
    }
    needed = N * (config.schedule.initial_size + most);
  } else if (config.schedule.total_per_device) {
    needed = N * (config.schedule.initial_size + *config.schedule.total_per_device);
  }

  const std::size_t features =
      config.model.kind == ModelKind::kQuadratic ? std::max<std::size_t>(config.model.features, 1)
                                                 : config.model.features;
  const int classes = config.model.kind == ModelKind::kQuadratic ? std::max(config.model.classes, 2)
                                                                 : config.model.classes;
  if (config.data.source == DataSource::kFile) {
    SampleBatch all = read_dataset(config.data.path);
    split_test(std::move(all), config.data.test_size, config.data_seed(), setup.pool, setup.test);
    if (config.data.pool_size > 0 && config.data.pool_size < setup.pool.size()) {
      std::vector<std::size_t> head(config.data.pool_size);
      std::iota(head.begin(), head.end(), std::size_t{0});
      setup.pool = setup.pool.subset(head);
    }
    if (config.model.kind != ModelKind::kQuadratic) {
      if (setup.pool.dim != config.model.features) {
        throw ConfigError("dataset has " + std::to_string(setup.pool.dim) +
                          " features, model expects " + std::to_string(config.model.features));
      }
      for (const SampleBatch* b : {&setup.pool, &setup.test}) {
        for (int label : b->labels) {
          if (label >= config.model.classes) {
            throw ConfigError("dataset label " + std::to_string(label) + " exceeds model.classes");
          }
        }
      }
    }
  } else {
    const std::size_t pool_size =
        config.data.pool_size > 0 ? config.data.pool_size : static_cast<std::size_t>(needed);
    if (pool_size == 0) throw ConfigError("the schedule senses no samples; set data.pool_size");
    const std::size_t total = pool_size + config.data.test_size;
    SampleBatch all =
        config.data.source == DataSource::kBlobs
            ? make_blobs(total, features, classes, config.data.separation, config.data.noise,
                         config.data_seed())
            : make_logistic_teacher(total, features, classes, config.data.separation,
                                    config.data.noise, config.data_seed());
    split_test(std::move(all), config.data.test_size, config.data_seed(), setup.pool, setup.test);
  }

  PartitionSpec partition = config.partition;
  partition.seed = config.seed;
  try {
    setup.streams = partition_assign(setup.pool, partition, N);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("partition: ") + e.what());
  }

  try {
    if (!config.schedule.matrix.empty()) {
      setup.schedule = build_schedule_explicit(config.schedule.matrix, N, T, initial);
    } else {
      std::vector<std::int64_t> totals(static_cast<std::size_t>(N));
      for (int n = 0; n < N; ++n) {
        if (config.schedule.total_per_device) {
          totals[n] = *config.schedule.total_per_device;
        } else {
          totals[n] = static_cast<std::int64_t>(setup.streams[n].size()) -
                      config.schedule.initial_size;
          if (totals[n] < 0) {
            throw ConfigError("device " + std::to_string(n) + " receives " +
                              std::to_string(setup.streams[n].size()) +
                              " samples, fewer than schedule.initial_size");
          }
        }
      }
      setup.schedule = build_schedule(config.schedule.strategy, totals, T, initial);
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("schedule: ") + e.what());
  }
  if (T > 0 && setup.schedule.total_cumulative(1) == 0) {
    throw ConfigError("schedule: no device holds data in round 1");
  }

  const auto p_max = per_device(config.channel.max_power, N, "channel.max_power");
  const auto xi = per_device(config.cost.cycles_per_sample, N, "cost.cycles_per_sample");
  const auto vs = per_device(config.cost.energy_coeff, N, "cost.energy_coeff");
  const auto f = per_device(config.cost.cpu_freq, N, "cost.cpu_freq");
  setup.hardware.resize(static_cast<std::size_t>(N));
  for (int n = 0; n < N; ++n) {
    setup.hardware[n] = DeviceHardware{xi[n], vs[n], f[n], p_max[n]};
  }
  return setup;
}

ExperimentState init_state(const ExperimentConfig& config, const ExperimentSetup& setup) {
  const int N = setup.schedule.devices();
  if (static_cast<int>(setup.streams.size()) != N || static_cast<int>(setup.hardware.size()) != N) {
    throw ConfigError("setup: streams, hardware and schedule disagree on the device count");
  }
  ExperimentState state;
  state.global = initial_model(setup.model, config.seed, config.model.init_scale);
  state.devices.resize(static_cast<std::size_t>(N));
  state.streams.resize(static_cast<std::size_t>(N));
  for (int n = 0; n < N; ++n) {
    DeviceState& d = state.devices[n];
    d.id = n;
    d.hardware = setup.hardware[n];
    d.data.dim = setup.pool.dim;
    d.local_model = state.global;
    state.streams[n] = SampleStream{&setup.pool, setup.streams[n], 0};
  }
  validate_streams(setup.schedule, state.streams);
  for (int n = 0; n < N; ++n) sense_initial(state.devices[n], setup.schedule, state.streams[n]);

  const std::int64_t s0 = setup.schedule.total_cumulative(0);
  if (s0 > 0) {
    const auto sizes = setup.schedule.cumulative_sizes(0);
    const AggregationWeights rho = weight_fraction(sizes);
    std::vector<ParamVector> grads(static_cast<std::size_t>(N));
    double loss = 0.0;
    for (int n = 0; n < N; ++n) {
      if (state.devices[n].data.empty()) continue;
      loss += rho[n] * loss_and_gradient(state.global, state.devices[n].data, setup.model, grads[n]);
    }
    state.initial_loss = loss;
    state.pending_grad_norm_sq = weighted_sum(grads, rho).sq_norm();
    state.initial_known = true;
  }
  return state;
}

namespace {

bool is_probe_round(int t, int rounds, int probes) {
  if (probes <= 0) return false;
  if (rounds <= probes) return true;
  const int stride = rounds / probes;
  return (t - 1) % stride == 0 && (t - 1) / stride < probes;
}

}  // namespace

RoundOutcome run_round(ExperimentState& state, const ExperimentConfig& config,
                       const ExperimentSetup& setup) {
  const int t = state.round + 1;
  const SensingSchedule& schedule = setup.schedule;
  if (t > schedule.rounds()) {
    throw std::out_of_range("run_round: all " + std::to_string(schedule.rounds()) +
                            " rounds already ran");
  }
  const int N = schedule.devices();
  const int threads = resolve_threads(config.threads);
  const ModelSpec& model = setup.model;
  const std::size_t q = state.global.size();
  const bool fedavg = config.algorithm == Algorithm::kFedAvg;
  const std::uint64_t seed = config.seed;

  step(t, "broadcast", [&] {
    for (DeviceState& d : state.devices) d.local_model = state.global;
  });

  step(t, "sense", [&] {
    for_each_index(N, threads, [&](int n) {
      sense(state.devices[n], t, schedule, state.streams[n]);
    });
  });
  const std::vector<std::int64_t> sizes = schedule.cumulative_sizes(t);
  const AggregationWeights rho = step(t, "sense", [&] { return weight_fraction(sizes); });

  // Local computation. Every device also reports ∇F(w_{t-1}; S_t^n), which
  // FedSGD transmits and the metrics use for both algorithms.
  std::vector<ParamVector> uploads(static_cast<std::size_t>(N));
  std::vector<ParamVector> current_grads(static_cast<std::size_t>(N));
  std::vector<double> current_losses(static_cast<std::size_t>(N), 0.0);
  step(t, "local_train", [&] {
    for_each_index(N, threads, [&](int n) {
      DeviceState& d = state.devices[n];
      if (d.data.empty()) {
        uploads[n] = fedavg ? state.global : ParamVector(q);
        return;
      }
      current_losses[n] = loss_and_gradient(state.global, d.data, model, current_grads[n]);
      if (fedavg) {
        Philox4x32 rng = make_stream(seed, StreamPurpose::kLocalTraining, u32(n), u32(t));
        uploads[n] = fedavg_local_update(state.global, d.data, config.training, model, rng);
      } else {
        uploads[n] = current_grads[n];
      }
      d.local_model = fedavg ? uploads[n] : state.global;
    });
  });
  const ParamVector grad_current = weighted_sum(current_grads, rho);
  if (!state.initial_known) {
    // S_0 is empty: the starting point is measured on the first sensed data.
    double loss = 0.0;
    for (int n = 0; n < N; ++n) loss += rho[n] * current_losses[n];
    state.initial_loss = loss;
    state.pending_grad_norm_sq = grad_current.sq_norm();
    state.initial_known = true;
  }

  std::vector<ConstantProbe> probes;
  if (is_probe_round(t, schedule.rounds(), config.analysis.probes)) {
    step(t, "probe", [&] {
      ConstantProbe p;
      p.round = t;
      p.w = state.global;
      Philox4x32 dir_rng = make_stream(seed, StreamPurpose::kProbe, kServerEntity, u32(t));
      std::normal_distribution<double> normal(0.0, 1.0);
      ParamVector dir(q);
      for (std::size_t j = 0; j < q; ++j) dir[j] = normal(dir_rng);
      p.w_alt = p.w + (config.analysis.probe_step / std::sqrt(dir.sq_norm())) * dir;
      p.grad = grad_current;
      p.device_grads = current_grads;
      p.rho = rho.rho;
      std::vector<ParamVector> alt(static_cast<std::size_t>(N));
      p.minibatch_grads.resize(static_cast<std::size_t>(N));
      for_each_index(N, threads, [&](int n) {
        const SampleBatch& data = state.devices[n].data;
        if (data.empty()) {
          p.device_grads[n] = ParamVector(q);
          return;
        }
        alt[n] = local_gradient(p.w_alt, data, model);
        Philox4x32 rng = make_stream(seed, StreamPurpose::kProbe, u32(n), u32(t));
        const std::size_t b = std::min(config.training.batch_size, data.size());
        for (int k = 0; k < config.analysis.probe_batches; ++k) {
          const auto rows = sample_minibatch(data.size(), b, rng);
          p.minibatch_grads[n].push_back(batch_gradient(p.w, data, rows, model));
        }
      });
      p.grad_alt = weighted_sum(alt, rho);
      probes.push_back(std::move(p));
    });
  }

  // Uplink: channel draw and power control happen in every mode so costs and
  // random streams do not depend on error_free.
  double err_sq = 0.0;
  std::vector<double> tx_power;
  const ParamVector aggregated = step(t, "aggregate", [&] {
    Philox4x32 ch_rng = make_stream(seed, StreamPurpose::kChannel, kServerEntity, u32(t));
    const std::vector<double> h = draw_channel(N, ch_rng);
    std::vector<double> p_max(static_cast<std::size_t>(N));
    for (int n = 0; n < N; ++n) p_max[n] = state.devices[n].hardware.max_power;
    PowerAllocation alloc = power_control(h, p_max, config.channel.policy, config.channel.lambda);
    tx_power = alloc.p;
    if (config.error_free) return weighted_sum(uploads, rho);
    ChannelRealization channel{h, alloc.p, alloc.lambda, config.channel.noise_variance};
    Philox4x32 noise_rng = make_stream(seed, StreamPurpose::kNoise, kServerEntity, u32(t));
    AggregationResult r = ota_aggregate(uploads, rho, channel, noise_rng);
    err_sq = r.error_sq_norm;
    return std::move(r.received);
  });

  step(t, "global_update", [&] {
    ParamVector next = fedavg ? fedavg_global_update(std::span(&aggregated, 1),
                                                     AggregationWeights{{1.0}})
                              : fedsgd_global_update(state.global, aggregated,
                                                     config.training.eta);
    next.ensure_finite("global model");
    state.global = std::move(next);
  });

  RoundOutcome out;
  RoundRecord& rec = out.record;
  rec.round = t;
  rec.grad_norm_sq = state.pending_grad_norm_sq;
  rec.grad_norm_sq_current = grad_current.sq_norm();
  rec.err_sq_norm = err_sq;
  rec.total_size = schedule.total_cumulative(t);
  rec.new_size = schedule.total_new(t);
  rec.device_sizes = sizes;
  rec.rho = rho.rho;

  step(t, "evaluate", [&] {
    std::vector<ParamVector> grads(static_cast<std::size_t>(N));
    std::vector<double> losses(static_cast<std::size_t>(N), 0.0);
    for_each_index(N, threads, [&](int n) {
      if (state.devices[n].data.empty()) return;
      losses[n] = loss_and_gradient(state.global, state.devices[n].data, model, grads[n]);
    });
    double loss = 0.0;
    for (int n = 0; n < N; ++n) loss += rho[n] * losses[n];
    if (!std::isfinite(loss)) throw DivergenceError("global loss is not finite");
    rec.loss = loss;
    state.pending_grad_norm_sq = weighted_sum(grads, rho).sq_norm();
    if (t % config.output.eval_stride == 0 || t == schedule.rounds()) {
      out.test = setup.test.empty() ? Evaluation{kNaN, kNaN}
                                    : evaluate(state.global, setup.test, model);
    }
  });

  out.cost = step(t, "cost", [&] {
    double uplink = comm_latency(static_cast<std::int64_t>(q), config.cost.symbols_per_block,
                                 config.cost.slot_seconds);
    const double latency = config.cost.include_downlink ? 2.0 * uplink : uplink;
    std::vector<DeviceCost> devices(static_cast<std::size_t>(N));
    for (int n = 0; n < N; ++n) {
      const DeviceHardware& hw = state.devices[n].hardware;
      const std::int64_t s = sizes[n];
      if (s == 0) continue;
      const double epochs =
          fedavg ? fedavg_epochs(config.training.tau,
                                 static_cast<std::int64_t>(config.training.batch_size), s,
                                 config.cost.charging)
                 : 1.0;
      const double samples = static_cast<double>(s);
      devices[n].comp_latency = comp_latency(hw.cycles_per_sample, samples, hw.cpu_freq, epochs);
      devices[n].comp_energy =
          comp_energy(hw.cycles_per_sample, hw.energy_coeff, hw.cpu_freq, samples, epochs);
      devices[n].comm_energy = comm_energy(tx_power[n], uplink);
    }
    return round_cost(devices, latency);
  });

  out.probes = std::move(probes);
  state.round = t;
  return out;
}

// ---------------------------------------------------------------------------

std::vector<double> ExperimentResult::cumulative_latency() const {
  std::vector<double> out;
  double acc = 0.0;
  for (const RoundCost& c : costs) out.push_back(acc += c.total_latency);
  return out;
}

std::vector<double> ExperimentResult::cumulative_energy() const {
  std::vector<double> out;
  double acc = 0.0;
  for (const RoundCost& c : costs) out.push_back(acc += c.total_energy);
  return out;
}

double ExperimentResult::final_loss() const {
  return trace.rounds.empty() ? kNaN : trace.rounds.back().loss;
}

ExperimentResult run_experiment(const ExperimentConfig& config, const RunOptions& options) {
  const ExperimentSetup setup = build_setup(config);
  return run_experiment(config, setup, options);
}

ExperimentResult run_experiment(const ExperimentConfig& config, const ExperimentSetup& setup,
                                const RunOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  ExperimentConfig cfg = config;
  if (options.threads) cfg.threads = *options.threads;

  ExperimentResult result;
  result.config_echo = config.source_text;
  result.trace.algorithm = cfg.algorithm;
  result.trace.initial_size = setup.schedule.total_cumulative(0);

  ExperimentState state = init_state(cfg, setup);
  if (options.keep_iterates) result.iterates.push_back(state.global);
  for (int t = 1; t <= setup.schedule.rounds(); ++t) {
    try {
      RoundOutcome r = run_round(state, cfg, setup);
      result.trace.rounds.push_back(std::move(r.record));
      result.costs.push_back(std::move(r.cost));
      result.evals.push_back(r.test);
      for (ConstantProbe& p : r.probes) result.probes.push_back(std::move(p));
      if (options.keep_iterates) result.iterates.push_back(state.global);
    } catch (const RoundError& e) {
      result.failed = true;
      result.diverged = e.diverged();
      result.failure = e.what();
      break;
    }
  }
  result.trace.initial_loss = state.initial_known ? state.initial_loss : kNaN;

  if (cfg.analysis.f_star) {
    result.f_star = *cfg.analysis.f_star;
    result.f_star_source = "provided";
  } else if (setup.model.kind == ModelKind::kQuadratic) {
    result.f_star = 0.0;
    result.f_star_source = "exact (quadratic)";
  } else {
    double best = result.trace.initial_loss;
    for (const RoundRecord& r : result.trace.rounds) best = std::min(best, r.loss);
    result.f_star = best;
    result.f_star_source = "minimum observed loss";
  }

  if (!result.failed && result.probes.size() >= 2) {
    result.constants = estimate_constants(result.probes, &result.trace, cfg.analysis.iid_tag);
  }
  result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

// ---------------------------------------------------------------------------

namespace {

void put(std::string& line, double v) {
  if (std::isnan(v)) {
    line += "nan";
    return;
  }
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  line.append(buf, res.ptr);
}

json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

double from_num(const json& j) { return j.is_null() ? kNaN : j.get<double>(); }

json trace_json(const ExperimentResult& result, const ExperimentConfig& config) {
  json rounds = json::array();
  for (const RoundRecord& r : result.trace.rounds) {
    rounds.push_back({{"round", r.round},
                      {"loss", num(r.loss)},
                      {"grad_norm_sq", num(r.grad_norm_sq)},
                      {"grad_norm_sq_current", num(r.grad_norm_sq_current)},
                      {"err_sq_norm", num(r.err_sq_norm)},
                      {"S_t", r.total_size},
                      {"D_t", r.new_size},
                      {"device_sizes", r.device_sizes},
                      {"rho", r.rho}});
  }
  return {{"algorithm", std::string(to_string(result.trace.algorithm))},
          {"eta", config.training.eta},
          {"tau", config.training.tau},
          {"batch_size", config.training.batch_size},
          {"initial_loss", num(result.trace.initial_loss)},
          {"initial_size", result.trace.initial_size},
          {"f_star", num(result.f_star)},
          {"f_star_source", result.f_star_source},
          {"iid_tag", config.analysis.iid_tag},
          {"rounds", rounds}};
}

json constants_json(const AssumptionConstants& c) {
  return {{"L", c.L},
          {"sigma_sq", c.sigma_sq},
          {"G", c.G},
          {"alpha_sq", c.alpha_sq},
          {"beta_sq", c.beta_sq}};
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
  out << text;
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

}  // namespace

std::string metrics_csv(const ExperimentResult& result) {
  std::string out =
      "round,loss,grad_norm_sq,err_sq_norm,test_loss,test_acc,S_t,D_t,comm_latency_s,"
      "comp_latency_s,total_latency_s,comm_energy_j,comp_energy_j,total_energy_j\n";
  for (std::size_t i = 0; i < result.trace.rounds.size(); ++i) {
    const RoundRecord& r = result.trace.rounds[i];
    const RoundCost& c = result.costs[i];
    const Evaluation& e = result.evals[i];
    std::string line = std::to_string(r.round);
    for (double v : {r.loss, r.grad_norm_sq, r.err_sq_norm, e.loss, e.accuracy}) {
      line += ',';
      put(line, v);
    }
    line += ',' + std::to_string(r.total_size) + ',' + std::to_string(r.new_size);
    for (double v : {c.comm_latency, c.max_comp_latency(), c.total_latency,
                     c.total_comm_energy(), c.total_comp_energy(), c.total_energy}) {
      line += ',';
      put(line, v);
    }
    out += line + '\n';
  }
  if (result.failed) out += "# failed: " + result.failure + '\n';
  return out;
}

void write_result(const ExperimentResult& result, const ExperimentConfig& config,
                  const std::string& dir) {
  namespace fs = std::filesystem;
  const fs::path root(dir);
  std::error_code ec;
  fs::create_directories(root, ec);
  if (ec) throw ConfigError("cannot create '" + dir + "': " + ec.message());
  write_file(root / "metrics.csv", metrics_csv(result));
  write_file(root / "config.json", result.config_echo);
  write_file(root / "trace.json", trace_json(result, config).dump(1) + '\n');
  if (result.constants) {
    write_file(root / "constants.json", constants_json(*result.constants).dump(1) + '\n');
  }
  write_file(root / "status", result.failed ? "failed: " + result.failure + '\n' : "ok\n");
}

// ---------------------------------------------------------------------------

RunSummary summarize(const ExperimentResult& result, const ExperimentConfig& config) {
  RunSummary s;
  s.algorithm = config.algorithm;
  s.seed = config.seed;
  s.failed = result.failed;
  s.failure = result.failure;
  s.final_loss = result.failed ? kNaN : result.final_loss();
  s.final_test_loss = kNaN;
  s.final_accuracy = kNaN;
  s.best_accuracy = kNaN;
  for (const Evaluation& e : result.evals) {
    if (!std::isnan(e.loss)) s.final_test_loss = e.loss;
    if (!std::isnan(e.accuracy)) {
      s.final_accuracy = e.accuracy;
      s.best_accuracy = std::isnan(s.best_accuracy) ? e.accuracy
                                                    : std::max(s.best_accuracy, e.accuracy);
    }
  }
  if (config.output.target_loss) {
    for (const RoundRecord& r : result.trace.rounds) {
      if (r.loss <= *config.output.target_loss) {
        s.rounds_to_target = r.round;
        break;
      }
    }
  }
  for (const RoundCost& c : result.costs) {
    s.total_latency += c.total_latency;
    s.total_energy += c.total_energy;
  }
  return s;
}

namespace {

double median(std::vector<double> v) {
  if (v.empty()) return kNaN;
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 == 1 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

void fill_medians(SweepCell& cell) {
  std::vector<double> loss, test, acc, rtt, lat, energy;
  for (const RunSummary& r : cell.runs) {
    if (r.failed) {
      ++cell.failures;
      continue;
    }
    loss.push_back(r.final_loss);
    test.push_back(r.final_test_loss);
    acc.push_back(r.best_accuracy);
    rtt.push_back(r.rounds_to_target < 0 ? std::numeric_limits<double>::infinity()
                                         : r.rounds_to_target);
    lat.push_back(r.total_latency);
    energy.push_back(r.total_energy);
  }
  cell.final_loss = median(loss);
  cell.final_test_loss = median(test);
  cell.best_accuracy = median(acc);
  cell.rounds_to_target = median(rtt);
  cell.total_latency = median(lat);
  cell.total_energy = median(energy);
}

}  // namespace

const SweepCell& SweepResult::cell(const std::string& value, Algorithm algorithm) const {
  for (const SweepCell& c : cells) {
    if (c.value == value && c.algorithm == algorithm) return c;
  }
  throw std::out_of_range("no sweep cell for " + axis + "=" + value);
}

std::string SweepResult::comparison_csv() const {
  std::string out = axis +
                    ",algorithm,runs,failures,median_final_loss,median_final_test_loss,"
                    "median_best_acc,median_rounds_to_target,median_total_latency_s,"
                    "median_total_energy_j\n";
  for (const SweepCell& c : cells) {
    std::string line = c.value + ',' + std::string(to_string(c.algorithm)) + ',' +
                       std::to_string(c.runs.size()) + ',' + std::to_string(c.failures);
    for (double v : {c.final_loss, c.final_test_loss, c.best_accuracy, c.rounds_to_target,
                     c.total_latency, c.total_energy}) {
      line += ',';
      if (std::isinf(v)) {
        line += "inf";
      } else {
        put(line, v);
      }
    }
    out += line + '\n';
  }
  return out;
}

SweepResult run_sweep(const ExperimentConfig& base, const std::string& axis,
                      const std::vector<std::string>& values, const SweepOptions& options) {
  if (options.replicates < 1) throw ConfigError("sweep needs at least one replicate");
  std::vector<Algorithm> algorithms = options.algorithms;
  if (algorithms.empty()) algorithms.push_back(base.algorithm);

  SweepResult out;
  out.axis = axis;
  struct Job {
    std::size_t cell;
    ExperimentConfig config;
  };
  std::vector<Job> jobs;
  for (const std::string& value : values) {
    for (Algorithm a : algorithms) {
      SweepCell cell;
      cell.value = value;
      cell.algorithm = a;
      cell.runs.resize(static_cast<std::size_t>(options.replicates));
      out.cells.push_back(std::move(cell));
      for (int r = 0; r < options.replicates; ++r) {
        ExperimentConfig cfg = base;
        cfg.algorithm = a;
        cfg.seed = base.seed + static_cast<std::uint64_t>(r);
        apply_axis(cfg, axis, value);
        if (options.workers > 1) cfg.threads = 1;
        jobs.push_back({out.cells.size() - 1, std::move(cfg)});
      }
    }
  }

  std::vector<RunSummary> summaries(jobs.size());
  for_each_index(static_cast<int>(jobs.size()), std::max(options.workers, 1), [&](int i) {
    const ExperimentConfig& cfg = jobs[i].config;
    RunSummary s;
    try {
      s = summarize(run_experiment(cfg), cfg);
    } catch (const std::exception& e) {
      s.algorithm = cfg.algorithm;
      s.seed = cfg.seed;
      s.failed = true;
      s.failure = e.what();
    }
    summaries[i] = std::move(s);
  });

  std::vector<int> next(out.cells.size(), 0);
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    SweepCell& cell = out.cells[jobs[i].cell];
    summaries[i].value = cell.value;
    cell.runs[static_cast<std::size_t>(next[jobs[i].cell]++)] = std::move(summaries[i]);
  }
  for (SweepCell& c : out.cells) fill_medians(c);
  return out;
}

// ---------------------------------------------------------------------------

BoundInputs load_bound_inputs(const std::string& dir,
                              const std::optional<std::string>& constants_path) {
  namespace fs = std::filesystem;
  const json trace = read_json(fs::path(dir) / "trace.json");
  BoundInputs in;
  try {
    in.trace.algorithm = parse_algorithm(trace.at("algorithm").get<std::string>());
    in.eta = trace.at("eta").get<double>();
    in.tau = trace.at("tau").get<int>();
    in.trace.initial_loss = from_num(trace.at("initial_loss"));
    in.trace.initial_size = trace.at("initial_size").get<std::int64_t>();
    in.f_star = from_num(trace.at("f_star"));
    const std::string f_source = trace.value("f_star_source", std::string("unknown"));
    for (const json& r : trace.at("rounds")) {
      RoundRecord rec;
      rec.round = r.at("round").get<int>();
      rec.loss = from_num(r.at("loss"));
      rec.grad_norm_sq = from_num(r.at("grad_norm_sq"));
      rec.grad_norm_sq_current = from_num(r.at("grad_norm_sq_current"));
      rec.err_sq_norm = from_num(r.at("err_sq_norm"));
      rec.total_size = r.at("S_t").get<std::int64_t>();
      rec.new_size = r.at("D_t").get<std::int64_t>();
      rec.device_sizes = r.at("device_sizes").get<std::vector<std::int64_t>>();
      rec.rho = r.at("rho").get<std::vector<double>>();
      in.trace.rounds.push_back(std::move(rec));
    }

    const fs::path cpath =
        constants_path ? fs::path(*constants_path) : fs::path(dir) / "constants.json";
    if (!fs::exists(cpath)) {
      throw ConfigError("no constants at '" + cpath.string() +
                        "'; run with analysis.probes >= 2 or pass --constants");
    }
    const json c = read_json(cpath);
    static const std::set<std::string> kKeys = {"L", "sigma_sq", "G", "alpha_sq", "beta_sq"};
    for (const auto& [key, value] : c.items()) {
      if (!kKeys.count(key)) throw ConfigError("unknown key '" + key + "' in constants file");
    }
    in.constants.L = c.at("L").get<double>();
    in.constants.sigma_sq = c.at("sigma_sq").get<double>();
    in.constants.alpha_sq = c.at("alpha_sq").get<double>();
    in.constants.beta_sq = c.at("beta_sq").get<double>();
    const json& g = c.at("G");
    if (g.is_number()) {
      in.constants.G.assign(in.trace.rounds.size(), g.get<double>());
    } else {
      in.constants.G = g.get<std::vector<double>>();
    }
    in.provenance = std::string(constants_path ? "provided constants" : "empirical constants") +
                    "; F* " + f_source;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bound inputs: ") + e.what());
  }
  return in;
}

BoundReport compute_bound(const BoundInputs& in) {
  if (std::isnan(in.f_star) || std::isnan(in.trace.initial_loss)) {
    throw ConfigError("bound: F_0 or F* is unknown");
  }
  const double gap = in.trace.initial_loss - in.f_star;
  if (gap < 0.0) throw ConfigError("bound: F* exceeds the initial loss");
  BoundReport report = in.trace.algorithm == Algorithm::kFedAvg
                           ? theorem1_bound(in.trace, in.constants, in.eta, in.tau, gap)
                           : theorem2_bound(in.trace, in.constants, in.eta, gap);
  report.provenance = in.provenance;
  return report;
}

void write_bound_report(const BoundReport& report, const std::string& dir) {
  namespace fs = std::filesystem;
  write_file(fs::path(dir) / "bounds.txt", report.to_text());
  write_file(fs::path(dir) / "bounds.csv", report.to_csv());
}

}  // namespace fliscc
