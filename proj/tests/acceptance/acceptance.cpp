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

// Acceptance suite: one PASS/FAIL line per criterion. Tolerances are fixed
// here and printed with each result.

#include <algorithm>
#include <chrono>
#include <cstdarg>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fliscc/analysis.hpp"
#include "fliscc/config.hpp"
#include "fliscc/cost.hpp"
#include "fliscc/harness.hpp"
#include "fliscc/learning.hpp"
#include "fliscc/ota_channel.hpp"
#include "oracles.hpp"

using namespace fliscc;
namespace fs = std::filesystem;

namespace {

// Pinned tolerances.
constexpr double kLemmaTol = 1e-10;
constexpr double kFdStep = 1e-5;
constexpr double kFdRelTol = 1e-4;
constexpr double kFdFloor = 1e-3;  // relative tolerance applies to max(|fd|, floor)
constexpr double kChannelTol = 1e-12;
constexpr double kEquivTol = 1e-10;
constexpr double kCostTol = 1e-12;
constexpr double kRatioTol = 1e-12;
constexpr double kIidRatio = 0.6;
constexpr int kSeeds = 5;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
  char buf[512];
  va_list args;
  va_start(args, f);
  std::vsnprintf(buf, sizeof buf, f, args);
  va_end(args);
  return buf;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 == 1 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

SampleBatch random_batch(std::mt19937_64& gen, std::size_t rows, std::size_t d, int classes) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_int_distribution<int> label(0, classes - 1);
  SampleBatch b;
  b.dim = d;
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < d; ++j) b.features.push_back(normal(gen));
    b.labels.push_back(label(gen));
  }
  return b;
}

ParamVector random_params(std::mt19937_64& gen, std::size_t q, double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  ParamVector w(q);
  for (std::size_t j = 0; j < q; ++j) w[j] = normal(gen);
  return w;
}

// Largest eta (by bisection) accepted by `ok` on [0, hi].
double largest_eta(const std::function<bool(double)>& ok, double hi) {
  double lo = 0.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (ok(mid) ? lo : hi) = mid;
  }
  return lo;
}

bool feasible_everywhere(Algorithm alg, double eta, double L, int tau, const SensingSchedule& s) {
  for (int t = 1; t <= s.rounds(); ++t) {
    const auto st = s.total_cumulative(t), sp = s.total_cumulative(t - 1);
    const bool ok = alg == Algorithm::kFedAvg ? fedavg_lr_feasible(eta, L, tau, st, sp)
                                              : fedsgd_lr_feasible(eta, L, st, sp);
    if (!ok) return false;
  }
  return true;
}

// 1 -------------------------------------------------------------------------
Outcome lemma1_exactness() {
  std::mt19937_64 gen(101);
  std::uniform_int_distribution<std::size_t> size(1, 20);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t N = 1 + trial % 5;
    const ModelSpec m = trial % 2 == 0 ? ModelSpec::logistic(4, 3)
                                       : ModelSpec::quadratic(random_params(gen, 5));
    std::vector<SampleBatch> old, fresh;
    for (std::size_t n = 0; n < N; ++n) {
      old.push_back(random_batch(gen, size(gen), 4, 3));
      fresh.push_back(random_batch(gen, size(gen), 4, 3));
    }
    const ParamVector w = random_params(gen, m.param_count());
    const Lemma1Check c = lemma1_check(w, old, fresh, m);
    worst = std::max(worst, c.residual / (1.0 + c.lhs_norm));
  }
  return {worst <= kLemmaTol,
          fmt("max residual/(1+|LHS|) = %.2e over 1000 instances (tol %.0e)", worst, kLemmaTol)};
}

// 2 -------------------------------------------------------------------------
Outcome gradient_correctness() {
  std::mt19937_64 gen(202);
  int failures = 0;
  double worst = 0.0;
  const char* names[] = {"quadratic", "logistic", "mlp"};
  std::string per_kind;
  for (int kind = 0; kind < 3; ++kind) {
    double kind_worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
      const SampleBatch data = random_batch(gen, 12, 4, 3);
      const ModelSpec m = kind == 0   ? ModelSpec::quadratic(random_params(gen, 7))
                          : kind == 1 ? ModelSpec::logistic(4, 3)
                                      : ModelSpec::mlp(4, 3, 6);
      const ParamVector w = random_params(gen, m.param_count(), 0.7);
      const ParamVector g = local_gradient(w, data, m);
      const auto fd = oracle::finite_difference(
          [&](const std::vector<double>& x) { return local_loss(ParamVector(x), data, m); },
          w.values(), kFdStep);
      for (std::size_t k = 0; k < fd.size(); ++k) {
        const double rel = std::abs(g[k] - fd[k]) / std::max(std::abs(fd[k]), kFdFloor);
        kind_worst = std::max(kind_worst, rel);
        if (rel > kFdRelTol) ++failures;
      }
    }
    worst = std::max(worst, kind_worst);
    per_kind += fmt(" %s %.1e", names[kind], kind_worst);
  }
  return {failures == 0, fmt("worst relative deviation:%s; %d coordinates over tol %.0e (step %.0e)",
                             per_kind.c_str(), failures, kFdRelTol, kFdStep)};
}

// 3 -------------------------------------------------------------------------
Outcome channel_algebra() {
  std::mt19937_64 gen(303);
  std::uniform_real_distribution<double> unit(0.05, 3.0);
  auto rng = make_stream(303, StreamPurpose::kTest, 0, 0);
  double worst = 0.0;
  double worst_exact = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t N = 1 + trial % 5, q = 1 + trial % 16;
    std::vector<ParamVector> u;
    std::vector<std::vector<double>> uv;
    for (std::size_t n = 0; n < N; ++n) {
      u.push_back(random_params(gen, q, 2.0));
      uv.push_back(u.back().values());
    }
    std::vector<std::int64_t> sizes(N);
    for (auto& s : sizes) s = 1 + static_cast<std::int64_t>(unit(gen) * 30);
    const AggregationWeights rho = weight_fraction(sizes);

    ChannelRealization c;
    c.h = draw_channel(static_cast<int>(N), rng);
    for (std::size_t n = 0; n < N; ++n) c.p.push_back(unit(gen));
    c.lambda = unit(gen);
    c.noise_variance = unit(gen);
    const ParamVector z = random_params(gen, q, std::sqrt(c.noise_variance));
    const auto r = ota_aggregate_with_noise(u, rho, c, z);
    const auto ref = oracle::ota_error(uv, rho.rho, c.h, c.p, c.lambda, z.values());
    const ParamVector diff = r.received - r.ideal;
    for (std::size_t j = 0; j < q; ++j) {
      worst = std::max(worst, std::abs(diff[j] - ref[j]) / std::max(1.0, std::abs(ref[j])));
    }

    const std::vector<double> pmax(N, 10.0);
    const PowerAllocation a = power_control(c.h, pmax, PowerPolicy::kFullInversion);
    ChannelRealization inv = c;
    inv.p = a.p;
    inv.lambda = a.lambda;
    inv.noise_variance = 0.0;
    const auto e = ota_aggregate(u, rho, inv, rng);
    worst_exact = std::max(worst_exact, e.error_sq_norm);
  }
  return {worst <= kChannelTol && worst_exact == 0.0,
          fmt("max |(received-ideal)-closed form| = %.2e (tol %.0e); max ||eps||^2 under noiseless "
              "full inversion = %g",
              worst, kChannelTol, worst_exact)};
}

// 4 -------------------------------------------------------------------------
ExperimentConfig equivalence_config(ModelKind kind) {
  ExperimentConfig c;
  c.devices = 4;
  c.rounds = 50;
  c.seed = 404;
  c.error_free = true;
  c.model.kind = kind;
  c.model.features = 5;
  c.model.classes = 3;
  c.model.dim = 6;
  c.training = {0.1, 1, 1000000};
  c.schedule.total_per_device = 100;
  c.schedule.initial_size = 10;
  c.data.test_size = 50;
  c.analysis.probes = 0;
  return c;
}

Outcome classic_equivalence() {
  double worst = 0.0;
  for (ModelKind kind : {ModelKind::kQuadratic, ModelKind::kLogistic}) {
    ExperimentConfig avg = equivalence_config(kind);
    ExperimentConfig sgd = avg;
    sgd.algorithm = Algorithm::kFedSgd;
    ExperimentSetup setup = build_setup(avg);
    for (auto& s : setup.streams) s = setup.streams[0];
    RunOptions opts;
    opts.keep_iterates = true;
    const auto ra = run_experiment(avg, setup, opts);
    const auto rs = run_experiment(sgd, setup, opts);
    if (ra.failed || rs.failed || ra.iterates.size() != 51 || rs.iterates.size() != 51) {
      return {false, "run failed or produced the wrong number of iterates"};
    }
    // Centralized full-batch gradient descent on one device's data.
    ParamVector w = ra.iterates[0];
    for (int t = 1; t <= avg.rounds; ++t) {
      const auto n = static_cast<std::size_t>(setup.schedule.cumulative(0, t));
      const std::vector<std::size_t> rows(setup.streams[0].begin(), setup.streams[0].begin() + n);
      w = w - avg.training.eta * local_gradient(w, setup.pool.subset(rows), setup.model);
      for (std::size_t j = 0; j < w.size(); ++j) {
        worst = std::max(worst, std::abs(ra.iterates[t][j] - rs.iterates[t][j]));
        worst = std::max(worst, std::abs(ra.iterates[t][j] - w[j]));
      }
    }
  }
  return {worst <= kEquivTol,
          fmt("max coordinate gap FedAVG/FedSGD/centralized GD over 50 rounds = %.2e (tol %.0e)",
              worst, kEquivTol)};
}

// 5 -------------------------------------------------------------------------
Outcome bound_validity() {
  std::mt19937_64 gen(505);
  int evaluated = 0, violations = 0, skipped = 0;
  double tightest = 0.0;
  for (int k = 0; evaluated < 24 && k < 200; ++k) {
    ExperimentConfig c;
    c.algorithm = k % 2 == 0 ? Algorithm::kFedAvg : Algorithm::kFedSgd;
    c.devices = 2 + static_cast<int>(gen() % 5);
    c.rounds = 5 + static_cast<int>(gen() % 36);
    c.seed = 5000 + static_cast<std::uint64_t>(k);
    c.model.kind = ModelKind::kQuadratic;
    c.model.dim = 3 + gen() % 10;
    c.model.center_scale = 0.5 + static_cast<double>(gen() % 100) / 25.0;
    const int tau = 1 + static_cast<int>(gen() % 4);
    c.training = {1e-3, tau, 1 + gen() % 8};
    const ScheduleStrategy strategies[] = {ScheduleStrategy::kUniform,
                                           ScheduleStrategy::kFrontLoaded,
                                           ScheduleStrategy::kAllAtStart};
    c.schedule.strategy = strategies[gen() % 3];
    c.schedule.total_per_device = 10 + static_cast<std::int64_t>(gen() % 200);
    c.schedule.initial_size = gen() % 2 == 0 ? 0 : 5;
    c.data.test_size = 10;
    switch (gen() % 3) {
      case 0: c.error_free = true; break;
      case 1:
        c.channel.policy = PowerPolicy::kFullInversion;
        c.channel.noise_variance = 1e-3 * static_cast<double>(gen() % 100);
        break;
      default:
        c.channel.policy = PowerPolicy::kFixedLambda;
        c.channel.lambda = 1.0;
        c.channel.noise_variance = 1e-3 * static_cast<double>(gen() % 100);
    }
    c.analysis.probes = 8;
    c.analysis.probe_batches = 3;

    const ExperimentSetup setup = build_setup(c);
    // L = 1 for the quadratic; stay strictly inside the condition.
    const double cap = largest_eta(
        [&](double eta) { return feasible_everywhere(c.algorithm, eta, 1.0, tau, setup.schedule); },
        1.0);
    c.training.eta = cap * (0.2 + 0.7 * static_cast<double>(gen() % 1000) / 1000.0);

    const ExperimentResult r = run_experiment(c, setup);
    if (r.failed || !r.constants) {
      ++skipped;
      continue;
    }
    const double gap = r.trace.initial_loss - 0.0;
    const BoundReport b = c.algorithm == Algorithm::kFedAvg
                              ? theorem1_bound(r.trace, *r.constants, c.training.eta, tau, gap)
                              : theorem2_bound(r.trace, *r.constants, c.training.eta, gap);
    if (!b.feasible) {
      ++skipped;
      continue;
    }
    ++evaluated;
    if (!(b.measured <= b.total)) ++violations;
    tightest = std::max(tightest, b.measured / b.total);
  }
  return {evaluated >= 20 && violations == 0,
          fmt("%d feasible configurations, %d violations, %d skipped; max measured/bound = %.3f",
              evaluated, violations, skipped, tightest)};
}

// 6 -------------------------------------------------------------------------
ExperimentConfig logistic_base(std::uint64_t seed) {
  ExperimentConfig c;
  c.devices = 10;
  c.seed = seed;
  c.error_free = true;
  c.model.kind = ModelKind::kLogistic;
  c.model.features = 10;
  c.model.classes = 5;
  c.data.source = DataSource::kBlobs;
  c.data.separation = 1.0;
  c.data.noise = 1.0;
  c.data.test_size = 500;
  c.analysis.probes = 0;
  return c;
}

Outcome iid_advantage() {
  constexpr double kTarget = 0.9;
  std::vector<double> ratio_inputs_avg, ratio_inputs_sgd;
  double eta_used = 0.0;
  for (int s = 0; s < kSeeds; ++s) {
    ExperimentConfig c = logistic_base(600 + static_cast<std::uint64_t>(s));
    c.rounds = 300;
    c.training = {1e-3, 5, 16};
    c.schedule.total_per_device = 300;
    c.output.target_loss = kTarget;
    const ExperimentSetup setup = build_setup(c);
    const double L = smoothness_upper_bound(setup.model, setup.pool);
    // One learning rate that meets both algorithms' conditions in every round.
    const double eta = largest_eta(
        [&](double e) {
          return feasible_everywhere(Algorithm::kFedAvg, e, L, 5, setup.schedule) &&
                 feasible_everywhere(Algorithm::kFedSgd, e, L, 5, setup.schedule);
        },
        10.0 / L);
    c.training.eta = eta;
    eta_used = eta;
    for (Algorithm alg : {Algorithm::kFedAvg, Algorithm::kFedSgd}) {
      c.algorithm = alg;
      const auto summary = summarize(run_experiment(c, setup), c);
      const double rounds =
          summary.rounds_to_target < 0 ? INFINITY : static_cast<double>(summary.rounds_to_target);
      (alg == Algorithm::kFedAvg ? ratio_inputs_avg : ratio_inputs_sgd).push_back(rounds);
    }
  }
  const double avg = median(ratio_inputs_avg), sgd = median(ratio_inputs_sgd);
  const bool reached = std::isfinite(avg) && std::isfinite(sgd);
  return {reached && avg <= kIidRatio * sgd,
          fmt("median rounds to loss %.2f: FedAVG %g, FedSGD %g, ratio %.3f (limit %.1f); eta %.4g",
              kTarget, avg, sgd, avg / sgd, kIidRatio, eta_used)};
}

// 7 -------------------------------------------------------------------------
Outcome noniid_ordering() {
  const std::vector<std::string> gammas{"100", "1", "0.1"};
  std::vector<double> loss[2][3];
  for (int s = 0; s < kSeeds; ++s) {
    for (std::size_t g = 0; g < gammas.size(); ++g) {
      for (int a = 0; a < 2; ++a) {
        ExperimentConfig c = logistic_base(700 + static_cast<std::uint64_t>(s));
        c.algorithm = a == 0 ? Algorithm::kFedAvg : Algorithm::kFedSgd;
        c.rounds = 100;
        c.training = {0.05, 5, 16};
        c.schedule.total_per_device = std::nullopt;
        c.data.pool_size = 3000;
        apply_axis(c, "gamma", gammas[g]);
        const auto r = run_experiment(c);
        loss[a][g].push_back(r.failed ? INFINITY : r.final_loss());
      }
    }
  }
  double med[2][3];
  for (int a = 0; a < 2; ++a) {
    for (int g = 0; g < 3; ++g) med[a][g] = median(loss[a][g]);
  }
  const double d_avg = med[0][2] - med[0][0], d_sgd = med[1][2] - med[1][0];
  return {d_avg > d_sgd,
          fmt("median final loss gamma=100/1/0.1: FedAVG %.4f/%.4f/%.4f, FedSGD %.4f/%.4f/%.4f; "
              "degradation FedAVG %.4f > FedSGD %.4f",
              med[0][0], med[0][1], med[0][2], med[1][0], med[1][1], med[1][2], d_avg, d_sgd)};
}

// 8 -------------------------------------------------------------------------
Outcome noise_ordering() {
  const std::vector<std::string> sigmas{"0", "1", "10"};
  std::vector<double> loss[2][3];
  BoundReport avg_report, sgd_report;
  double eta = 0.05;
  int tau = 5;
  for (int s = 0; s < kSeeds; ++s) {
    for (std::size_t k = 0; k < sigmas.size(); ++k) {
      for (int a = 0; a < 2; ++a) {
        ExperimentConfig c = logistic_base(800 + static_cast<std::uint64_t>(s));
        c.error_free = false;
        c.algorithm = a == 0 ? Algorithm::kFedAvg : Algorithm::kFedSgd;
        c.rounds = 60;
        c.training = {eta, tau, 16};
        c.schedule.total_per_device = 200;
        c.channel.policy = PowerPolicy::kFixedLambda;
        c.channel.lambda = 1.0;
        apply_axis(c, "sigma_z", sigmas[k]);
        const auto r = run_experiment(c);
        loss[a][k].push_back(r.failed ? INFINITY : r.final_loss());
      }
    }
  }
  double med[2][3];
  for (int a = 0; a < 2; ++a) {
    for (int k = 0; k < 3; ++k) med[a][k] = median(loss[a][k]);
  }
  const double d_avg = med[0][2] - med[0][0], d_sgd = med[1][2] - med[1][0];

  // Ratio identity on one recorded noisy trace.
  ExperimentConfig c = logistic_base(800);
  c.error_free = false;
  c.rounds = 20;
  c.training = {eta, tau, 16};
  c.schedule.total_per_device = 200;
  c.channel.policy = PowerPolicy::kFixedLambda;
  c.channel.noise_variance = 1.0;
  const auto r = run_experiment(c);
  AssumptionConstants k;
  k.L = 1.0;
  k.G.assign(static_cast<std::size_t>(c.rounds), 1.0);
  const double small_eta = 0.01;
  const BoundReport b1 = theorem1_bound(r.trace, k, small_eta, tau, 1.0);
  const BoundReport b2 = theorem2_bound(r.trace, k, small_eta, 1.0);
  const double ratio = b1.term("communication_errors") / b2.term("communication_errors");
  const double identity = std::abs(ratio * small_eta * small_eta * tau * tau - 1.0);

  return {d_avg > d_sgd && b1.feasible && b2.feasible && identity <= kRatioTol,
          fmt("median final loss sigma_z=0/1/10: FedAVG %.4f/%.4f/%.4f, FedSGD %.4f/%.4f/%.4f; "
              "degradation FedAVG %.4f > FedSGD %.4f; comm-term ratio * eta^2 tau^2 - 1 = %.1e "
              "(tol %.0e)",
              med[0][0], med[0][1], med[0][2], med[1][0], med[1][1], med[1][2], d_avg, d_sgd,
              identity, kRatioTol)};
}

// 9 -------------------------------------------------------------------------
Outcome cost_exactness() {
  struct Instance {
    double value, expected;
  };
  const std::vector<Instance> cases = {
      {comm_latency(14, 14, 1e-3), 1e-3},
      {comm_latency(15, 14, 1e-3), 2e-3},
      {comm_latency(7850, 14, 1e-3), 0.561},
      {comm_energy(10.0, 1e-3), 0.01},
      {comm_energy(2.0, 3e-3), 0.006},
      {comp_latency(1e6, 60, 1e9), 0.06},
      {comp_latency(2e5, 250, 4e8), 0.125},
      {comp_energy(1e6, 1e-28, 1e9, 60), 6e-3},
      {comp_energy(5e5, 2e-28, 2e9, 100, 2.0), 0.08},
      {round_cost(std::vector<DeviceCost>{{3e-3, 1e-3, 5e-4}, {5e-3, 2e-3, 5e-4}, {4e-3, 0, 0}},
                  2e-3)
           .total_latency,
       7e-3},
  };
  double worst = 0.0;
  for (const auto& c : cases) {
    worst = std::max(worst, std::abs(c.value - c.expected) / std::abs(c.expected));
  }
  const bool headline = comm_latency(14, 14, 1e-3) == 1e-3;
  return {headline && worst <= kCostTol,
          fmt("ceil(14/14) * 1 ms = %g s; max relative error over %zu instances = %.2e (tol %.0e)",
              comm_latency(14, 14, 1e-3), cases.size(), worst, kCostTol)};
}

// 10 ------------------------------------------------------------------------
std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome determinism() {
  ExperimentConfig c = logistic_base(1000);
  c.error_free = false;
  c.rounds = 15;
  c.devices = 6;
  c.training = {0.05, 3, 8};
  c.schedule.total_per_device = std::nullopt;
  c.data.pool_size = 600;
  c.partition = {PartitionMode::kDirichlet, 0.5, 1000};
  c.analysis.probes = 4;
  const fs::path root = fs::temp_directory_path() / "fliscc_acceptance_determinism";
  fs::remove_all(root);
  std::vector<std::size_t> hashes;
  const int threads[] = {1, 1, 4};
  for (int i = 0; i < 3; ++i) {
    RunOptions opts;
    opts.threads = threads[i];
    const fs::path dir = root / std::to_string(i);
    write_result(run_experiment(c, opts), c, dir.string());
    hashes.push_back(std::hash<std::string>{}(read_file(dir / "metrics.csv") +
                                              read_file(dir / "trace.json")));
  }
  fs::remove_all(root);
  return {hashes[0] == hashes[1] && hashes[0] == hashes[2],
          fmt("metric hashes serial %016zx, rerun %016zx, 4 threads %016zx", hashes[0], hashes[1],
              hashes[2])};
}

// 11 ------------------------------------------------------------------------
Outcome rate_scaling() {
  std::vector<double> measured;
  std::string detail;
  for (int T : {100, 400, 1600}) {
    ExperimentConfig c;
    c.devices = 10;
    c.rounds = T;
    c.seed = 1100;
    c.error_free = true;
    c.model.kind = ModelKind::kQuadratic;
    c.model.dim = 10;
    const int tau = 5;
    c.training = {std::sqrt(10.0 / (tau * T)), tau, 4};
    c.schedule.total_per_device = 2 * T;
    c.data.test_size = 10;
    c.analysis.probes = 0;
    const auto r = run_experiment(c);
    measured.push_back(r.failed ? INFINITY : measured_average_grad_norm_sq(r.trace));
    detail += fmt(" T=%d: %.4g", T, measured.back());
  }
  const bool decreasing = measured[0] > measured[1] && measured[1] > measured[2];
  return {decreasing, "measured average squared gradient norm," + detail};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    Outcome (*run)();
  };
  const Criterion criteria[] = {
      {1, "data-split gradient identity", lemma1_exactness},
      {2, "gradient correctness", gradient_correctness},
      {3, "channel algebra", channel_algebra},
      {4, "classic FL equivalence", classic_equivalence},
      {5, "bound validity", bound_validity},
      {6, "IID advantage of FedAVG", iid_advantage},
      {7, "non-IID robustness ordering", noniid_ordering},
      {8, "communication-error robustness ordering", noise_ordering},
      {9, "cost model exactness", cost_exactness},
      {10, "determinism", determinism},
      {11, "1/sqrt(T) rate scaling", rate_scaling},
  };
  int failed = 0;
  for (const Criterion& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("[%s] %2d %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", c.id, c.name,
                o.detail.c_str(), secs);
    std::fflush(stdout);
    if (!o.pass) ++failed;
  }
  std::printf("%d/11 criteria passed\n", 11 - failed);
  return failed == 0 ? 0 : 1;
}
