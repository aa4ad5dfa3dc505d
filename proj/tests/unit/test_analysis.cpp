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

#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "fliscc/analysis.hpp"
#include "fliscc/errors.hpp"
#include "oracles.hpp"

using namespace fliscc;

namespace {

// Trace with the given per-device arrivals (new[t-1][n]) and errors.
TrainingTrace make_trace(Algorithm alg, const std::vector<std::vector<std::int64_t>>& arrivals,
                         const std::vector<double>& errors, std::vector<std::int64_t> initial = {}) {
  TrainingTrace trace;
  trace.algorithm = alg;
  const std::size_t N = arrivals.at(0).size();
  if (initial.empty()) initial.assign(N, 0);
  std::vector<std::int64_t> sizes = initial;
  trace.initial_size = std::accumulate(initial.begin(), initial.end(), std::int64_t{0});
  std::int64_t total = trace.initial_size;
  for (std::size_t t = 0; t < arrivals.size(); ++t) {
    RoundRecord r;
    r.round = static_cast<int>(t) + 1;
    for (std::size_t n = 0; n < N; ++n) {
      sizes[n] += arrivals[t][n];
      r.new_size += arrivals[t][n];
    }
    total += r.new_size;
    r.total_size = total;
    r.device_sizes = sizes;
    r.rho = weight_fraction(sizes).rho;
    r.err_sq_norm = errors.at(t);
    r.grad_norm_sq = 1.0 / (1.0 + t);
    trace.rounds.push_back(r);
  }
  return trace;
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

ParamVector random_params(std::mt19937_64& gen, std::size_t q) {
  std::normal_distribution<double> normal(0.0, 1.0);
  ParamVector w(q);
  for (std::size_t j = 0; j < q; ++j) w[j] = normal(gen);
  return w;
}

// Probe of a two-device quadratic problem f_n = 0.5||w - c_n||^2.
ConstantProbe quadratic_probe(int round, const ParamVector& w, const ParamVector& w_alt,
                              const std::vector<ParamVector>& centers, std::vector<double> rho) {
  ConstantProbe p;
  p.round = round;
  p.w = w;
  p.w_alt = w_alt;
  p.rho = rho;
  std::vector<ParamVector> alt;
  for (const auto& c : centers) {
    p.device_grads.push_back(w - c);
    alt.push_back(w_alt - c);
  }
  p.grad = weighted_sum(p.device_grads, AggregationWeights{rho});
  p.grad_alt = weighted_sum(alt, AggregationWeights{rho});
  return p;
}

}  // namespace

TEST_CASE("data-split gradient identity") {
  std::mt19937_64 gen(1);
  const ModelSpec logistic = ModelSpec::logistic(3, 3);

  SUBCASE("no new data is an exact identity") {
    std::vector<SampleBatch> old{random_batch(gen, 5, 3, 3), random_batch(gen, 8, 3, 3)};
    std::vector<SampleBatch> none(2, SampleBatch{3, {}, {}});
    const ParamVector w = random_params(gen, logistic.param_count());
    CHECK(lemma1_residual(w, old, none, logistic) == 0.0);
  }
  SUBCASE("single device") {
    std::vector<SampleBatch> old{random_batch(gen, 9, 3, 3)};
    std::vector<SampleBatch> fresh{random_batch(gen, 4, 3, 3)};
    const ParamVector w = random_params(gen, logistic.param_count());
    CHECK(lemma1_residual(w, old, fresh, logistic) <= 1e-12);
  }
  SUBCASE("random instances over every model kind") {
    std::uniform_int_distribution<std::size_t> size(1, 20);
    for (int trial = 0; trial < 1000; ++trial) {
      const int kind = trial % 3;
      ModelSpec m = kind == 0   ? ModelSpec::quadratic(random_params(gen, 4))
                    : kind == 1 ? logistic
                                : ModelSpec::mlp(3, 3, 4);
      const std::size_t N = 1 + trial % 5;
      std::vector<SampleBatch> old, fresh;
      for (std::size_t n = 0; n < N; ++n) {
        old.push_back(random_batch(gen, size(gen) - (trial % 7 == 0 ? 1 : 0), 3, 3));
        fresh.push_back(random_batch(gen, size(gen) - (trial % 11 == 0 ? 1 : 0), 3, 3));
      }
      const ParamVector w = random_params(gen, m.param_count());
      const Lemma1Check c = lemma1_check(w, old, fresh, m);
      CHECK(c.residual <= 1e-10 * (1.0 + c.lhs_norm));
    }
  }
  SUBCASE("errors") {
    std::vector<SampleBatch> none(2, SampleBatch{3, {}, {}});
    const ParamVector w(logistic.param_count());
    CHECK_THROWS_AS(lemma1_residual(w, none, none, logistic), std::invalid_argument);
    std::vector<SampleBatch> one{random_batch(gen, 2, 3, 3)};
    CHECK_THROWS_AS(lemma1_residual(w, none, one, logistic), std::invalid_argument);
  }
}

TEST_CASE("constant estimation") {
  const std::vector<ParamVector> centers{{1.0, 0.0, -0.5}, {0.2, 0.7, 0.1}};
  std::mt19937_64 gen(2);

  SUBCASE("quadratic smoothness is one") {
    std::vector<ConstantProbe> probes;
    for (int t = 1; t <= 4; ++t) {
      const ParamVector w = random_params(gen, 3);
      probes.push_back(quadratic_probe(t, w, w + 0.01 * random_params(gen, 3), centers, {0.3, 0.7}));
    }
    const auto c = estimate_constants(probes, nullptr, false);
    CHECK(std::abs(c.L - 1.0) <= 1e-12);
    CHECK(c.sigma_sq == 0.0);
    REQUIRE(c.G.size() == 4);
    for (int t = 1; t <= 4; ++t) {
      const auto& p = probes[t - 1];
      CHECK(c.G[t - 1] == doctest::Approx(1.1 * std::max(p.grad.sq_norm(), p.grad_alt.sq_norm())));
    }
  }
  SUBCASE("identical devices have no dissimilarity") {
    const std::vector<ParamVector> same{centers[0], centers[0]};
    std::vector<ConstantProbe> probes;
    for (int t = 1; t <= 3; ++t) {
      const ParamVector w = random_params(gen, 3);
      probes.push_back(quadratic_probe(t, w, w + 0.1 * random_params(gen, 3), same, {0.5, 0.5}));
    }
    const auto c = estimate_constants(probes, nullptr, false);
    CHECK(c.alpha_sq == 1.0);
    CHECK(c.beta_sq == 0.0);
  }
  SUBCASE("two-device envelope matches a grid search") {
    std::vector<ConstantProbe> probes;
    std::vector<double> A, B;
    for (int t = 1; t <= 5; ++t) {
      const ParamVector w = random_params(gen, 3);
      probes.push_back(quadratic_probe(t, w, w + 0.1 * random_params(gen, 3), centers, {0.3, 0.7}));
      const auto& p = probes.back();
      A.push_back(0.3 * p.device_grads[0].sq_norm() + 0.7 * p.device_grads[1].sq_norm());
      B.push_back(p.grad.sq_norm());
    }
    const auto c = estimate_constants(probes, nullptr, false);
    // alpha^2 = 1 is the least admissible value, so the pair is fixed by beta^2.
    const double grid = oracle::grid_beta(A, B, 1.0, 1e-7, 10000000);
    CHECK(c.alpha_sq == 1.0);
    CHECK(std::abs(c.beta_sq - grid) <= 1e-6);
    CHECK(oracle::grid_beta(A, B, c.alpha_sq, 1e-7, 10000000) <= c.beta_sq + 1e-7);
    // Known closed form for two quadratics: rho_1 rho_2 ||c_1 - c_2||^2.
    CHECK(std::abs(c.beta_sq - 0.21 * (centers[0] - centers[1]).sq_norm()) <= 1e-12);

    const auto iid = estimate_constants(probes, nullptr, true);
    CHECK(iid.alpha_sq == 1.0);
    CHECK(iid.beta_sq == 0.0);
  }
  SUBCASE("mini-batch variance") {
    auto p1 = quadratic_probe(1, ParamVector{0.0, 0.0, 0.0}, ParamVector{1.0, 0.0, 0.0}, centers, {0.5, 0.5});
    auto p2 = quadratic_probe(2, ParamVector{1.0, 1.0, 1.0}, ParamVector{1.0, 1.0, 0.0}, centers, {0.5, 0.5});
    p1.minibatch_grads = {{p1.device_grads[0] + ParamVector{1.0, 0.0, 0.0},
                           p1.device_grads[0] - ParamVector{1.0, 0.0, 0.0}},
                          {p1.device_grads[1] + ParamVector{0.0, 2.0, 0.0}}};
    const std::vector<ConstantProbe> probes{p1, p2};
    CHECK(estimate_constants(probes, nullptr, false).sigma_sq == 4.0);
  }
  SUBCASE("trace gradients and missing rounds") {
    std::vector<ConstantProbe> probes{
        quadratic_probe(1, ParamVector{0.0, 0.0, 0.0}, ParamVector{0.1, 0.0, 0.0}, centers, {0.5, 0.5}),
        quadratic_probe(3, ParamVector{0.0, 0.0, 0.0}, ParamVector{0.0, 0.1, 0.0}, centers, {0.5, 0.5})};
    TrainingTrace trace = make_trace(Algorithm::kFedAvg, {{1, 1}, {1, 1}, {1, 1}, {1, 1}}, {0, 0, 0, 0});
    trace.rounds[1].grad_norm_sq = 50.0;
    const auto c = estimate_constants(probes, &trace, false);
    REQUIRE(c.G.size() == 4);
    // Round 2's starting gradient is also round 1's final gradient.
    CHECK(c.G[0] == doctest::Approx(55.0));
    CHECK(c.G[1] == doctest::Approx(55.0));
    CHECK(c.G[3] >= 1.1 * trace.rounds[3].grad_norm_sq);
  }
  SUBCASE("errors") {
    const auto p = quadratic_probe(1, ParamVector{0.0, 0.0, 0.0}, ParamVector{0.1, 0.0, 0.0}, centers, {0.5, 0.5});
    CHECK_THROWS_AS(estimate_constants(std::vector<ConstantProbe>{p}, nullptr, false),
                    std::invalid_argument);
    auto flat = p;
    flat.w_alt = flat.w;
    CHECK_THROWS_AS(estimate_constants(std::vector<ConstantProbe>{p, flat}, nullptr, false),
                    std::invalid_argument);
  }
}

TEST_CASE("learning-rate conditions") {
  CHECK(fedavg_lr_feasible(10.0, 50.0, 1, 100, 100));
  CHECK(fedavg_lr_feasible(0.1, 1.0, 2, 100, 100));
  CHECK(fedavg_lr_feasible(0.1, 1.0, 2, 200, 100));
  CHECK_FALSE(fedavg_lr_feasible(0.1, 10.0, 5, 100, 100));
  // Shrinking data tightens the cap below 1/5.
  CHECK_FALSE(fedavg_lr_feasible(0.15, 1.0, 2, 50, 100));

  CHECK(fedsgd_lr_feasible(0.5, 2.0, 2829, 1000));
  CHECK(fedsgd_lr_feasible(0.0, 3.0, 10, 10));
  CHECK_FALSE(fedsgd_lr_feasible(0.5, 1.0, 10, 10));
  CHECK(fedsgd_lr_feasible(1.0, 1.0, 10, 0));
  CHECK_THROWS_AS(fedsgd_lr_feasible(0.1, 0.0, 1, 1), std::invalid_argument);
}

TEST_CASE("FedAVG bound") {
  AssumptionConstants c;
  c.L = 1.0;
  c.sigma_sq = 2.0;
  c.G = {1.0, 1.0, 1.0};

  SUBCASE("IID, everything sensed at the start, T = 3") {
    const auto trace = make_trace(Algorithm::kFedAvg, {{50, 50}, {0, 0}, {0, 0}}, {0, 0, 0});
    const auto r = theorem1_bound(trace, c, 0.05, 3, 1.2);
    REQUIRE(r.feasible);
    CHECK(r.term("initialization") == doctest::Approx(4.8 / (3 * 0.05 * 3)).epsilon(1e-14));
    CHECK(r.term("communication_errors") == 0.0);
    CHECK(r.term("gradient_variance") == doctest::Approx(4 * 0.05 * 2 * 0.5).epsilon(1e-14));
    CHECK(r.term("sensing_noniid") == 0.0);
    // L^2 eta^2 sigma^2 (tau - 1) / T * (5 + 2 * (4 + 1))
    CHECK(r.term("sensing_local_updates") ==
          doctest::Approx(0.0025 * 2 * 2 / 3.0 * 15).epsilon(1e-14));
    CHECK(std::abs(r.total - (r.term("initialization") + r.term("gradient_variance") +
                              r.term("sensing_local_updates"))) <= 1e-10);
  }
  SUBCASE("a single local step has no local-update term") {
    const auto trace = make_trace(Algorithm::kFedAvg, {{10, 20}, {5, 5}, {1, 0}}, {0.1, 0.2, 0.3});
    const auto r = theorem1_bound(trace, c, 0.05, 1, 1.0);
    REQUIRE(r.feasible);
    CHECK(r.term("sensing_local_updates") == 0.0);
    CHECK(r.terms.size() == 5);
  }
  SUBCASE("infeasible inputs") {
    const auto trace = make_trace(Algorithm::kFedAvg, {{10, 20}, {5, 5}}, {0.1, 0.2});
    const auto r = theorem1_bound(trace, c, 1.0, 5, 1.0);
    CHECK_FALSE(r.feasible);
    CHECK(std::isnan(r.total));
    AssumptionConstants wild = c;
    wild.alpha_sq = 2.0;
    CHECK_FALSE(theorem1_bound(trace, wild, 0.01, 2, 1.0).feasible);
    CHECK_THROWS_AS(theorem1_bound(trace, c, 0.0, 2, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(theorem1_bound(trace, c, 0.01, 2, -1.0), std::invalid_argument);
    TrainingTrace broken = trace;
    broken.rounds[1].total_size += 1;
    CHECK_THROWS_AS(theorem1_bound(broken, c, 0.01, 2, 1.0), std::invalid_argument);
  }
}

TEST_CASE("FedSGD bound, T = 2 worked instance") {
  AssumptionConstants c;
  c.L = 2.0;
  c.alpha_sq = 1.5;
  c.beta_sq = 0.2;
  c.G = {3.0, 4.0};
  const auto trace = make_trace(Algorithm::kFedSgd, {{60, 40}, {20, 30}}, {0.3, 0.1});
  const auto r = theorem2_bound(trace, c, 0.1, 2.0);
  REQUIRE(r.feasible);
  REQUIRE(r.terms.size() == 3);
  // a = 0.5, T = 2, S = (100, 150), D_2 = 50.
  CHECK(std::abs(r.term("initialization") - 80.0) <= 1e-12 * 80.0);
  CHECK(std::abs(r.term("communication_errors") - 1.6) <= 1e-12);
  CHECK(std::abs(r.term("sensing_noniid") - 2.15) <= 1e-12);
  CHECK(std::abs(r.total - 83.75) <= 1e-12 * 83.75);

  const auto iid = make_trace(Algorithm::kFedSgd, {{60, 40}, {0, 0}, {0, 0}}, {0, 0, 0});
  AssumptionConstants ci;
  ci.L = 2.0;
  ci.G = {1.0, 1.0, 1.0};
  const auto ri = theorem2_bound(iid, ci, 0.1, 1.0);
  CHECK(ri.term("sensing_noniid") == 0.0);
  CHECK(ri.term("communication_errors") == 0.0);
}

TEST_CASE("bound term properties") {
  AssumptionConstants c;
  c.L = 1.0;
  c.sigma_sq = 0.5;
  c.alpha_sq = 1.2;
  c.beta_sq = 0.3;
  c.G = {2.0, 2.0, 2.0, 2.0};
  const auto trace = make_trace(Algorithm::kFedAvg, {{10, 10}, {5, 10}, {5, 0}, {2, 2}},
                                {0.4, 0.2, 0.1, 0.05});
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> eta_dist(0.005, 0.04);
  for (int trial = 0; trial < 200; ++trial) {
    const double eta = eta_dist(gen);
    const int tau = 1 + trial % 4;
    const auto avg = theorem1_bound(trace, c, eta, tau, 1.0);
    const auto sgd = theorem2_bound(trace, c, eta, 1.0);
    REQUIRE(avg.feasible);
    REQUIRE(sgd.feasible);
    const double ratio = avg.term("communication_errors") / sgd.term("communication_errors");
    CHECK(std::abs(ratio * eta * eta * tau * tau - 1.0) <= 1e-12);
    CHECK(avg.term("communication_errors") > theorem1_bound(trace, c, 1.5 * eta, tau, 1.0).term("communication_errors"));
    CHECK(avg.term("communication_errors") > theorem1_bound(trace, c, eta, tau + 1, 1.0).term("communication_errors"));
    CHECK(sgd.term("communication_errors") == theorem2_bound(trace, c, 2.0 * eta, 1.0).term("communication_errors"));
    for (const auto* r : {&avg, &sgd}) {
      double sum = 0.0;
      for (const auto& [name, value] : r->terms) {
        CHECK(value >= 0.0);
        sum += value;
      }
      CHECK(std::abs(r->total - sum) <= 1e-10);
    }
  }
}

TEST_CASE("complexity proxies") {
  AssumptionConstants c;
  c.alpha_sq = 1.2;
  c.beta_sq = 0.5;
  c.G = {1.0, 2.0, 3.0};
  const auto trace = make_trace(Algorithm::kFedSgd, {{30, 30}, {30, 30}, {30, 30}}, {0.5, 0.25, 0.125});
  const auto m = complexity_proxies(trace, c);
  CHECK(m.m1 == 0.875);
  // S = (60, 120, 180): ratios 4 and 2.25; D/S ratios 1 and 0.25.
  CHECK(std::abs(m.m2 - (7.25 * 0.5 + 1.2 * (1.0 * 2.0 + 0.25 * 3.0)) / 3.0) <= 1e-12);
  CHECK(std::abs(m.m3 - (5.0 + 8.0 + 6.25) / 3.0) <= 1e-12);

  AssumptionConstants iid;
  iid.G = {1.0, 1.0, 1.0};
  const auto start = make_trace(Algorithm::kFedSgd, {{30, 30}, {0, 0}, {0, 0}}, {0, 0, 0});
  const auto ms = complexity_proxies(start, iid);
  CHECK(ms.m1 == 0.0);
  CHECK(ms.m2 == 0.0);
}

TEST_CASE("report serialization") {
  AssumptionConstants c;
  c.L = 1.0;
  c.G = {1.0, 1.0};
  const auto trace = make_trace(Algorithm::kFedSgd, {{5, 5}, {5, 5}}, {0.1, 0.1});
  auto r = theorem2_bound(trace, c, 0.1, 1.0);
  r.provenance = "empirical";
  const std::string csv = r.to_csv();
  CHECK(csv.rfind("term_name,value\ninitialization,", 0) == 0);
  CHECK(csv.find("communication_errors,") != std::string::npos);
  CHECK(csv.find("\ntotal,") != std::string::npos);
  CHECK(r.to_text().find("feasible: yes") != std::string::npos);
  CHECK_THROWS_AS(r.term("gradient_variance"), std::out_of_range);
  CHECK(parse_algorithm("fedsgd") == Algorithm::kFedSgd);
  CHECK_THROWS_AS(parse_algorithm("fedprox"), ConfigError);
}
