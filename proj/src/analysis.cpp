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

#include "fliscc/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "fliscc/errors.hpp"

namespace fliscc {

Algorithm parse_algorithm(std::string_view name) {
  if (name == "fedavg") return Algorithm::kFedAvg;
  if (name == "fedsgd") return Algorithm::kFedSgd;
  throw ConfigError("unknown algorithm '" + std::string(name) + "'");
}

std::string_view to_string(Algorithm algorithm) {
  return algorithm == Algorithm::kFedAvg ? "fedavg" : "fedsgd";
}

std::int64_t TrainingTrace::total_size(int t) const {
  if (t == 0) return initial_size;
  return rounds.at(static_cast<std::size_t>(t - 1)).total_size;
}

void TrainingTrace::validate() const {
  if (initial_size < 0) throw std::invalid_argument("trace: negative S_0");
  std::int64_t prev = initial_size;
  for (std::size_t i = 0; i < rounds.size(); ++i) {
    const RoundRecord& r = rounds[i];
    if (r.round != static_cast<int>(i) + 1) {
      throw std::invalid_argument("trace: round " + std::to_string(i + 1) + " is numbered " +
                                  std::to_string(r.round));
    }
    if (r.new_size < 0 || r.total_size != prev + r.new_size) {
      throw std::invalid_argument("trace: sizes do not telescope at round " +
                                  std::to_string(r.round));
    }
    if (!r.device_sizes.empty()) {
      std::int64_t sum = 0;
      for (std::int64_t s : r.device_sizes) sum += s;
      if (sum != r.total_size) {
        throw std::invalid_argument("trace: device sizes disagree with S_t at round " +
                                    std::to_string(r.round));
      }
    }
    prev = r.total_size;
  }
}

double measured_average_grad_norm_sq(const TrainingTrace& trace) {
  if (trace.rounds.empty()) return 0.0;
  double sum = 0.0;
  for (const RoundRecord& r : trace.rounds) sum += r.grad_norm_sq;
  return sum / static_cast<double>(trace.rounds.size());
}

// ---------------------------------------------------------------------------

namespace {

SampleBatch concat(const SampleBatch& a, const SampleBatch& b) {
  SampleBatch out;
  out.dim = a.empty() ? b.dim : a.dim;
  out.features = a.features;
  out.features.insert(out.features.end(), b.features.begin(), b.features.end());
  out.labels = a.labels;
  out.labels.insert(out.labels.end(), b.labels.begin(), b.labels.end());
  return out;
}

// Σ_n (|data_n| / Σ|data|) ∇F(w; data_n), skipping empty sets.
ParamVector weighted_gradient(const ParamVector& w, std::span<const SampleBatch> data,
                              const ModelSpec& model, std::int64_t& total) {
  std::vector<std::int64_t> sizes;
  for (const SampleBatch& b : data) sizes.push_back(static_cast<std::int64_t>(b.size()));
  total = 0;
  for (std::int64_t s : sizes) total += s;
  ParamVector out(w.size());
  if (total == 0) return out;
  const AggregationWeights rho = weight_fraction(sizes);
  std::vector<ParamVector> grads(data.size());
  for (std::size_t n = 0; n < data.size(); ++n) {
    if (!data[n].empty()) grads[n] = local_gradient(w, data[n], model);
  }
  return weighted_sum(grads, rho);
}

}  // namespace

Lemma1Check lemma1_check(const ParamVector& w, std::span<const SampleBatch> old_data,
                         std::span<const SampleBatch> new_data, const ModelSpec& model) {
  if (old_data.size() != new_data.size() || old_data.empty()) {
    throw std::invalid_argument("lemma1: old and new data need one entry per device");
  }
  std::vector<SampleBatch> combined;
  combined.reserve(old_data.size());
  for (std::size_t n = 0; n < old_data.size(); ++n) {
    combined.push_back(concat(old_data[n], new_data[n]));
  }
  std::int64_t s_t = 0;
  const ParamVector lhs = weighted_gradient(w, combined, model, s_t);
  if (s_t == 0) throw std::invalid_argument("lemma1: all datasets are empty");

  std::int64_t s_prev = 0;
  std::int64_t d_t = 0;
  const ParamVector old_part = weighted_gradient(w, old_data, model, s_prev);
  const ParamVector new_part = weighted_gradient(w, new_data, model, d_t);
  ParamVector rhs(w.size());
  if (s_prev > 0) {
    rhs = rhs + (static_cast<double>(s_prev) / static_cast<double>(s_t)) * old_part;
  }
  if (d_t > 0) {
    rhs = rhs + (static_cast<double>(d_t) / static_cast<double>(s_t)) * new_part;
  }
  Lemma1Check out;
  out.residual = std::sqrt((lhs - rhs).sq_norm());
  out.lhs_norm = std::sqrt(lhs.sq_norm());
  return out;
}

double lemma1_residual(const ParamVector& w, std::span<const SampleBatch> old_data,
                       std::span<const SampleBatch> new_data, const ModelSpec& model) {
  return lemma1_check(w, old_data, new_data, model).residual;
}

// ---------------------------------------------------------------------------

void AssumptionConstants::validate() const {
  if (!(L >= 0.0)) throw std::invalid_argument("constants: L must be >= 0");
  if (!(sigma_sq >= 0.0)) throw std::invalid_argument("constants: sigma^2 must be >= 0");
  for (double g : G) {
    if (!(g >= 0.0)) throw std::invalid_argument("constants: G_t must be >= 0");
  }
  if (!(alpha_sq >= 1.0)) throw std::invalid_argument("constants: alpha^2 must be >= 1");
  if (!(beta_sq >= 0.0)) throw std::invalid_argument("constants: beta^2 must be >= 0");
}

namespace {

double weighted_device_sq(const ConstantProbe& p) {
  if (p.device_grads.size() != p.rho.size()) {
    throw std::invalid_argument("probe: one weight per device gradient required");
  }
  double sum = 0.0;
  for (std::size_t n = 0; n < p.device_grads.size(); ++n) {
    if (p.rho[n] == 0.0) continue;
    sum += p.rho[n] * p.device_grads[n].sq_norm();
  }
  return sum;
}

}  // namespace

double dissimilarity_envelope(std::span<const ConstantProbe> probes, double alpha_sq) {
  double beta_sq = 0.0;
  for (const ConstantProbe& p : probes) {
    beta_sq = std::max(beta_sq, weighted_device_sq(p) - alpha_sq * p.grad.sq_norm());
  }
  return beta_sq;
}

AssumptionConstants estimate_constants(std::span<const ConstantProbe> probes,
                                       const TrainingTrace* trace, bool iid_tag) {
  if (probes.size() < 2) throw std::invalid_argument("estimate_constants: need at least 2 probes");
  AssumptionConstants c;

  for (const ConstantProbe& p : probes) {
    const double dw = std::sqrt((p.w - p.w_alt).sq_norm());
    if (!(dw > 0.0)) throw std::invalid_argument("estimate_constants: zero displacement probe");
    c.L = std::max(c.L, std::sqrt((p.grad - p.grad_alt).sq_norm()) / dw);
  }

  for (const ConstantProbe& p : probes) {
    for (std::size_t n = 0; n < p.minibatch_grads.size(); ++n) {
      const auto& batches = p.minibatch_grads[n];
      if (batches.empty()) continue;
      double var = 0.0;
      for (const ParamVector& g : batches) var += (g - p.device_grads.at(n)).sq_norm();
      c.sigma_sq = std::max(c.sigma_sq, var / static_cast<double>(batches.size()));
    }
  }

  int rounds = trace != nullptr ? trace->length() : 0;
  for (const ConstantProbe& p : probes) rounds = std::max(rounds, p.round);
  std::vector<double> observed(static_cast<std::size_t>(rounds), -1.0);
  auto observe = [&](int t, double v) {
    if (t < 1 || t > rounds) return;
    double& slot = observed[static_cast<std::size_t>(t - 1)];
    slot = std::max(slot, v);
  };
  for (const ConstantProbe& p : probes) {
    observe(p.round, p.grad.sq_norm());
    observe(p.round, p.grad_alt.sq_norm());
  }
  if (trace != nullptr) {
    for (const RoundRecord& r : trace->rounds) {
      observe(r.round, r.grad_norm_sq);
      observe(r.round, r.grad_norm_sq_current);
      // ||∇F(w_t; S_t)|| is recorded as the next round's starting gradient.
      observe(r.round - 1, r.grad_norm_sq);
    }
  }
  const double fallback = observed.empty() ? 0.0 : *std::max_element(observed.begin(), observed.end());
  c.G.resize(observed.size());
  for (std::size_t i = 0; i < observed.size(); ++i) {
    c.G[i] = 1.1 * std::max(observed[i] < 0.0 ? fallback : observed[i], 0.0);
  }

  if (iid_tag) {
    c.alpha_sq = 1.0;
    c.beta_sq = 0.0;
  } else {
    // The lexicographically least pair takes the smallest admissible alpha^2.
    c.alpha_sq = 1.0;
    c.beta_sq = dissimilarity_envelope(probes, c.alpha_sq);
  }
  return c;
}

// ---------------------------------------------------------------------------

bool fedavg_lr_feasible(double eta, double L, int tau, std::int64_t s_t, std::int64_t s_prev) {
  const double lhs = 2.0 * L * L * eta * eta * tau * (tau - 1.0);
  double cap = 0.2;
  if (s_prev > 0) {
    const double st2 = static_cast<double>(s_t) * static_cast<double>(s_t);
    const double sp2 = static_cast<double>(s_prev) * static_cast<double>(s_prev);
    cap = std::min(cap, st2 / (st2 + 4.0 * sp2));
  }
  return lhs >= 0.0 && lhs <= cap;
}

bool fedsgd_lr_feasible(double eta, double L, std::int64_t s_t, std::int64_t s_prev) {
  if (!(L > 0.0)) throw std::invalid_argument("fedsgd_lr_feasible: L must be positive");
  if (eta < 0.0) return false;
  double cap = 1.0 / L;
  if (s_prev > 0) {
    cap = std::min(cap, static_cast<double>(s_t) /
                            (2.0 * std::sqrt(2.0) * L * static_cast<double>(s_prev)));
  }
  return eta <= cap;
}

// ---------------------------------------------------------------------------

double BoundReport::term(std::string_view name) const {
  for (const auto& [key, value] : terms) {
    if (key == name) return value;
  }
  throw std::out_of_range("bound report has no term '" + std::string(name) + "'");
}

std::string BoundReport::to_text() const {
  std::ostringstream os;
  os.precision(10);
  os << "algorithm: " << to_string(algorithm) << '\n';
  os << "constants: " << (provenance.empty() ? "empirical" : provenance) << '\n';
  os << "feasible: " << (feasible ? "yes" : "no") << '\n';
  if (!reason.empty()) os << "reason: " << reason << '\n';
  for (const auto& [name, value] : terms) os << "  " << name << " = " << value << '\n';
  if (feasible) os << "bound total = " << total << '\n';
  os << "measured average squared gradient norm = " << measured << '\n';
  return os.str();
}

std::string BoundReport::to_csv() const {
  std::ostringstream os;
  os.precision(17);
  os << "term_name,value\n";
  for (const auto& [name, value] : terms) os << name << ',' << value << '\n';
  os << "total," << total << '\n';
  os << "measured," << measured << '\n';
  return os.str();
}

namespace {

struct Brackets {
  double sensing = 0.0;  // (1 + Σ S_t^2/S_{t-1}^2) beta^2 + alpha^2 Σ D_t^2/S_{t-1}^2 G_t
  double local = 0.0;    // 5 + Σ (4 + S_t^2/S_{t-1}^2)
};

Brackets brackets(const TrainingTrace& trace, const AssumptionConstants& c) {
  const int T = trace.length();
  Brackets b;
  if (T == 0) return b;
  if (T >= 2 && c.G.size() < static_cast<std::size_t>(T)) {
    throw std::invalid_argument("bound: need G_t for every round");
  }
  double s_ratio_sum = 0.0;
  double d_ratio_sum = 0.0;
  for (int t = 2; t <= T; ++t) {
    const double s_t = static_cast<double>(trace.total_size(t));
    const double s_prev = static_cast<double>(trace.total_size(t - 1));
    const double d_t = static_cast<double>(trace.rounds[static_cast<std::size_t>(t - 1)].new_size);
    const double sp2 = s_prev * s_prev;
    s_ratio_sum += s_t * s_t / sp2;
    d_ratio_sum += d_t * d_t / sp2 * c.G[static_cast<std::size_t>(t - 1)];
    b.local += 4.0 + s_t * s_t / sp2;
  }
  b.sensing = (1.0 + s_ratio_sum) * c.beta_sq + c.alpha_sq * d_ratio_sum;
  b.local += 5.0;
  return b;
}

double total_error(const TrainingTrace& trace) {
  double sum = 0.0;
  for (const RoundRecord& r : trace.rounds) sum += r.err_sq_norm;
  return sum;
}

void check_bound_inputs(const TrainingTrace& trace, const AssumptionConstants& c, double eta,
                        double f0_minus_fstar) {
  trace.validate();
  c.validate();
  if (trace.rounds.empty()) throw std::invalid_argument("bound: empty trace");
  if (trace.total_size(1) <= 0) throw std::invalid_argument("bound: S_1 must be positive");
  if (!(eta > 0.0)) throw std::invalid_argument("bound: eta must be positive");
  if (!(f0_minus_fstar >= 0.0)) throw std::invalid_argument("bound: F_0 - F* must be >= 0");
}

// Marks the report infeasible and reports whether it still is feasible.
bool check_alpha(BoundReport& report, const AssumptionConstants& c) {
  if (c.alpha_sq > kMaxAlphaSq) {
    report.feasible = false;
    report.reason = "alpha^2 = " + std::to_string(c.alpha_sq) + " leaves no margin below 2";
    report.total = std::numeric_limits<double>::quiet_NaN();
    return false;
  }
  return true;
}

void finish(BoundReport& report) {
  report.total = 0.0;
  for (const auto& [name, value] : report.terms) report.total += value;
}

}  // namespace

BoundReport theorem1_bound(const TrainingTrace& trace, const AssumptionConstants& consts,
                           double eta, int tau, double f0_minus_fstar) {
  check_bound_inputs(trace, consts, eta, f0_minus_fstar);
  if (tau < 1) throw std::invalid_argument("bound: tau must be >= 1");
  BoundReport report;
  report.algorithm = Algorithm::kFedAvg;
  report.measured = measured_average_grad_norm_sq(trace);
  if (!check_alpha(report, consts)) return report;
  for (int t = 1; t <= trace.length(); ++t) {
    if (!fedavg_lr_feasible(eta, consts.L, tau, trace.total_size(t), trace.total_size(t - 1))) {
      report.feasible = false;
      report.reason = "learning-rate condition fails at round " + std::to_string(t);
      report.total = std::numeric_limits<double>::quiet_NaN();
      return report;
    }
  }
  report.feasible = true;

  const double T = trace.length();
  const double a = 2.0 - consts.alpha_sq;
  const double tau_d = tau;
  const Brackets b = brackets(trace, consts);
  double rho_sq = 0.0;
  for (double r : trace.rounds.back().rho) rho_sq += r * r;

  const double L = consts.L;
  const double s2 = consts.sigma_sq;
  report.terms = {
      {"initialization", 4.0 * f0_minus_fstar / (a * T * eta * tau_d)},
      {"communication_errors", 4.0 * total_error(trace) / (a * T * eta * eta * tau_d * tau_d)},
      {"gradient_variance", 4.0 * L * eta * s2 * rho_sq / a},
      {"sensing_noniid", b.sensing / (a * T)},
      {"sensing_local_updates", L * L * eta * eta * s2 * (tau_d - 1.0) / (a * T) * b.local},
  };
  finish(report);
  return report;
}

BoundReport theorem2_bound(const TrainingTrace& trace, const AssumptionConstants& consts,
                           double eta, double f0_minus_fstar) {
  check_bound_inputs(trace, consts, eta, f0_minus_fstar);
  BoundReport report;
  report.algorithm = Algorithm::kFedSgd;
  report.measured = measured_average_grad_norm_sq(trace);
  if (!check_alpha(report, consts)) return report;
  if (!(consts.L > 0.0)) throw std::invalid_argument("bound: L must be positive");
  for (int t = 1; t <= trace.length(); ++t) {
    if (!fedsgd_lr_feasible(eta, consts.L, trace.total_size(t), trace.total_size(t - 1))) {
      report.feasible = false;
      report.reason = "learning-rate condition fails at round " + std::to_string(t);
      report.total = std::numeric_limits<double>::quiet_NaN();
      return report;
    }
  }
  report.feasible = true;

  const double T = trace.length();
  const double a = 2.0 - consts.alpha_sq;
  const Brackets b = brackets(trace, consts);
  report.terms = {
      {"initialization", 4.0 * f0_minus_fstar / (a * T * eta)},
      {"communication_errors", 4.0 / (a * T) * total_error(trace)},
      {"sensing_noniid", b.sensing / (a * T)},
  };
  finish(report);
  return report;
}

ComplexityProxies complexity_proxies(const TrainingTrace& trace,
                                     const AssumptionConstants& consts) {
  ComplexityProxies out;
  out.m1 = total_error(trace);
  if (trace.rounds.empty()) return out;
  const Brackets b = brackets(trace, consts);
  const double T = trace.length();
  out.m2 = b.sensing / T;
  out.m3 = b.local / T;
  return out;
}

}  // namespace fliscc
