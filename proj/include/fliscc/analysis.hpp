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

// Convergence analysis over recorded training traces: the exact data-split
// gradient identity, empirical assumption constants, learning-rate
// conditions, and the FedAVG/FedSGD bounds evaluated term by term.

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fliscc/core_model.hpp"
#include "fliscc/learning.hpp"

namespace fliscc {

enum class Algorithm { kFedAvg, kFedSgd };

Algorithm parse_algorithm(std::string_view name);
std::string_view to_string(Algorithm algorithm);

/// Measurements of one communication round t (1-based).
struct RoundRecord {
  int round = 0;
  double loss = 0.0;                  // F(w_t; S_t)
  double grad_norm_sq = 0.0;          // ||∇F(w_{t-1}; S_{t-1})||^2
  double grad_norm_sq_current = 0.0;  // ||∇F(w_{t-1}; S_t)||^2
  double err_sq_norm = 0.0;           // ||eps_t||^2
  std::int64_t total_size = 0;        // S_t
  std::int64_t new_size = 0;          // D_t
  std::vector<std::int64_t> device_sizes;  // S_t^n
  std::vector<double> rho;                 // S_t^n / S_t
};

struct TrainingTrace {
  Algorithm algorithm = Algorithm::kFedAvg;
  double initial_loss = 0.0;        // F(w_0; S_0)
  std::int64_t initial_size = 0;    // S_0
  std::vector<RoundRecord> rounds;  // rounds[t-1] describes round t

  int length() const { return static_cast<int>(rounds.size()); }
  /// S_t for t in [0, T].
  std::int64_t total_size(int t) const;
  /// Throws std::invalid_argument unless rounds are numbered 1..T and sizes
  /// telescope: S_t = S_{t-1} + D_t.
  void validate() const;
};

/// (1/T) Σ_t ||∇F(w_{t-1}; S_{t-1})||^2 over the trace; 0 for an empty trace.
double measured_average_grad_norm_sq(const TrainingTrace& trace);

// Data-split gradient identity --------------------------------------------

struct Lemma1Check {
  double residual = 0.0;  // ||LHS - RHS||
  double lhs_norm = 0.0;  // ||LHS||
};

/// Evaluates Σ rho_n ∇F(w; S_t^n) directly on S_t^n = old ∪ new and compares
/// it with (S_{t-1}/S_t) Σ rho̅_n ∇F(w; S_{t-1}^n) + (D_t/S_t) Σ rhõ_n ∇F(w; D_t^n).
/// When D_t = 0 or S_{t-1} = 0 the empty side is dropped. Throws
/// std::invalid_argument when every dataset is empty or device counts differ.
Lemma1Check lemma1_check(const ParamVector& w, std::span<const SampleBatch> old_data,
                         std::span<const SampleBatch> new_data, const ModelSpec& model);

double lemma1_residual(const ParamVector& w, std::span<const SampleBatch> old_data,
                       std::span<const SampleBatch> new_data, const ModelSpec& model);

// Assumption constants ------------------------------------------------------

struct AssumptionConstants {
  double L = 0.0;
  double sigma_sq = 0.0;
  std::vector<double> G;  // G[t-1] = G_t
  double alpha_sq = 1.0;
  double beta_sq = 0.0;

  /// Throws std::invalid_argument when an invariant is broken.
  void validate() const;
};

/// Gradients gathered at one point w_{t-1} of a run, on the round-t data.
struct ConstantProbe {
  int round = 0;
  ParamVector w;
  ParamVector w_alt;      // nearby point for the smoothness secant
  ParamVector grad;       // ∇F(w; S_t)
  ParamVector grad_alt;   // ∇F(w_alt; S_t)
  std::vector<ParamVector> device_grads;                  // ∇F(w; S_t^n)
  std::vector<std::vector<ParamVector>> minibatch_grads;  // per device
  std::vector<double> rho;
};

/// Smallest beta^2 with Σ rho||g_n||^2 <= alpha^2 ||g||^2 + beta^2 on every
/// probe, for a given alpha^2.
double dissimilarity_envelope(std::span<const ConstantProbe> probes, double alpha_sq);

/// Empirical envelopes of the assumption constants:
///   L       max secant ||g - g_alt|| / ||w - w_alt||
///   sigma^2 max over probes and devices of the mean squared mini-batch deviation
///   G_t     1.1 * max observed ||∇F||^2 attributed to round t
///   alpha^2 smallest admissible value in [1, 2), beta^2 its envelope
/// With iid_tag the dissimilarity pair is fixed to (1, 0). The trace, when
/// given, contributes its per-round gradient norms to G_t and fixes its length.
/// Throws std::invalid_argument for fewer than 2 probes or a zero displacement.
AssumptionConstants estimate_constants(std::span<const ConstantProbe> probes,
                                       const TrainingTrace* trace, bool iid_tag);

// Learning-rate conditions --------------------------------------------------

/// 2 L^2 eta^2 tau (tau - 1) <= min(1/5, S_t^2 / (S_t^2 + 4 S_{t-1}^2)).
bool fedavg_lr_feasible(double eta, double L, int tau, std::int64_t s_t,
                        std::int64_t s_prev);

/// eta <= min(1/L, S_t / (2 sqrt(2) L S_{t-1})); the second bound is absent
/// when S_{t-1} = 0.
bool fedsgd_lr_feasible(double eta, double L, std::int64_t s_t, std::int64_t s_prev);

// Bounds --------------------------------------------------------------------

inline constexpr double kMaxAlphaSq = 2.0 - 1e-6;

struct BoundReport {
  Algorithm algorithm = Algorithm::kFedAvg;
  bool feasible = false;
  std::string reason;  // why the report is infeasible
  double total = 0.0;  // NaN when infeasible
  std::vector<std::pair<std::string, double>> terms;
  double measured = 0.0;  // (1/T) Σ ||∇F(w_{t-1}; S_{t-1})||^2
  std::string provenance;

  double term(std::string_view name) const;
  std::string to_text() const;
  /// "term_name,value" header, one row per term, then total and measured.
  std::string to_csv() const;
};

/// The five-term FedAVG bound. Rho is taken from the final round.
BoundReport theorem1_bound(const TrainingTrace& trace, const AssumptionConstants& consts,
                           double eta, int tau, double f0_minus_fstar);

/// The three-term FedSGD bound.
BoundReport theorem2_bound(const TrainingTrace& trace, const AssumptionConstants& consts,
                           double eta, double f0_minus_fstar);

struct ComplexityProxies {
  double m1 = 0.0;  // Σ_t ||eps_t||^2
  double m2 = 0.0;  // sensing / dissimilarity bracket over T
  double m3 = 0.0;  // sensing / local-update bracket over T
};

ComplexityProxies complexity_proxies(const TrainingTrace& trace,
                                     const AssumptionConstants& consts);

}  // namespace fliscc
