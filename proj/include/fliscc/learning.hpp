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

// Loss/gradient engines for the desk-scale model zoo and the two local
// computation paths: FedAVG's tau-step mini-batch SGD and FedSGD's full-batch
// gradient, plus the matching server-side global updates.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "fliscc/core_model.hpp"
#include "fliscc/rng.hpp"

namespace fliscc {

enum class ModelKind { kQuadratic, kLogistic, kMlp };

ModelKind parse_model_kind(std::string_view name);
std::string_view to_string(ModelKind kind);

/// Model architecture. Flat parameter layouts:
///   quadratic: w (q = center.size()); f(w, .) = 0.5 * ||w - c||^2
///   logistic:  W (C x d, row-major), b (C); softmax cross-entropy
///   mlp:       W1 (h x d), b1 (h), W2 (C x h), b2 (C); tanh hidden layer,
///              softmax cross-entropy
struct ModelSpec {
  ModelKind kind = ModelKind::kQuadratic;
  std::size_t features = 0;
  int classes = 0;
  std::size_t hidden = 0;
  ParamVector center;  // quadratic only

  std::size_t param_count() const;
  /// Throws ConfigError when the spec is unusable.
  void validate() const;

  static ModelSpec quadratic(ParamVector center);
  static ModelSpec logistic(std::size_t features, int classes);
  static ModelSpec mlp(std::size_t features, int classes, std::size_t hidden);
};

struct LocalUpdateConfig {
  double eta = 0.01;
  int tau = 1;
  std::size_t batch_size = 1;
};

/// (1/|data|) Σ_j f(w, sample_j). Throws std::invalid_argument on empty data.
double local_loss(const ParamVector& w, const SampleBatch& data, const ModelSpec& model);

/// Gradient of local_loss at w.
ParamVector local_gradient(const ParamVector& w, const SampleBatch& data,
                           const ModelSpec& model);

/// Mean gradient over the given rows of data.
ParamVector batch_gradient(const ParamVector& w, const SampleBatch& data,
                           std::span<const std::size_t> rows, const ModelSpec& model);

/// Loss and gradient in one pass; returns the loss.
double loss_and_gradient(const ParamVector& w, const SampleBatch& data,
                         const ModelSpec& model, ParamVector& grad);

/// Draws batch_size distinct row indices from [0, rows).
std::vector<std::size_t> sample_minibatch(std::size_t rows, std::size_t batch_size,
                                          Philox4x32& rng);

/// w_global - eta * Σ_{i=1..tau} ∇F(w_{i-1}; batch_i), each batch freshly drawn
/// without replacement. batch_size >= |data| uses the whole dataset in order.
/// Throws DivergenceError naming the local step on a non-finite iterate.
ParamVector fedavg_local_update(const ParamVector& w_global, const SampleBatch& data,
                                const LocalUpdateConfig& cfg, const ModelSpec& model,
                                Philox4x32& rng);

/// Error-free FedAVG aggregation: the weighted sum of local models.
ParamVector fedavg_global_update(std::span<const ParamVector> locals,
                                 const AggregationWeights& weights);

/// w_prev - eta * aggregated_grad.
ParamVector fedsgd_global_update(const ParamVector& w_prev,
                                 const ParamVector& aggregated_grad, double eta);

struct Evaluation {
  double loss = 0.0;
  double accuracy = 0.0;  // NaN for the quadratic kind
};

Evaluation evaluate(const ParamVector& w, const SampleBatch& data, const ModelSpec& model);

/// Starting point w_0: zeros for quadratic and logistic, N(0, init_scale^2)
/// weights for the mlp (a zero mlp has a symmetric saddle).
ParamVector initial_model(const ModelSpec& model, std::uint64_t seed, double init_scale);

/// Analytic smoothness constant of the average loss over `data`:
/// 1 for quadratic, 0.5 * mean ||[x, 1]||^2 for logistic. Throws
/// std::invalid_argument for the mlp, which has no closed form.
double smoothness_upper_bound(const ModelSpec& model, const SampleBatch& data);

}  // namespace fliscc
