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

#include "fliscc/learning.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iostream>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>

#include "fliscc/errors.hpp"
#include "fliscc/kernels.hpp"

namespace fliscc {

ModelKind parse_model_kind(std::string_view name) {
  if (name == "quadratic") return ModelKind::kQuadratic;
  if (name == "logistic") return ModelKind::kLogistic;
  if (name == "mlp") return ModelKind::kMlp;
  throw ConfigError("unknown model kind '" + std::string(name) + "'");
}

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::kQuadratic:
      return "quadratic";
    case ModelKind::kLogistic:
      return "logistic";
    case ModelKind::kMlp:
      return "mlp";
  }
  return "unknown";
}

std::size_t ModelSpec::param_count() const {
  const auto c = static_cast<std::size_t>(classes);
  switch (kind) {
    case ModelKind::kQuadratic:
      return center.size();
    case ModelKind::kLogistic:
      return c * features + c;
    case ModelKind::kMlp:
      return hidden * features + hidden + c * hidden + c;
  }
  return 0;
}

void ModelSpec::validate() const {
  switch (kind) {
    case ModelKind::kQuadratic:
      if (center.empty()) throw ConfigError("quadratic model needs a non-empty center");
      if (!center.all_finite()) throw ConfigError("quadratic center has non-finite entries");
      break;
    case ModelKind::kMlp:
      if (hidden == 0) throw ConfigError("mlp needs hidden width >= 1");
      [[fallthrough]];
    case ModelKind::kLogistic:
      if (features == 0) throw ConfigError("model needs feature dim >= 1");
      if (classes < 2) throw ConfigError("model needs at least 2 classes");
      break;
  }
}

ModelSpec ModelSpec::quadratic(ParamVector center) {
  ModelSpec spec;
  spec.kind = ModelKind::kQuadratic;
  spec.center = std::move(center);
  return spec;
}

ModelSpec ModelSpec::logistic(std::size_t features, int classes) {
  ModelSpec spec;
  spec.kind = ModelKind::kLogistic;
  spec.features = features;
  spec.classes = classes;
  return spec;
}

ModelSpec ModelSpec::mlp(std::size_t features, int classes, std::size_t hidden) {
  ModelSpec spec;
  spec.kind = ModelKind::kMlp;
  spec.features = features;
  spec.classes = classes;
  spec.hidden = hidden;
  return spec;
}

namespace {

// Softmax cross-entropy on logits z for label y. Overwrites z with
// dLoss/dz = softmax(z) - onehot(y) and returns the loss.
double softmax_xent(std::span<double> z, int y) {
  const double zmax = *std::max_element(z.begin(), z.end());
  double denom = 0.0;
  for (double v : z) denom += std::exp(v - zmax);
  const double log_denom = std::log(denom) + zmax;
  const double loss = log_denom - z[y];
  for (double& v : z) v = std::exp(v - log_denom);
  z[y] -= 1.0;
  return loss;
}

int argmax(std::span<const double> z) {
  return static_cast<int>(std::max_element(z.begin(), z.end()) - z.begin());
}

void check_label(int y, int classes) {
  if (y < 0 || y >= classes) {
    throw std::invalid_argument("label " + std::to_string(y) + " outside [0, " +
                                std::to_string(classes) + ")");
  }
}

// Per-sample evaluation shared by loss, gradient, and accuracy. Accumulates
// the sample's gradient into grad when it is non-empty. Returns the loss and
// sets *correct when the prediction matches the label.
class SampleEvaluator {
 public:
  SampleEvaluator(const ParamVector& w, const ModelSpec& model)
      : w_(w), model_(model) {
    if (w.size() != model.param_count()) {
      throw std::invalid_argument("parameter vector has length " +
                                  std::to_string(w.size()) + ", model expects " +
                                  std::to_string(model.param_count()));
    }
    logits_.resize(static_cast<std::size_t>(std::max(model.classes, 0)));
    hidden_.resize(model.hidden);
    dhidden_.resize(model.hidden);
  }

  double run(std::span<const double> x, int y, std::span<double> grad, bool* correct) {
    switch (model_.kind) {
      case ModelKind::kQuadratic:
        return quadratic(grad);
      case ModelKind::kLogistic:
        return logistic(x, y, grad, correct);
      case ModelKind::kMlp:
        return mlp(x, y, grad, correct);
    }
    return 0.0;
  }

 private:
  double quadratic(std::span<double> grad) {
    double loss = 0.0;
    const auto& c = model_.center;
    for (std::size_t j = 0; j < c.size(); ++j) {
      const double diff = w_[j] - c[j];
      loss += diff * diff;
      if (!grad.empty()) grad[j] += diff;
    }
    return 0.5 * loss;
  }

  double logistic(std::span<const double> x, int y, std::span<double> grad,
                  bool* correct) {
    const std::size_t d = model_.features;
    const auto c = static_cast<std::size_t>(model_.classes);
    check_label(y, model_.classes);
    const auto params = w_.span();
    const std::size_t bias = c * d;
    for (std::size_t k = 0; k < c; ++k) {
      logits_[k] = params[bias + k] + kernels::dot(params.subspan(k * d, d), x);
    }
    if (correct != nullptr) *correct = argmax(logits_) == y;
    const double loss = softmax_xent(logits_, y);
    if (!grad.empty()) {
      for (std::size_t k = 0; k < c; ++k) {
        kernels::axpy(logits_[k], x, grad.subspan(k * d, d));
        grad[bias + k] += logits_[k];
      }
    }
    return loss;
  }

  double mlp(std::span<const double> x, int y, std::span<double> grad, bool* correct) {
    const std::size_t d = model_.features;
    const std::size_t h = model_.hidden;
    const auto c = static_cast<std::size_t>(model_.classes);
    check_label(y, model_.classes);
    const auto params = w_.span();
    const std::size_t off_b1 = h * d;
    const std::size_t off_w2 = off_b1 + h;
    const std::size_t off_b2 = off_w2 + c * h;
    for (std::size_t j = 0; j < h; ++j) {
      hidden_[j] = std::tanh(params[off_b1 + j] + kernels::dot(params.subspan(j * d, d), x));
    }
    for (std::size_t k = 0; k < c; ++k) {
      logits_[k] = params[off_b2 + k] +
                   kernels::dot(params.subspan(off_w2 + k * h, h), hidden_);
    }
    if (correct != nullptr) *correct = argmax(logits_) == y;
    const double loss = softmax_xent(logits_, y);
    if (!grad.empty()) {
      std::fill(dhidden_.begin(), dhidden_.end(), 0.0);
      for (std::size_t k = 0; k < c; ++k) {
        kernels::axpy(logits_[k], hidden_, grad.subspan(off_w2 + k * h, h));
        grad[off_b2 + k] += logits_[k];
        kernels::axpy(logits_[k], params.subspan(off_w2 + k * h, h), dhidden_);
      }
      for (std::size_t j = 0; j < h; ++j) {
        const double da = dhidden_[j] * (1.0 - hidden_[j] * hidden_[j]);
        kernels::axpy(da, x, grad.subspan(j * d, d));
        grad[off_b1 + j] += da;
      }
    }
    return loss;
  }

  const ParamVector& w_;
  const ModelSpec& model_;
  std::vector<double> logits_;
  std::vector<double> hidden_;
  std::vector<double> dhidden_;
};

void require_nonempty(std::size_t rows, std::string_view what) {
  if (rows == 0) throw std::invalid_argument(std::string(what) + ": empty dataset");
}

double mean_loss_and_grad(const ParamVector& w, const SampleBatch& data,
                          std::span<const std::size_t> rows, bool all_rows,
                          const ModelSpec& model, ParamVector* grad) {
  SampleEvaluator eval(w, model);
  const std::size_t count = all_rows ? data.size() : rows.size();
  std::span<double> g;
  if (grad != nullptr) {
    *grad = ParamVector(model.param_count());
    g = grad->span();
  }
  double total = 0.0;
  for (std::size_t k = 0; k < count; ++k) {
    const std::size_t i = all_rows ? k : rows[k];
    total += eval.run(data.row(i), data.labels[i], g, nullptr);
  }
  const double inv = 1.0 / static_cast<double>(count);
  if (grad != nullptr) {
    kernels::scale(inv, g);
    grad->ensure_finite("gradient");
  }
  const double loss = total * inv;
  if (!std::isfinite(loss)) throw DivergenceError("non-finite loss");
  return loss;
}

std::atomic<bool> g_clamp_warned{false};

}  // namespace

double local_loss(const ParamVector& w, const SampleBatch& data, const ModelSpec& model) {
  require_nonempty(data.size(), "local_loss");
  return mean_loss_and_grad(w, data, {}, true, model, nullptr);
}

ParamVector local_gradient(const ParamVector& w, const SampleBatch& data,
                           const ModelSpec& model) {
  require_nonempty(data.size(), "local_gradient");
  ParamVector grad;
  mean_loss_and_grad(w, data, {}, true, model, &grad);
  return grad;
}

double loss_and_gradient(const ParamVector& w, const SampleBatch& data,
                         const ModelSpec& model, ParamVector& grad) {
  require_nonempty(data.size(), "loss_and_gradient");
  return mean_loss_and_grad(w, data, {}, true, model, &grad);
}

ParamVector batch_gradient(const ParamVector& w, const SampleBatch& data,
                           std::span<const std::size_t> rows, const ModelSpec& model) {
  require_nonempty(rows.size(), "batch_gradient");
  ParamVector grad;
  mean_loss_and_grad(w, data, rows, false, model, &grad);
  return grad;
}

std::vector<std::size_t> sample_minibatch(std::size_t rows, std::size_t batch_size,
                                          Philox4x32& rng) {
  if (batch_size > rows) throw std::invalid_argument("mini-batch larger than dataset");
  std::vector<std::size_t> all(rows);
  std::iota(all.begin(), all.end(), std::size_t{0});
  std::vector<std::size_t> out(batch_size);
  std::sample(all.begin(), all.end(), out.begin(), batch_size, rng);
  return out;
}

ParamVector fedavg_local_update(const ParamVector& w_global, const SampleBatch& data,
                                const LocalUpdateConfig& cfg, const ModelSpec& model,
                                Philox4x32& rng) {
  require_nonempty(data.size(), "fedavg_local_update");
  if (cfg.tau < 1) throw std::invalid_argument("tau must be >= 1");
  if (cfg.batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  const bool full_batch = cfg.batch_size >= data.size();
  if (cfg.batch_size > data.size() && !g_clamp_warned.exchange(true)) {
    std::cerr << "warning: batch_size " << cfg.batch_size
              << " exceeds a local dataset of " << data.size()
              << " samples; clamping to the dataset size\n";
  }

  ParamVector w = w_global;
  ParamVector grad;
  std::vector<std::size_t> all;
  std::vector<std::size_t> batch(full_batch ? 0 : cfg.batch_size);
  if (!full_batch) {
    all.resize(data.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
  }
  for (int step = 1; step <= cfg.tau; ++step) {
    try {
      if (full_batch) {
        mean_loss_and_grad(w, data, {}, true, model, &grad);
      } else {
        std::sample(all.begin(), all.end(), batch.begin(), cfg.batch_size, rng);
        mean_loss_and_grad(w, data, batch, false, model, &grad);
      }
    } catch (const DivergenceError& e) {
      throw DivergenceError("local step " + std::to_string(step) + ": " + e.what());
    }
    kernels::axpy(-cfg.eta, grad.span(), w.span());
    w.ensure_finite("local step " + std::to_string(step));
  }
  return w;
}

ParamVector fedavg_global_update(std::span<const ParamVector> locals,
                                 const AggregationWeights& weights) {
  return weighted_sum(locals, weights).ensure_finite("FedAVG aggregation");
}

ParamVector fedsgd_global_update(const ParamVector& w_prev,
                                 const ParamVector& aggregated_grad, double eta) {
  if (w_prev.size() != aggregated_grad.size()) {
    throw std::invalid_argument("fedsgd_global_update: length mismatch");
  }
  ParamVector w = w_prev;
  kernels::axpy(-eta, aggregated_grad.span(), w.span());
  w.ensure_finite("FedSGD global update");
  return w;
}

Evaluation evaluate(const ParamVector& w, const SampleBatch& data, const ModelSpec& model) {
  require_nonempty(data.size(), "evaluate");
  SampleEvaluator eval(w, model);
  double total = 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    bool correct = false;
    total += eval.run(data.row(i), data.labels[i], {}, &correct);
    hits += correct ? 1 : 0;
  }
  Evaluation out;
  out.loss = total / static_cast<double>(data.size());
  out.accuracy = model.kind == ModelKind::kQuadratic
                     ? std::numeric_limits<double>::quiet_NaN()
                     : static_cast<double>(hits) / static_cast<double>(data.size());
  return out;
}

ParamVector initial_model(const ModelSpec& model, std::uint64_t seed, double init_scale) {
  ParamVector w(model.param_count());
  if (model.kind != ModelKind::kMlp) return w;
  auto rng = make_stream(seed, StreamPurpose::kInit, 0, 0);
  std::normal_distribution<double> normal(0.0, init_scale);
  // Weights only; biases start at zero.
  const std::size_t d = model.features;
  const std::size_t h = model.hidden;
  const auto c = static_cast<std::size_t>(model.classes);
  for (std::size_t i = 0; i < h * d; ++i) w[i] = normal(rng);
  const std::size_t off_w2 = h * d + h;
  for (std::size_t i = 0; i < c * h; ++i) w[off_w2 + i] = normal(rng);
  return w;
}

double smoothness_upper_bound(const ModelSpec& model, const SampleBatch& data) {
  switch (model.kind) {
    case ModelKind::kQuadratic:
      return 1.0;
    case ModelKind::kLogistic: {
      require_nonempty(data.size(), "smoothness_upper_bound");
      double total = 0.0;
      for (std::size_t i = 0; i < data.size(); ++i) {
        total += kernels::sq_norm(data.row(i)) + 1.0;
      }
      return 0.5 * total / static_cast<double>(data.size());
    }
    case ModelKind::kMlp:
      break;
  }
  throw std::invalid_argument("no closed-form smoothness constant for the mlp");
}

}  // namespace fliscc
