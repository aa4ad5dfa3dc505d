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

#include "fliscc/core_model.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "fliscc/errors.hpp"
#include "fliscc/kernels.hpp"

namespace fliscc {

bool ParamVector::all_finite() const {
  for (double v : values_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

const ParamVector& ParamVector::ensure_finite(std::string_view context) const {
  if (!all_finite()) {
    throw DivergenceError("non-finite parameter value in " + std::string(context));
  }
  return *this;
}

double ParamVector::sq_norm() const { return kernels::sq_norm(values_); }

ParamVector operator-(const ParamVector& a, const ParamVector& b) {
  if (a.size() != b.size()) throw std::invalid_argument("ParamVector length mismatch");
  ParamVector out(a.size());
  kernels::sub(a.span(), b.span(), out.span());
  return out;
}

ParamVector operator+(const ParamVector& a, const ParamVector& b) {
  if (a.size() != b.size()) throw std::invalid_argument("ParamVector length mismatch");
  ParamVector out = a;
  kernels::axpy(1.0, b.span(), out.span());
  return out;
}

ParamVector operator*(double alpha, const ParamVector& a) {
  ParamVector out = a;
  kernels::scale(alpha, out.span());
  return out;
}

double dot(const ParamVector& a, const ParamVector& b) {
  if (a.size() != b.size()) throw std::invalid_argument("ParamVector length mismatch");
  return kernels::dot(a.span(), b.span());
}

double AggregationWeights::sum_of_squares() const {
  double acc = 0.0;
  for (double r : rho) acc += r * r;
  return acc;
}

AggregationWeights weight_fraction(std::span<const std::int64_t> sizes,
                                   WeightKind kind) {
  std::int64_t total = 0;
  for (std::int64_t s : sizes) {
    if (s < 0) throw std::invalid_argument("negative dataset size");
    total += s;
  }
  if (total <= 0) {
    throw std::domain_error("weight_fraction: empty population (all sizes are zero)");
  }
  AggregationWeights w;
  w.kind = kind;
  w.rho.reserve(sizes.size());
  const auto denom = static_cast<double>(total);
  for (std::int64_t s : sizes) w.rho.push_back(static_cast<double>(s) / denom);
  return w;
}

ParamVector weighted_sum(std::span<const ParamVector> vectors,
                         const AggregationWeights& weights) {
  if (vectors.size() != weights.size()) {
    throw std::invalid_argument("weighted_sum: " + std::to_string(vectors.size()) +
                                " vectors but " + std::to_string(weights.size()) +
                                " weights");
  }
  std::size_t q = 0;
  for (std::size_t n = 0; n < vectors.size(); ++n) {
    if (weights[n] == 0.0) continue;
    if (q == 0) {
      q = vectors[n].size();
    } else if (vectors[n].size() != q) {
      throw std::invalid_argument("weighted_sum: vector length mismatch");
    }
  }
  if (q == 0) throw std::invalid_argument("weighted_sum: no weighted vectors");
  ParamVector out(q);
  for (std::size_t n = 0; n < vectors.size(); ++n) {
    if (weights[n] == 0.0) continue;
    kernels::axpy(weights[n], vectors[n].span(), out.span());
  }
  return out;
}

SensingSchedule::SensingSchedule(std::vector<std::vector<std::int64_t>> new_counts,
                                 std::vector<std::int64_t> initial_sizes)
    : new_counts_(std::move(new_counts)), initial_(std::move(initial_sizes)) {
  if (initial_.empty()) initial_.assign(new_counts_.size(), 0);
  if (initial_.size() != new_counts_.size()) {
    throw std::invalid_argument("schedule: initial_sizes has wrong length");
  }
  rounds_ = new_counts_.empty() ? 0 : static_cast<int>(new_counts_.front().size());
  cumulative_.resize(new_counts_.size());
  for (std::size_t n = 0; n < new_counts_.size(); ++n) {
    if (static_cast<int>(new_counts_[n].size()) != rounds_) {
      throw std::invalid_argument("schedule: row " + std::to_string(n) +
                                  " has wrong number of rounds");
    }
    if (initial_[n] < 0) throw std::invalid_argument("schedule: negative initial size");
    std::int64_t running = initial_[n];
    cumulative_[n].reserve(rounds_);
    for (std::int64_t d : new_counts_[n]) {
      if (d < 0) throw std::invalid_argument("schedule: negative new-sample count");
      running += d;
      cumulative_[n].push_back(running);
    }
  }
}

std::int64_t SensingSchedule::total_cumulative(int t) const {
  std::int64_t total = 0;
  for (int n = 0; n < devices(); ++n) total += cumulative(n, t);
  return total;
}

std::int64_t SensingSchedule::total_new(int t) const {
  std::int64_t total = 0;
  for (int n = 0; n < devices(); ++n) total += new_count(n, t);
  return total;
}

std::vector<std::int64_t> SensingSchedule::cumulative_sizes(int t) const {
  std::vector<std::int64_t> out(devices());
  for (int n = 0; n < devices(); ++n) out[n] = cumulative(n, t);
  return out;
}

std::vector<std::int64_t> SensingSchedule::new_sizes(int t) const {
  std::vector<std::int64_t> out(devices());
  for (int n = 0; n < devices(); ++n) out[n] = new_count(n, t);
  return out;
}

std::int64_t SensingSchedule::total_sensed(int n) const {
  return std::accumulate(new_counts_[n].begin(), new_counts_[n].end(),
                         std::int64_t{0});
}

void SampleBatch::append(const SampleBatch& source, std::size_t i) {
  if (dim == 0 && empty()) dim = source.dim;
  if (source.dim != dim) throw std::invalid_argument("SampleBatch feature dim mismatch");
  const auto r = source.row(i);
  features.insert(features.end(), r.begin(), r.end());
  labels.push_back(source.labels[i]);
}

SampleBatch SampleBatch::subset(std::span<const std::size_t> rows) const {
  SampleBatch out;
  out.dim = dim;
  out.features.reserve(rows.size() * dim);
  out.labels.reserve(rows.size());
  for (std::size_t i : rows) out.append(*this, i);
  return out;
}

void SampleBatch::validate() const {
  if (features.size() != labels.size() * dim) {
    throw std::invalid_argument("SampleBatch: " + std::to_string(features.size()) +
                                " feature values for " + std::to_string(labels.size()) +
                                " rows of dim " + std::to_string(dim));
  }
}

}  // namespace fliscc
