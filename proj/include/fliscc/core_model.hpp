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

// Shared value types: parameter vectors, sensing schedules, aggregation
// weights, and the two arithmetic primitives every other module builds on.

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string_view>
#include <vector>

namespace fliscc {

/// Flat real vector of model weights or gradients, length q.
class ParamVector {
 public:
  ParamVector() = default;
  explicit ParamVector(std::size_t q, double fill = 0.0) : values_(q, fill) {}
  explicit ParamVector(std::vector<double> values) : values_(std::move(values)) {}
  ParamVector(std::initializer_list<double> values) : values_(values) {}

  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  double operator[](std::size_t i) const { return values_[i]; }
  double& operator[](std::size_t i) { return values_[i]; }

  std::span<const double> span() const { return values_; }
  std::span<double> span() { return values_; }
  const std::vector<double>& values() const { return values_; }

  auto begin() const { return values_.begin(); }
  auto end() const { return values_.end(); }

  bool all_finite() const;
  /// Throws DivergenceError naming `context` if any entry is NaN/Inf.
  const ParamVector& ensure_finite(std::string_view context) const;

  double sq_norm() const;

  friend bool operator==(const ParamVector&, const ParamVector&) = default;

 private:
  std::vector<double> values_;
};

ParamVector operator-(const ParamVector& a, const ParamVector& b);
ParamVector operator+(const ParamVector& a, const ParamVector& b);
ParamVector operator*(double alpha, const ParamVector& a);
double dot(const ParamVector& a, const ParamVector& b);

/// Which dataset sizes the weights were formed from.
enum class WeightKind {
  kCurrent,     // S_t^n / S_t
  kCumulative,  // S_{t-1}^n / S_{t-1}
  kFresh,       // D_t^n / D_t
};

struct AggregationWeights {
  std::vector<double> rho;
  WeightKind kind = WeightKind::kCurrent;

  std::size_t size() const { return rho.size(); }
  double operator[](std::size_t n) const { return rho[n]; }
  /// Σ_n rho[n]^2
  double sum_of_squares() const;
};

/// rho[n] = sizes[n] / Σ sizes. Throws std::domain_error when every size is 0.
AggregationWeights weight_fraction(std::span<const std::int64_t> sizes,
                                   WeightKind kind = WeightKind::kCurrent);

/// result[j] = Σ_n weights[n] * vectors[n][j]. Vectors with zero weight are
/// skipped and may be empty. Throws std::invalid_argument on length mismatch.
ParamVector weighted_sum(std::span<const ParamVector> vectors,
                         const AggregationWeights& weights);

/// New-sample counts D_t^n for N devices over T rounds and the cumulative
/// sizes S_t^n they induce. Rounds are 1-based in the accessors.
class SensingSchedule {
 public:
  SensingSchedule() = default;
  /// new_counts[n][t-1] = D_t^n. Throws std::invalid_argument on ragged rows
  /// or negative entries.
  SensingSchedule(std::vector<std::vector<std::int64_t>> new_counts,
                  std::vector<std::int64_t> initial_sizes);

  int devices() const { return static_cast<int>(new_counts_.size()); }
  int rounds() const { return rounds_; }

  std::int64_t initial_size(int n) const { return initial_[n]; }
  /// D_t^n for t in [1, T].
  std::int64_t new_count(int n, int t) const { return new_counts_[n][t - 1]; }
  /// S_t^n for t in [0, T]; t = 0 gives the initial size.
  std::int64_t cumulative(int n, int t) const {
    return t == 0 ? initial_[n] : cumulative_[n][t - 1];
  }
  /// S_t = Σ_n S_t^n
  std::int64_t total_cumulative(int t) const;
  /// D_t = Σ_n D_t^n
  std::int64_t total_new(int t) const;
  /// S_t^n for every device at round t.
  std::vector<std::int64_t> cumulative_sizes(int t) const;
  std::vector<std::int64_t> new_sizes(int t) const;
  /// Σ_t D_t^n
  std::int64_t total_sensed(int n) const;

  const std::vector<std::vector<std::int64_t>>& new_counts() const {
    return new_counts_;
  }

 private:
  std::vector<std::vector<std::int64_t>> new_counts_;
  std::vector<std::vector<std::int64_t>> cumulative_;
  std::vector<std::int64_t> initial_;
  int rounds_ = 0;
};

/// Labeled samples stored row-major: features is size() x dim.
struct SampleBatch {
  std::size_t dim = 0;
  std::vector<double> features;
  std::vector<int> labels;

  std::size_t size() const { return labels.size(); }
  bool empty() const { return labels.empty(); }
  std::span<const double> row(std::size_t i) const {
    return {features.data() + i * dim, dim};
  }
  void append(const SampleBatch& source, std::size_t i);
  SampleBatch subset(std::span<const std::size_t> rows) const;
  /// Throws std::invalid_argument when features/labels disagree.
  void validate() const;
};

/// Per-device hardware constants of the computation and transmission model.
struct DeviceHardware {
  double cycles_per_sample = 1e6;  // CPU cycles per sample processed
  double energy_coeff = 1e-28;     // effective switched capacitance
  double cpu_freq = 1e9;           // cycles/s
  double max_power = 10.0;         // W
};

struct DeviceState {
  int id = 0;
  SampleBatch data;  // cumulative dataset, append-only
  ParamVector local_model;
  DeviceHardware hardware;
};

}  // namespace fliscc
