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

// Over-the-air analog aggregation: Rayleigh fading draws, power control,
// receiver noise, denoising, and the exact communication error vector.
//
// Received-signal model used here (after phase compensation):
//
//   u_t = Σ_n rho_n (h_n sqrt(p_n) u_n + z) / sqrt(lambda)
//
// with a single receiver noise draw z ~ N(0, sigma_z I), sigma_z being the
// per-element variance. Because Σ rho_n = 1 this equals
// Σ rho_n h_n sqrt(p_n) u_n / sqrt(lambda) + z / sqrt(lambda), so
//
//   eps_t = Σ_n rho_n (h_n sqrt(p_n) / sqrt(lambda) - 1) u_n + z / sqrt(lambda).
//
// A variant that sums z once per device (N z) is not used: it contradicts the
// denoised form above.

#include <span>
#include <string_view>
#include <vector>

#include "fliscc/core_model.hpp"
#include "fliscc/rng.hpp"

namespace fliscc {

/// Alignment factors within this distance of 1 are treated as exactly 1.
inline constexpr double kAlignmentSnap = 1e-14;

struct ChannelRealization {
  std::vector<double> h;  // fading magnitudes |g|, g ~ CN(0, 1)
  std::vector<double> p;  // transmit power scaling, W
  double lambda = 1.0;    // denoising factor
  double noise_variance = 0.0;

  /// h_n sqrt(p_n) / sqrt(lambda), snapped to 1 within kAlignmentSnap.
  double alignment(std::size_t n) const;
  /// Throws std::invalid_argument when shapes disagree, lambda <= 0 or the
  /// noise variance is negative.
  void validate() const;
};

/// N i.i.d. Rayleigh magnitudes with E[h^2] = 1.
std::vector<double> draw_channel(int devices, Philox4x32& rng);

enum class PowerPolicy { kFullInversion, kFixedLambda };

PowerPolicy parse_power_policy(std::string_view name);
std::string_view to_string(PowerPolicy policy);

struct PowerAllocation {
  std::vector<double> p;
  double lambda = 1.0;
};

/// full_inversion: lambda = min_n h_n^2 P_max^n, p_n = lambda / h_n^2, so every
/// device is aligned exactly. fixed_lambda: p_n = min(lambda / h_n^2, P_max^n).
/// Throws std::invalid_argument for a non-positive h_n or lambda.
PowerAllocation power_control(std::span<const double> h,
                              std::span<const double> max_power, PowerPolicy policy,
                              double fixed_lambda = 1.0);

struct AggregationResult {
  ParamVector received;  // u_t
  ParamVector ideal;     // Σ rho_n u_n
  ParamVector error;     // u_t - ideal
  ParamVector noise;     // the receiver noise draw z
  double error_sq_norm = 0.0;
};

/// Aggregates with a caller-supplied noise vector z.
AggregationResult ota_aggregate_with_noise(std::span<const ParamVector> u,
                                           const AggregationWeights& weights,
                                           const ChannelRealization& channel,
                                           const ParamVector& noise);

/// Draws z ~ N(0, noise_variance) per element from rng and aggregates.
AggregationResult ota_aggregate(std::span<const ParamVector> u,
                                const AggregationWeights& weights,
                                const ChannelRealization& channel, Philox4x32& rng);

/// Closed form of eps_t split into its two parts.
struct ErrorDecomposition {
  ParamVector misalignment;  // Σ rho_n (alignment_n - 1) u_n
  ParamVector noise;         // (Σ rho_n) z / sqrt(lambda)
};

ErrorDecomposition decompose_error(std::span<const ParamVector> u,
                                   const AggregationWeights& weights,
                                   const ChannelRealization& channel,
                                   const ParamVector& noise);

}  // namespace fliscc
