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

#include "fliscc/ota_channel.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

#include "fliscc/errors.hpp"
#include "fliscc/kernels.hpp"

namespace fliscc {

double ChannelRealization::alignment(std::size_t n) const {
  const double a = h[n] * std::sqrt(p[n]) / std::sqrt(lambda);
  // Channel inversion aligns exactly in real arithmetic; drop the rounding
  // residue of p = lambda / h^2 so the aligned case stays error-free.
  return std::abs(a - 1.0) <= kAlignmentSnap ? 1.0 : a;
}

void ChannelRealization::validate() const {
  if (h.size() != p.size()) throw std::invalid_argument("channel: h and p lengths differ");
  if (!(lambda > 0.0)) throw std::invalid_argument("channel: lambda must be positive");
  if (noise_variance < 0.0) throw std::invalid_argument("channel: negative noise variance");
  for (double v : p) {
    if (v < 0.0) throw std::invalid_argument("channel: negative transmit power");
  }
}

std::vector<double> draw_channel(int devices, Philox4x32& rng) {
  if (devices < 1) throw std::invalid_argument("draw_channel: need at least one device");
  // Real and imaginary parts each carry half the unit variance.
  std::normal_distribution<double> component(0.0, std::sqrt(0.5));
  std::vector<double> h(devices);
  for (double& v : h) {
    const double re = component(rng);
    const double im = component(rng);
    v = std::hypot(re, im);
  }
  return h;
}

PowerPolicy parse_power_policy(std::string_view name) {
  if (name == "full_inversion") return PowerPolicy::kFullInversion;
  if (name == "fixed_lambda") return PowerPolicy::kFixedLambda;
  throw ConfigError("unknown power policy '" + std::string(name) + "'");
}

std::string_view to_string(PowerPolicy policy) {
  return policy == PowerPolicy::kFullInversion ? "full_inversion" : "fixed_lambda";
}

PowerAllocation power_control(std::span<const double> h,
                              std::span<const double> max_power, PowerPolicy policy,
                              double fixed_lambda) {
  if (h.size() != max_power.size() || h.empty()) {
    throw std::invalid_argument("power_control: need one P_max per fading coefficient");
  }
  for (double v : h) {
    if (!(v > 0.0)) throw std::invalid_argument("power_control: zero fading magnitude");
  }
  PowerAllocation out;
  out.p.resize(h.size());
  if (policy == PowerPolicy::kFullInversion) {
    double lambda = h[0] * h[0] * max_power[0];
    for (std::size_t n = 1; n < h.size(); ++n) {
      lambda = std::min(lambda, h[n] * h[n] * max_power[n]);
    }
    out.lambda = lambda;
    for (std::size_t n = 0; n < h.size(); ++n) {
      out.p[n] = std::min(lambda / (h[n] * h[n]), max_power[n]);
    }
  } else {
    if (!(fixed_lambda > 0.0)) throw std::invalid_argument("power_control: lambda must be positive");
    out.lambda = fixed_lambda;
    for (std::size_t n = 0; n < h.size(); ++n) {
      out.p[n] = std::min(fixed_lambda / (h[n] * h[n]), max_power[n]);
    }
  }
  return out;
}

namespace {

std::size_t check_inputs(std::span<const ParamVector> u, const AggregationWeights& weights,
                         const ChannelRealization& channel) {
  channel.validate();
  if (u.size() != weights.size() || u.size() != channel.h.size()) {
    throw std::invalid_argument("ota_aggregate: " + std::to_string(u.size()) +
                                " transmissions, " + std::to_string(weights.size()) +
                                " weights, " + std::to_string(channel.h.size()) +
                                " channel gains");
  }
  std::size_t q = 0;
  for (std::size_t n = 0; n < u.size(); ++n) {
    if (weights[n] == 0.0) continue;
    if (q == 0) q = u[n].size();
    if (u[n].size() != q) throw std::invalid_argument("ota_aggregate: dimension mismatch");
  }
  if (q == 0) throw std::invalid_argument("ota_aggregate: nothing to aggregate");
  return q;
}

}  // namespace

AggregationResult ota_aggregate_with_noise(std::span<const ParamVector> u,
                                           const AggregationWeights& weights,
                                           const ChannelRealization& channel,
                                           const ParamVector& noise) {
  const std::size_t q = check_inputs(u, weights, channel);
  if (noise.size() != q) throw std::invalid_argument("ota_aggregate: noise has wrong length");
  const double inv_sqrt_lambda = 1.0 / std::sqrt(channel.lambda);

  // Σ_n rho_n (h_n sqrt(p_n) u_n + z) / sqrt(lambda), with the common noise
  // term factored out of the device sum.
  AggregationResult out;
  out.received = ParamVector(q);
  double rho_sum = 0.0;
  for (std::size_t n = 0; n < u.size(); ++n) {
    rho_sum += weights[n];
    if (weights[n] == 0.0) continue;
    kernels::axpy(weights[n] * channel.alignment(n), u[n].span(), out.received.span());
  }
  kernels::axpy(rho_sum * inv_sqrt_lambda, noise.span(), out.received.span());
  out.ideal = weighted_sum(u, weights);
  out.error = out.received - out.ideal;
  out.noise = noise;
  out.error_sq_norm = out.error.sq_norm();
  out.received.ensure_finite("over-the-air aggregation");
  return out;
}

AggregationResult ota_aggregate(std::span<const ParamVector> u,
                                const AggregationWeights& weights,
                                const ChannelRealization& channel, Philox4x32& rng) {
  const std::size_t q = check_inputs(u, weights, channel);
  ParamVector z(q);
  if (channel.noise_variance > 0.0) {
    std::normal_distribution<double> normal(0.0, std::sqrt(channel.noise_variance));
    for (std::size_t j = 0; j < q; ++j) z[j] = normal(rng);
  }
  return ota_aggregate_with_noise(u, weights, channel, z);
}

ErrorDecomposition decompose_error(std::span<const ParamVector> u,
                                   const AggregationWeights& weights,
                                   const ChannelRealization& channel,
                                   const ParamVector& noise) {
  const std::size_t q = check_inputs(u, weights, channel);
  ErrorDecomposition out;
  out.misalignment = ParamVector(q);
  double rho_sum = 0.0;
  for (std::size_t n = 0; n < u.size(); ++n) {
    rho_sum += weights[n];
    if (weights[n] == 0.0) continue;
    kernels::axpy(weights[n] * (channel.alignment(n) - 1.0), u[n].span(),
                  out.misalignment.span());
  }
  out.noise = (rho_sum / std::sqrt(channel.lambda)) * noise;
  return out;
}

}  // namespace fliscc
