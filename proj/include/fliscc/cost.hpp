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

// Per-round latency and energy of uplink transmission and local computation.

#include <cstdint>
#include <span>
#include <vector>

namespace fliscc {

struct CostConfig {
  double slot_seconds = 1e-3;   // T_slot, duration of one resource block
  int symbols_per_block = 14;   // L
  bool include_downlink = false;
};

/// ceil(q / L) * T_slot. Throws std::invalid_argument for q <= 0 or L < 1.
double comm_latency(std::int64_t q, int symbols_per_block, double slot_seconds);

/// p * t. Throws std::invalid_argument on negative inputs.
double comm_energy(double power, double seconds);

/// epochs * xi * S / f. Throws std::invalid_argument for f <= 0.
double comp_latency(double cycles_per_sample, double samples, double cpu_freq,
                    double epochs = 1.0);

/// epochs * xi * varsigma * f^2 * S.
double comp_energy(double cycles_per_sample, double energy_coeff, double cpu_freq,
                   double samples, double epochs = 1.0);

enum class CpuCharging {
  kSamplesProcessed,  // FedAVG pays for tau * batch_size samples
  kWholeEpoch,        // every local update pays one pass over S_t^n
};

/// Epoch multiplier for one FedAVG local update over `samples` samples:
/// min(tau * batch, tau * S) / S under sample charging, 1 under whole-epoch
/// charging. Zero when the device holds no data.
double fedavg_epochs(int tau, std::int64_t batch_size, std::int64_t samples,
                     CpuCharging charging);

struct DeviceCost {
  double comp_latency = 0.0;
  double comp_energy = 0.0;
  double comm_energy = 0.0;
};

struct RoundCost {
  double comm_latency = 0.0;
  std::vector<double> comp_latency;  // per device
  std::vector<double> comm_energy;   // per device
  std::vector<double> comp_energy;   // per device
  double total_latency = 0.0;        // max_n comp_latency[n] + comm_latency
  double total_energy = 0.0;         // Σ_n (comp_energy[n] + comm_energy[n])

  double max_comp_latency() const;
  double total_comp_energy() const;
  double total_comm_energy() const;
};

/// Combines per-device costs with the shared uplink latency. Throws
/// std::invalid_argument when no devices are given.
RoundCost round_cost(std::span<const DeviceCost> devices, double comm_latency);

}  // namespace fliscc
