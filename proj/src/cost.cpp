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

#include "fliscc/cost.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace fliscc {

double comm_latency(std::int64_t q, int symbols_per_block, double slot_seconds) {
  if (q <= 0) throw std::invalid_argument("comm_latency: q must be positive");
  if (symbols_per_block < 1) throw std::invalid_argument("comm_latency: L must be >= 1");
  if (!(slot_seconds > 0.0)) throw std::invalid_argument("comm_latency: T_slot must be positive");
  const std::int64_t blocks = (q + symbols_per_block - 1) / symbols_per_block;
  return static_cast<double>(blocks) * slot_seconds;
}

double comm_energy(double power, double seconds) {
  if (power < 0.0 || seconds < 0.0) throw std::invalid_argument("comm_energy: negative input");
  return power * seconds;
}

double comp_latency(double cycles_per_sample, double samples, double cpu_freq,
                    double epochs) {
  if (!(cpu_freq > 0.0)) throw std::invalid_argument("comp_latency: CPU frequency must be positive");
  if (cycles_per_sample < 0.0 || samples < 0.0 || epochs < 0.0) {
    throw std::invalid_argument("comp_latency: negative input");
  }
  return epochs * cycles_per_sample * samples / cpu_freq;
}

double comp_energy(double cycles_per_sample, double energy_coeff, double cpu_freq,
                   double samples, double epochs) {
  if (cycles_per_sample < 0.0 || energy_coeff < 0.0 || cpu_freq < 0.0 || samples < 0.0 ||
      epochs < 0.0) {
    throw std::invalid_argument("comp_energy: negative input");
  }
  return epochs * cycles_per_sample * energy_coeff * cpu_freq * cpu_freq * samples;
}

double fedavg_epochs(int tau, std::int64_t batch_size, std::int64_t samples,
                     CpuCharging charging) {
  if (samples <= 0) return 0.0;
  if (charging == CpuCharging::kWholeEpoch) return 1.0;
  const std::int64_t processed = static_cast<std::int64_t>(tau) * std::min(batch_size, samples);
  return static_cast<double>(processed) / static_cast<double>(samples);
}

double RoundCost::max_comp_latency() const {
  return comp_latency.empty() ? 0.0 : *std::max_element(comp_latency.begin(), comp_latency.end());
}

double RoundCost::total_comp_energy() const {
  return std::accumulate(comp_energy.begin(), comp_energy.end(), 0.0);
}

double RoundCost::total_comm_energy() const {
  return std::accumulate(comm_energy.begin(), comm_energy.end(), 0.0);
}

RoundCost round_cost(std::span<const DeviceCost> devices, double comm_latency) {
  if (devices.empty()) throw std::invalid_argument("round_cost: no devices");
  RoundCost out;
  out.comm_latency = comm_latency;
  for (const DeviceCost& d : devices) {
    out.comp_latency.push_back(d.comp_latency);
    out.comp_energy.push_back(d.comp_energy);
    out.comm_energy.push_back(d.comm_energy);
    out.total_energy += d.comp_energy + d.comm_energy;
  }
  out.total_latency = out.max_comp_latency() + comm_latency;
  return out;
}

}  // namespace fliscc
