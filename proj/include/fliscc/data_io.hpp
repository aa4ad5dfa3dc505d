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

// Synthetic dataset generators and the on-disk dataset formats.
//
// Both formats carry the header (rows, cols, label column index); the label
// column holds non-negative integer class ids and every other column is a
// feature.
//   CSV:    "rows,cols,label_col" line, then one row of cols values per line.
//   Binary: "FLDS", three u64 header words, then rows*cols f64 values,
//           row-major, all little-endian.

#include <cstdint>
#include <string>
#include <string_view>

#include "fliscc/core_model.hpp"

namespace fliscc {

/// Gaussian class blobs: mean mu_c ~ N(0, separation^2 I), x = mu_c + noise * N(0, I).
/// Labels cycle through the classes so every class has floor or ceil of
/// samples / classes members.
SampleBatch make_blobs(std::size_t samples, std::size_t features, int classes,
                       double separation, double noise, std::uint64_t seed);

/// x ~ N(0, I); labels drawn from softmax(separation * W* x), W* ~ N(0, 1),
/// with a uniform random label substituted with probability `noise` (clamped to [0, 1]).
SampleBatch make_logistic_teacher(std::size_t samples, std::size_t features, int classes,
                                  double separation, double noise, std::uint64_t seed);

/// Format chosen by extension: ".csv" text, anything else binary.
void write_dataset(const std::string& path, const SampleBatch& data);
/// Throws ConfigError on unreadable or malformed files.
SampleBatch read_dataset(const std::string& path);

struct DataSpec {
  std::string source = "blobs";
  std::size_t samples = 1000;
  std::size_t features = 2;
  int classes = 2;
  double separation = 2.0;
  double noise = 1.0;
  std::uint64_t seed = 1;
  std::string output;
};

/// Parses a gen-data JSON spec; unknown keys are ConfigErrors.
DataSpec parse_data_spec(std::string_view text);
SampleBatch generate(const DataSpec& spec);

}  // namespace fliscc
