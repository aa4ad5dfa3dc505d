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

#include <stdexcept>
#include <string>

namespace fliscc {

/// Invalid or inconsistent experiment configuration. CLI exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A NaN/Inf appeared in a parameter vector or loss. CLI exit code 3.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A convergence bound was requested where its learning-rate condition or
/// dissimilarity condition does not hold. CLI exit code 4.
class InfeasibleBoundError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised by the harness when a module fails mid-run; carries where it
/// happened.
class RoundError : public std::runtime_error {
 public:
  RoundError(int round, std::string step, const std::exception& cause)
      : std::runtime_error("round " + std::to_string(round) + ", step '" +
                           step + "': " + cause.what()),
        round_(round),
        step_(std::move(step)),
        diverged_(dynamic_cast<const DivergenceError*>(&cause) != nullptr) {}

  int round() const { return round_; }
  const std::string& step() const { return step_; }
  /// True when the underlying failure was a DivergenceError.
  bool diverged() const { return diverged_; }

 private:
  int round_;
  std::string step_;
  bool diverged_;
};

}  // namespace fliscc
