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

#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "fliscc/kernels.hpp"

namespace fliscc::kernels {

namespace {

bool cpu_has_avx2() {
#if defined(FLISCC_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

Backend initial_backend() {
  if (const char* env = std::getenv("FLISCC_KERNELS")) {
    const std::string requested(env);
    if (requested == "scalar") return Backend::kScalar;
    if (requested == "avx2" && cpu_has_avx2()) return Backend::kAvx2;
  }
  return cpu_has_avx2() ? Backend::kAvx2 : Backend::kScalar;
}

std::atomic<Backend>& backend_slot() {
  static std::atomic<Backend> slot{initial_backend()};
  return slot;
}

}  // namespace

Backend active_backend() { return backend_slot().load(std::memory_order_relaxed); }

bool backend_available(Backend backend) {
  return backend == Backend::kScalar || cpu_has_avx2();
}

void set_backend(Backend backend) {
  if (!backend_available(backend)) {
    throw std::invalid_argument("kernel backend " +
                                std::string(backend_name(backend)) +
                                " is not available on this CPU/build");
  }
  backend_slot().store(backend, std::memory_order_relaxed);
}

std::string_view backend_name(Backend backend) {
  switch (backend) {
    case Backend::kScalar:
      return "scalar";
    case Backend::kAvx2:
      return "avx2";
  }
  return "unknown";
}

#if defined(FLISCC_HAVE_AVX2)
#define FLISCC_DISPATCH(fn, ...)                  \
  if (active_backend() == Backend::kAvx2) {       \
    return avx2::fn(__VA_ARGS__);                 \
  }                                               \
  return scalar::fn(__VA_ARGS__)
#else
#define FLISCC_DISPATCH(fn, ...) return scalar::fn(__VA_ARGS__)
#endif

double dot(std::span<const double> a, std::span<const double> b) {
  FLISCC_DISPATCH(dot, a, b);
}

double sq_norm(std::span<const double> a) { FLISCC_DISPATCH(sq_norm, a); }

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  FLISCC_DISPATCH(axpy, alpha, x, y);
}

void scale(double alpha, std::span<double> x) { FLISCC_DISPATCH(scale, alpha, x); }

void sub(std::span<const double> a, std::span<const double> b,
         std::span<double> out) {
  FLISCC_DISPATCH(sub, a, b, out);
}

void axpby(double alpha, std::span<const double> x, double beta,
           std::span<double> y) {
  FLISCC_DISPATCH(axpby, alpha, x, beta, y);
}

#undef FLISCC_DISPATCH

}  // namespace fliscc::kernels
