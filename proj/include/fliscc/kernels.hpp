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

// Dense double-precision vector kernels used by every inner loop of the
// simulator (gradient accumulation, aggregation, norms).
//
// Each kernel has a scalar reference implementation and, on x86-64, an AVX2
// variant. The backend is chosen once at startup from CPUID and can be
// overridden with set_backend() or the FLISCC_KERNELS environment variable
// ("scalar" or "avx2").
//
// Element-wise kernels (axpy, scale, sub, weighted_axpby) produce results that
// are bit-identical across backends: the vector code uses separate multiply
// and add instructions, never fused multiply-add. Reductions (dot, sq_norm)
// differ only in summation order.

#include <cstddef>
#include <span>
#include <string_view>

namespace fliscc::kernels {

enum class Backend { kScalar, kAvx2 };

/// Backend currently used by the dispatching entry points.
Backend active_backend();

/// True when the CPU and build support the given backend.
bool backend_available(Backend backend);

/// Forces a backend. Throws std::invalid_argument if it is unavailable.
void set_backend(Backend backend);

std::string_view backend_name(Backend backend);

// Dispatching entry points. Length mismatches are the caller's
// responsibility; spans must have equal sizes.

double dot(std::span<const double> a, std::span<const double> b);
double sq_norm(std::span<const double> a);
/// y += alpha * x
void axpy(double alpha, std::span<const double> x, std::span<double> y);
/// x *= alpha
void scale(double alpha, std::span<double> x);
/// out = a - b
void sub(std::span<const double> a, std::span<const double> b,
         std::span<double> out);
/// y = alpha * x + beta * y
void axpby(double alpha, std::span<const double> x, double beta,
           std::span<double> y);

namespace scalar {
double dot(std::span<const double> a, std::span<const double> b);
double sq_norm(std::span<const double> a);
void axpy(double alpha, std::span<const double> x, std::span<double> y);
void scale(double alpha, std::span<double> x);
void sub(std::span<const double> a, std::span<const double> b,
         std::span<double> out);
void axpby(double alpha, std::span<const double> x, double beta,
           std::span<double> y);
}  // namespace scalar

#if defined(FLISCC_HAVE_AVX2)
namespace avx2 {
double dot(std::span<const double> a, std::span<const double> b);
double sq_norm(std::span<const double> a);
void axpy(double alpha, std::span<const double> x, std::span<double> y);
void scale(double alpha, std::span<double> x);
void sub(std::span<const double> a, std::span<const double> b,
         std::span<double> out);
void axpby(double alpha, std::span<const double> x, double beta,
           std::span<double> y);
}  // namespace avx2
#endif

}  // namespace fliscc::kernels
