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

#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "fliscc/kernels.hpp"
#include "oracles.hpp"

namespace k = fliscc::kernels;

namespace {

std::vector<double> random_vector(std::mt19937_64& gen, std::size_t n) {
  std::normal_distribution<double> normal(0.0, 3.0);
  std::vector<double> v(n);
  for (double& x : v) x = normal(gen);
  return v;
}

// Lengths around the 4-wide and 8-wide unroll boundaries.
const std::size_t kLengths[] = {0, 1, 2, 3, 4, 5, 7, 8, 9, 15, 16, 17, 31, 33, 64, 100, 1001};

}  // namespace

TEST_CASE("scalar dot and sq_norm match an extended-precision oracle") {
  std::mt19937_64 gen(1);
  for (std::size_t n : kLengths) {
    const auto a = random_vector(gen, n);
    const auto b = random_vector(gen, n);
    double mag = 0.0;
    for (std::size_t i = 0; i < n; ++i) mag += std::abs(a[i] * b[i]);
    CHECK(std::abs(k::scalar::dot(a, b) - oracle::dot(a, b)) <= 1e-14 * (1.0 + mag));
    CHECK(std::abs(k::scalar::sq_norm(a) - oracle::sq_norm(a)) <= 1e-14 * (1.0 + oracle::sq_norm(a)));
  }
}

TEST_CASE("scalar element-wise kernels") {
  const std::vector<double> x{1.0, -2.0, 3.0};
  std::vector<double> y{0.5, 0.5, 0.5};
  k::scalar::axpy(2.0, x, y);
  CHECK(y == std::vector<double>{2.5, -3.5, 6.5});
  k::scalar::scale(-1.0, y);
  CHECK(y == std::vector<double>{-2.5, 3.5, -6.5});
  std::vector<double> out(3);
  k::scalar::sub(x, y, out);
  CHECK(out == std::vector<double>{3.5, -5.5, 9.5});
  k::scalar::axpby(2.0, x, 0.5, out);
  CHECK(out == std::vector<double>{3.75, -6.75, 10.75});
}

#if defined(FLISCC_HAVE_AVX2)
TEST_CASE("avx2 kernels agree with scalar kernels") {
  if (!k::backend_available(k::Backend::kAvx2)) {
    MESSAGE("CPU lacks AVX2; skipping");
    return;
  }
  std::mt19937_64 gen(2);
  for (std::size_t n : kLengths) {
    CAPTURE(n);
    const auto a = random_vector(gen, n);
    const auto b = random_vector(gen, n);
    double mag = 0.0;
    for (std::size_t i = 0; i < n; ++i) mag += std::abs(a[i] * b[i]);
    // Reductions reassociate; element-wise kernels must be bit-identical.
    CHECK(std::abs(k::avx2::dot(a, b) - k::scalar::dot(a, b)) <= 1e-14 * (1.0 + mag));
    CHECK(std::abs(k::avx2::sq_norm(a) - k::scalar::sq_norm(a)) <=
          1e-14 * (1.0 + k::scalar::sq_norm(a)));

    auto y1 = b, y2 = b;
    k::scalar::axpy(0.37, a, y1);
    k::avx2::axpy(0.37, a, y2);
    CHECK(y1 == y2);

    y1 = a, y2 = a;
    k::scalar::scale(-1.7, y1);
    k::avx2::scale(-1.7, y2);
    CHECK(y1 == y2);

    std::vector<double> o1(n), o2(n);
    k::scalar::sub(a, b, o1);
    k::avx2::sub(a, b, o2);
    CHECK(o1 == o2);

    y1 = b, y2 = b;
    k::scalar::axpby(0.3, a, -1.1, y1);
    k::avx2::axpby(0.3, a, -1.1, y2);
    CHECK(y1 == y2);
  }
}
#endif

TEST_CASE("backend selection") {
  const k::Backend original = k::active_backend();
  CHECK(k::backend_available(k::Backend::kScalar));
  k::set_backend(k::Backend::kScalar);
  CHECK(k::active_backend() == k::Backend::kScalar);
  const std::vector<double> a{1.0, 2.0, 3.0};
  CHECK(k::dot(a, a) == 14.0);
  if (!k::backend_available(k::Backend::kAvx2)) {
    CHECK_THROWS_AS(k::set_backend(k::Backend::kAvx2), std::invalid_argument);
  }
  k::set_backend(original);
  CHECK(k::backend_name(k::Backend::kScalar) == "scalar");
}
