/* Copyright 2026 The LightNet Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

// Row-major accumulate-into matrix kernels used by convolution and dense.
// Summation order is fixed, so results are bitwise reproducible.

#ifndef LIGHTNET_SRC_GEMM_HPP_
#define LIGHTNET_SRC_GEMM_HPP_

#include <cstddef>

namespace lightnet::detail {

// C[m,n] += sum_k A[m,k] * B[k,n]
template <typename T>
void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const T* a, const T* b, T* c) {
  for (std::size_t i = 0; i < m; ++i) {
    T* c_row = c + i * n;
    const T* a_row = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const T av = a_row[p];
      if (av == T{0}) continue;
      const T* b_row = b + p * n;
      for (std::size_t j = 0; j < n; ++j) c_row[j] += av * b_row[j];
    }
  }
}

// C[m,n] += sum_k A[k,m] * B[k,n]
template <typename T>
void gemm_tn(std::size_t m, std::size_t n, std::size_t k, const T* a, const T* b, T* c) {
  for (std::size_t p = 0; p < k; ++p) {
    const T* a_row = a + p * m;
    const T* b_row = b + p * n;
    for (std::size_t i = 0; i < m; ++i) {
      const T av = a_row[i];
      if (av == T{0}) continue;
      T* c_row = c + i * n;
      for (std::size_t j = 0; j < n; ++j) c_row[j] += av * b_row[j];
    }
  }
}

// Eight independent partial sums so the compiler can vectorize without
// reassociating; the combine order is fixed.
template <typename T>
T dot(const T* x, const T* y, std::size_t n) {
  T acc[8] = {};
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    for (std::size_t u = 0; u < 8; ++u) acc[u] += x[i + u] * y[i + u];
  }
  for (; i < n; ++i) acc[i % 8] += x[i] * y[i];
  return ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7]));
}

// C[m,n] += sum_k A[m,k] * B[n,k]
template <typename T>
void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const T* a, const T* b, T* c) {
  for (std::size_t i = 0; i < m; ++i) {
    const T* a_row = a + i * k;
    T* c_row = c + i * n;
    for (std::size_t j = 0; j < n; ++j) c_row[j] += dot(a_row, b + j * k, k);
  }
}

}  // namespace lightnet::detail

#endif  // LIGHTNET_SRC_GEMM_HPP_
