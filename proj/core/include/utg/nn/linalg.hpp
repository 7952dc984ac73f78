// Copyright 2026 The utg Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cstddef>

namespace utg::nn::linalg {

/// C[m x n] (+)= A[m x k] * B[k x n], all row-major.
///
/// The summation order for every C element is k = 0..K-1 irrespective of
/// m, n or tiling, so a column's result does not depend on how many other
/// columns share the call.
template <class T>
void gemm(std::size_t m, std::size_t k, std::size_t n, const T* a, const T* b, T* c,
          bool accumulate) {
  if (!accumulate) std::fill(c, c + m * n, T{0});
  constexpr std::size_t kTile = 1024;
  for (std::size_t j0 = 0; j0 < n; j0 += kTile) {
    const std::size_t j1 = std::min(n, j0 + kTile);
    for (std::size_t i = 0; i < m; ++i) {
      T* crow = c + i * n;
      const T* arow = a + i * k;
      for (std::size_t p = 0; p < k; ++p) {
        const T av = arow[p];
        if (av == T{0}) continue;
        const T* brow = b + p * n;
        for (std::size_t j = j0; j < j1; ++j) crow[j] += av * brow[j];
      }
    }
  }
}

/// dst[cols x rows] = transpose of src[rows x cols].
template <class T>
void transpose(std::size_t rows, std::size_t cols, const T* src, T* dst) {
  constexpr std::size_t kBlock = 32;
  for (std::size_t r0 = 0; r0 < rows; r0 += kBlock) {
    for (std::size_t c0 = 0; c0 < cols; c0 += kBlock) {
      const std::size_t r1 = std::min(rows, r0 + kBlock);
      const std::size_t c1 = std::min(cols, c0 + kBlock);
      for (std::size_t r = r0; r < r1; ++r) {
        for (std::size_t c = c0; c < c1; ++c) dst[c * rows + r] = src[r * cols + c];
      }
    }
  }
}

}  // namespace utg::nn::linalg
