// Copyright 2026-present the mvhash project
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

#include <bit>

#include "kernels_internal.hpp"

namespace mvhash::simd::scalar {

void hamming_scan(const std::uint64_t* codes, std::size_t n, std::size_t words,
                  const std::uint64_t* query, std::uint32_t* out) {
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint64_t* row = codes + i * words;
    std::uint32_t d = 0;
    for (std::size_t w = 0; w < words; ++w) {
      d += static_cast<std::uint32_t>(std::popcount(row[w] ^ query[w]));
    }
    out[i] = d;
  }
}

void weighted_hamming_scan(const std::uint64_t* codes, std::size_t n,
                           std::size_t words, std::size_t /*bits*/,
                           const std::uint64_t* query, const double* weights,
                           double* out) {
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint64_t* row = codes + i * words;
    double d = 0.0;
    for (std::size_t w = 0; w < words; ++w) {
      std::uint64_t x = row[w] ^ query[w];
      const double* wk = weights + w * 64;
      while (x != 0) {
        d += wk[std::countr_zero(x)];
        x &= x - 1;
      }
    }
    out[i] = d;
  }
}

std::uint64_t popcount_and(const std::uint64_t* a, const std::uint64_t* b,
                           std::size_t words) {
  std::uint64_t total = 0;
  for (std::size_t w = 0; w < words; ++w) {
    total += static_cast<std::uint64_t>(std::popcount(a[w] & b[w]));
  }
  return total;
}

double squared_l2(const float* a, const float* b, std::size_t dim) {
  double lane[4] = {0.0, 0.0, 0.0, 0.0};
  const std::size_t head = dim - dim % 4;
  for (std::size_t i = 0; i < head; i += 4) {
    for (std::size_t j = 0; j < 4; ++j) {
      const double d = static_cast<double>(a[i + j]) - static_cast<double>(b[i + j]);
      lane[j] = lane[j] + d * d;
    }
  }
  double tail = 0.0;
  for (std::size_t i = head; i < dim; ++i) {
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    tail = tail + d * d;
  }
  return ((lane[0] + lane[1]) + (lane[2] + lane[3])) + tail;
}

void squared_l2_batch(const float* rows, std::size_t n, std::size_t dim,
                      const float* query, double* out) {
  for (std::size_t i = 0; i < n; ++i) out[i] = squared_l2(rows + i * dim, query, dim);
}

}  // namespace mvhash::simd::scalar
