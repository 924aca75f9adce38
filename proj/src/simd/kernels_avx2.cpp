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

// Compiled with -mavx2 -mpopcnt. Only reached through the dispatch table
// after a runtime CPU check.

#include <immintrin.h>

#include <bit>

#include "kernels_internal.hpp"

namespace mvhash::simd::avx2 {

namespace {

// Per-64-bit-lane popcount (nibble lookup + SAD).
inline __m256i popcount_epi64(__m256i v) {
  const __m256i lut = _mm256_setr_epi8(0, 1, 1, 2, 1, 2, 2, 3, 1, 2, 2, 3, 2, 3, 3, 4,
                                       0, 1, 1, 2, 1, 2, 2, 3, 1, 2, 2, 3, 2, 3, 3, 4);
  const __m256i low_mask = _mm256_set1_epi8(0x0f);
  const __m256i lo = _mm256_and_si256(v, low_mask);
  const __m256i hi = _mm256_and_si256(_mm256_srli_epi16(v, 4), low_mask);
  const __m256i counts =
      _mm256_add_epi8(_mm256_shuffle_epi8(lut, lo), _mm256_shuffle_epi8(lut, hi));
  return _mm256_sad_epu8(counts, _mm256_setzero_si256());
}

inline __m256i gather_rows(const std::uint64_t* codes, std::size_t i,
                           std::size_t words, std::size_t w) {
  return _mm256_set_epi64x(static_cast<long long>(codes[(i + 3) * words + w]),
                           static_cast<long long>(codes[(i + 2) * words + w]),
                           static_cast<long long>(codes[(i + 1) * words + w]),
                           static_cast<long long>(codes[i * words + w]));
}

}  // namespace

void hamming_scan(const std::uint64_t* codes, std::size_t n, std::size_t words,
                  const std::uint64_t* query, std::uint32_t* out) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256i acc = _mm256_setzero_si256();
    for (std::size_t w = 0; w < words; ++w) {
      const __m256i q = _mm256_set1_epi64x(static_cast<long long>(query[w]));
      acc = _mm256_add_epi64(acc, popcount_epi64(_mm256_xor_si256(gather_rows(codes, i, words, w), q)));
    }
    alignas(32) std::uint64_t lanes[4];
    _mm256_store_si256(reinterpret_cast<__m256i*>(lanes), acc);
    for (int j = 0; j < 4; ++j) out[i + j] = static_cast<std::uint32_t>(lanes[j]);
  }
  for (; i < n; ++i) {
    std::uint32_t d = 0;
    for (std::size_t w = 0; w < words; ++w) {
      d += static_cast<std::uint32_t>(std::popcount(codes[i * words + w] ^ query[w]));
    }
    out[i] = d;
  }
}

// Vectorized across items: each lane is one item and adds weights[k] (or +0.0)
// in ascending k, which reproduces the scalar set-bit enumeration exactly.
void weighted_hamming_scan(const std::uint64_t* codes, std::size_t n,
                           std::size_t words, std::size_t bits,
                           const std::uint64_t* query, const double* weights,
                           double* out) {
  const __m256d zero = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d acc = _mm256_setzero_pd();
    for (std::size_t w = 0; w < words; ++w) {
      const __m256i q = _mm256_set1_epi64x(static_cast<long long>(query[w]));
      __m256i x = _mm256_xor_si256(gather_rows(codes, i, words, w), q);
      const std::size_t span = bits - w * 64 < 64 ? bits - w * 64 : 64;
      const double* wk = weights + w * 64;
      for (std::size_t b = 0; b < span; ++b) {
        const __m256d sign = _mm256_castsi256_pd(_mm256_slli_epi64(x, 63));
        acc = _mm256_add_pd(acc, _mm256_blendv_pd(zero, _mm256_set1_pd(wk[b]), sign));
        x = _mm256_srli_epi64(x, 1);
      }
    }
    _mm256_storeu_pd(out + i, acc);
  }
  if (i < n) scalar::weighted_hamming_scan(codes + i * words, n - i, words, bits, query, weights, out + i);
}

std::uint64_t popcount_and(const std::uint64_t* a, const std::uint64_t* b,
                           std::size_t words) {
  __m256i acc = _mm256_setzero_si256();
  std::size_t w = 0;
  for (; w + 4 <= words; w += 4) {
    const __m256i va = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(a + w));
    const __m256i vb = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(b + w));
    acc = _mm256_add_epi64(acc, popcount_epi64(_mm256_and_si256(va, vb)));
  }
  alignas(32) std::uint64_t lanes[4];
  _mm256_store_si256(reinterpret_cast<__m256i*>(lanes), acc);
  std::uint64_t total = lanes[0] + lanes[1] + lanes[2] + lanes[3];
  for (; w < words; ++w) total += static_cast<std::uint64_t>(std::popcount(a[w] & b[w]));
  return total;
}

double squared_l2(const float* a, const float* b, std::size_t dim) {
  __m256d acc = _mm256_setzero_pd();
  const std::size_t head = dim - dim % 4;
  for (std::size_t i = 0; i < head; i += 4) {
    const __m256d d = _mm256_sub_pd(_mm256_cvtps_pd(_mm_loadu_ps(a + i)),
                                    _mm256_cvtps_pd(_mm_loadu_ps(b + i)));
    acc = _mm256_add_pd(acc, _mm256_mul_pd(d, d));
  }
  double tail = 0.0;
  for (std::size_t i = head; i < dim; ++i) {
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    tail = tail + d * d;
  }
  alignas(32) double lane[4];
  _mm256_store_pd(lane, acc);
  return ((lane[0] + lane[1]) + (lane[2] + lane[3])) + tail;
}

void squared_l2_batch(const float* rows, std::size_t n, std::size_t dim,
                      const float* query, double* out) {
  for (std::size_t i = 0; i < n; ++i) out[i] = squared_l2(rows + i * dim, query, dim);
}

}  // namespace mvhash::simd::avx2
