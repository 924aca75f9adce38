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

#pragma once

#include <cstddef>
#include <cstdint>

// Data-parallel inner loops. Every variant must produce results that are
// bit-identical to the scalar reference; the equivalence tests assert exact
// equality, not a tolerance.
//
// Layout conventions:
//   codes:  n rows of 'words' uint64 each, row-major, bit k of a row lives in
//           word k / 64 at position k % 64.
//   floats: n rows of 'dim' floats, row-major.

namespace mvhash::simd {

// out[i] = popcount(codes[i] ^ query) for i in [0, n).
using HammingScanFn = void (*)(const std::uint64_t* codes, std::size_t n,
                               std::size_t words, const std::uint64_t* query,
                               std::uint32_t* out);

// out[i] = sum of weights[k] over bits k where codes[i] and query differ,
// accumulated in ascending k. 'bits' bounds k; padding bits must be zero.
using WeightedHammingScanFn = void (*)(const std::uint64_t* codes,
                                       std::size_t n, std::size_t words,
                                       std::size_t bits,
                                       const std::uint64_t* query,
                                       const double* weights, double* out);

// popcount(a & b) over 'words' words.
using PopcountAndFn = std::uint64_t (*)(const std::uint64_t* a,
                                        const std::uint64_t* b,
                                        std::size_t words);

// Squared Euclidean distance accumulated in double with a fixed four-lane
// association: lane j sums elements i = j (mod 4) of the leading multiple of
// four, the tail is summed sequentially, result = ((l0+l1)+(l2+l3)) + tail.
using SquaredL2Fn = double (*)(const float* a, const float* b, std::size_t dim);

// out[i] = squared_l2(rows + i * dim, query, dim).
using SquaredL2BatchFn = void (*)(const float* rows, std::size_t n,
                                  std::size_t dim, const float* query,
                                  double* out);

struct Kernels {
  const char* name;
  HammingScanFn hamming_scan;
  WeightedHammingScanFn weighted_hamming_scan;
  PopcountAndFn popcount_and;
  SquaredL2Fn squared_l2;
  SquaredL2BatchFn squared_l2_batch;
};

const Kernels& scalar_kernels();

/// Null when the binary was built without AVX2 support or the CPU lacks it.
const Kernels* avx2_kernels();

/// The table used by the library. Chosen once at first use: AVX2 when
/// available, unless the environment variable MVHASH_SIMD=scalar is set.
const Kernels& active_kernels();

/// Overrides the active table (tests and benchmarks). Pass nullptr to
/// restore automatic selection.
void force_kernels(const Kernels* kernels);

}  // namespace mvhash::simd
