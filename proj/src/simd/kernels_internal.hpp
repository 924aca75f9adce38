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

#include "mvhash/simd/kernels.hpp"

namespace mvhash::simd {

namespace scalar {
void hamming_scan(const std::uint64_t*, std::size_t, std::size_t,
                  const std::uint64_t*, std::uint32_t*);
void weighted_hamming_scan(const std::uint64_t*, std::size_t, std::size_t,
                           std::size_t, const std::uint64_t*, const double*,
                           double*);
std::uint64_t popcount_and(const std::uint64_t*, const std::uint64_t*,
                           std::size_t);
double squared_l2(const float*, const float*, std::size_t);
void squared_l2_batch(const float*, std::size_t, std::size_t, const float*,
                      double*);
}  // namespace scalar

#if defined(MVHASH_HAVE_AVX2)
namespace avx2 {
void hamming_scan(const std::uint64_t*, std::size_t, std::size_t,
                  const std::uint64_t*, std::uint32_t*);
void weighted_hamming_scan(const std::uint64_t*, std::size_t, std::size_t,
                           std::size_t, const std::uint64_t*, const double*,
                           double*);
std::uint64_t popcount_and(const std::uint64_t*, const std::uint64_t*,
                           std::size_t);
double squared_l2(const float*, const float*, std::size_t);
void squared_l2_batch(const float*, std::size_t, std::size_t, const float*,
                      double*);
}  // namespace avx2
#endif

}  // namespace mvhash::simd
