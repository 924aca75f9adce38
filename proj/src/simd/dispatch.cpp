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

#include <atomic>
#include <cstdlib>
#include <string_view>

#include "kernels_internal.hpp"

namespace mvhash::simd {

namespace {

constexpr Kernels kScalar{
    "scalar",
    &scalar::hamming_scan,
    &scalar::weighted_hamming_scan,
    &scalar::popcount_and,
    &scalar::squared_l2,
    &scalar::squared_l2_batch,
};

#if defined(MVHASH_HAVE_AVX2)
constexpr Kernels kAvx2{
    "avx2",
    &avx2::hamming_scan,
    &avx2::weighted_hamming_scan,
    &avx2::popcount_and,
    &avx2::squared_l2,
    &avx2::squared_l2_batch,
};
#endif

std::atomic<const Kernels*> g_forced{nullptr};

const Kernels& select_kernels() {
  if (const char* env = std::getenv("MVHASH_SIMD"); env != nullptr && std::string_view(env) == "scalar") {
    return kScalar;
  }
  if (const Kernels* k = avx2_kernels()) return *k;
  return kScalar;
}

}  // namespace

const Kernels& scalar_kernels() { return kScalar; }

const Kernels* avx2_kernels() {
#if defined(MVHASH_HAVE_AVX2)
  static const bool supported = [] {
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("popcnt");
  }();
  return supported ? &kAvx2 : nullptr;
#else
  return nullptr;
#endif
}

const Kernels& active_kernels() {
  if (const Kernels* forced = g_forced.load(std::memory_order_acquire)) return *forced;
  static const Kernels& selected = select_kernels();
  return selected;
}

void force_kernels(const Kernels* kernels) { g_forced.store(kernels, std::memory_order_release); }

}  // namespace mvhash::simd
