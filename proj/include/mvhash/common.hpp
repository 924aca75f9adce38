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
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace mvhash {

/// Row-major float matrix holding one vector per row.
using Matrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using ItemId = std::uint32_t;

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An item id paired with its ranking score (a distance or a probability,
/// depending on the producer).
struct ScoredId {
  ItemId id = 0;
  double score = 0.0;

  friend bool operator==(const ScoredId&, const ScoredId&) = default;
};

/// Ascending by score, ties by ascending id.
inline bool ascending_score(const ScoredId& a, const ScoredId& b) {
  return a.score < b.score || (a.score == b.score && a.id < b.id);
}

/// Descending by score, ties by ascending id.
inline bool descending_score(const ScoredId& a, const ScoredId& b) {
  return a.score > b.score || (a.score == b.score && a.id < b.id);
}

std::vector<ItemId> ids_of(const std::vector<ScoredId>& ranked);

// Warnings go through a replaceable sink (stderr by default).
using WarningSink = std::function<void(std::string_view)>;
void set_warning_sink(WarningSink sink);
void warn(std::string_view message);

/// Deterministic engine for (seed, stream); distinct streams give
/// independent sequences from one user seed.
std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream = 0);

/// Runs body(i) for i in [0, n) over a small pool of threads. Each index is
/// visited exactly once; the body must only write state owned by index i.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

/// Upper bound on worker threads used by parallel_for (0 = hardware).
void set_max_threads(unsigned threads);

}  // namespace mvhash
