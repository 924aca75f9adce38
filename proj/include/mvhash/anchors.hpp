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

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mvhash/common.hpp"
#include "mvhash/hashing.hpp"

namespace mvhash::anchors {

/// One sparse row over the K anchors, sorted by anchor index.
struct SparseRow {
  std::vector<std::uint32_t> index;
  std::vector<double> value;

  std::size_t nnz() const { return index.size(); }
};

using SparseEmbedding = std::vector<SparseRow>;

enum class AnchorMethod { kRandom, kKmeans };

AnchorMethod parse_method(const std::string& name);

struct AnchorOptions {
  std::size_t k = 300;
  AnchorMethod method = AnchorMethod::kRandom;
  std::size_t s_nn = 5;
  std::uint64_t seed = 1;
  std::size_t kmeans_iters = 25;
  /// Points sampled to set the kernel bandwidth.
  std::size_t bandwidth_sample = 1000;
  /// Random database pairs sampled to set sigma.
  std::size_t sigma_pairs = 1000;
};

/// Per-view anchor set. The anchors double as the landmarks of the
/// query-adaptive weights.
struct AnchorModel {
  Matrix anchors;                   // K x D
  PackedCodes anchor_codes;         // codes of the anchors (may be empty)
  double bandwidth = 1.0;           // Gaussian kernel width
  std::size_t s_nn = 5;             // nearest anchors kept per point
  double sigma = 1.0;               // embedding-space similarity scale
  SparseEmbedding anchor_embedding; // z(u_k) for every anchor

  std::size_t k() const { return static_cast<std::size_t>(anchors.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(anchors.cols()); }

  /// Throws if the invariants (1 <= s_nn <= K, bandwidth > 0, sigma > 0,
  /// code count) do not hold.
  void validate() const;
};

/// Selects K anchors from the rows of 'data' (random sampling without
/// replacement, or k-means++ seeded Lloyd), sets bandwidth and sigma, embeds
/// the anchors, and encodes them when a hash model is given.
AnchorModel build_anchors(const Matrix& data, const AnchorOptions& options,
                          const hashing::HashModel* hash_model = nullptr);

/// Recomputes anchor_embedding (and anchor_codes when hash_model is given).
void finalize(AnchorModel& model, const hashing::HashModel* hash_model);

/// z(x): the s_nn nearest anchors by Euclidean distance, weighted by the
/// Gaussian kernel and normalised to sum to one.
SparseRow embed(const AnchorModel& model, std::span<const float> x);

/// Normalises kernel values exp(-d2 / (2 bw^2)) over the given squared
/// distances. Values are computed relative to the smallest distance, so the
/// result stays finite for any bandwidth.
std::vector<double> kernel_weights(std::span<const double> squared_distances, double bandwidth);

/// exp(-||a - b||^2 / sigma^2).
double similarity(const SparseRow& a, const SparseRow& b, double sigma);

/// ||a - b||^2 over the union of the supports.
double squared_distance(const SparseRow& a, const SparseRow& b);

struct LandmarkWeight {
  std::uint32_t landmark = 0;
  double weight = 0.0;
};

/// The L anchors most similar to the query embedding, with their
/// similarities renormalised to sum to one. Ordered by descending
/// similarity, ties by ascending anchor index.
std::vector<LandmarkWeight> query_neighbor_profile(const AnchorModel& model, const SparseRow& z_query,
                                                   std::size_t l);

// Anchor file: "MVA1", u32 version, u32 K, u32 D, u32 s_nn, f64 bandwidth,
// f64 sigma, K*D f32 anchors; anchor codes are stored as a codes file.
void save_anchors(const std::string& path, const AnchorModel& model);
AnchorModel load_anchors(const std::string& path);

}  // namespace mvhash::anchors
