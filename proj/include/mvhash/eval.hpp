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
#include <limits>
#include <map>
#include <span>
#include <vector>

#include "mvhash/common.hpp"
#include "mvhash/dataset.hpp"
#include "mvhash/hashing.hpp"

namespace mvhash::eval {

// 'relevant' is always a sorted id list. Positions past the end of 'ranked'
// count as non-relevant.

double precision_at_k(std::span<const ItemId> ranked, const std::vector<ItemId>& relevant, std::size_t k);
double recall_at_k(std::span<const ItemId> ranked, const std::vector<ItemId>& relevant, std::size_t k);

/// AP@k = (1 / min(|relevant|, k)) * sum over relevant hits at rank i <= k of
/// precision@i. Pass the default k for AP over the whole list.
double average_precision(std::span<const ItemId> ranked, const std::vector<ItemId>& relevant,
                         std::size_t k = std::numeric_limits<std::size_t>::max());

/// Arithmetic mean; throws on an empty input.
double mean_average_precision(std::span<const double> aps);

struct PrPoint {
  double recall = 0.0;
  double precision = 0.0;
};

/// (recall@i, precision@i) for every rank position i of 'ranked'.
std::vector<PrPoint> pr_curve(std::span<const ItemId> ranked, const std::vector<ItemId>& relevant);

struct Metrics {
  std::map<std::size_t, double> precision_at;
  std::map<std::size_t, double> recall_at;
  std::map<std::size_t, double> ap_at;
  double map_score = 0.0;
  /// Mean (recall, precision) over queries at each depth 1..pr_depth.
  std::vector<PrPoint> pr_curve;
  std::size_t valid_queries = 0;
  std::size_t skipped_queries = 0;
};

/// Averages the metrics over queries with a non-empty relevant set.
/// rankings[q] is the ranked list returned for query q.
Metrics compute_metrics(const std::vector<std::vector<ItemId>>& rankings, const dataset::GroundTruth& truth,
                        std::span<const std::size_t> ks, std::size_t pr_depth);

// Exhaustive oracles. They share the ascending-id tie rule of the library
// rankers but none of their code paths.

std::vector<ScoredId> brute_force_rank_euclidean(const Matrix& data, std::span<const float> query, std::size_t k);
std::vector<ScoredId> brute_force_rank_hamming(const PackedCodes& codes, std::span<const std::uint64_t> query,
                                               std::size_t k);
std::vector<ScoredId> brute_force_rank_weighted(const PackedCodes& codes, std::span<const std::uint64_t> query,
                                                std::span<const double> weights, std::size_t k);

}  // namespace mvhash::eval
