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

#include "mvhash/eval.hpp"

#include <algorithm>
#include <cmath>

namespace mvhash::eval {

namespace {

bool contains(const std::vector<ItemId>& sorted, ItemId id) {
  return std::binary_search(sorted.begin(), sorted.end(), id);
}

std::size_t hits_at(std::span<const ItemId> ranked, const std::vector<ItemId>& relevant, std::size_t k) {
  const std::size_t depth = std::min(k, ranked.size());
  std::size_t hits = 0;
  for (std::size_t i = 0; i < depth; ++i) hits += contains(relevant, ranked[i]);
  return hits;
}

void check_k(std::size_t k) {
  if (k == 0) throw Error("k must be >= 1");
}

void check_relevant(const std::vector<ItemId>& relevant) {
  if (relevant.empty()) throw Error("metric undefined for an empty relevant set");
}

std::vector<ScoredId> take_sorted(std::vector<ScoredId> all, std::size_t k) {
  std::sort(all.begin(), all.end(), ascending_score);
  all.resize(std::min(k, all.size()));
  return all;
}

}  // namespace

double precision_at_k(std::span<const ItemId> ranked, const std::vector<ItemId>& relevant, std::size_t k) {
  check_k(k);
  return static_cast<double>(hits_at(ranked, relevant, k)) / static_cast<double>(k);
}

double recall_at_k(std::span<const ItemId> ranked, const std::vector<ItemId>& relevant, std::size_t k) {
  check_k(k);
  check_relevant(relevant);
  return static_cast<double>(hits_at(ranked, relevant, k)) / static_cast<double>(relevant.size());
}

double average_precision(std::span<const ItemId> ranked, const std::vector<ItemId>& relevant, std::size_t k) {
  check_k(k);
  check_relevant(relevant);
  const std::size_t depth = std::min(k, ranked.size());
  double sum = 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < depth; ++i) {
    if (contains(relevant, ranked[i])) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(i + 1);
    }
  }
  return sum / static_cast<double>(std::min(relevant.size(), k));
}

double mean_average_precision(std::span<const double> aps) {
  if (aps.empty()) throw Error("MAP needs at least one valid query");
  double total = 0.0;
  for (double ap : aps) total += ap;
  return total / static_cast<double>(aps.size());
}

std::vector<PrPoint> pr_curve(std::span<const ItemId> ranked, const std::vector<ItemId>& relevant) {
  check_relevant(relevant);
  std::vector<PrPoint> curve;
  curve.reserve(ranked.size());
  std::size_t hits = 0;
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    hits += contains(relevant, ranked[i]);
    curve.push_back({static_cast<double>(hits) / static_cast<double>(relevant.size()),
                     static_cast<double>(hits) / static_cast<double>(i + 1)});
  }
  return curve;
}

Metrics compute_metrics(const std::vector<std::vector<ItemId>>& rankings, const dataset::GroundTruth& truth,
                        std::span<const std::size_t> ks, std::size_t pr_depth) {
  if (rankings.size() != truth.relevant.size()) throw Error("compute_metrics: ranking/ground-truth count mismatch");
  Metrics m;
  std::vector<double> aps;
  std::vector<double> pr_recall(pr_depth, 0.0);
  std::vector<double> pr_precision(pr_depth, 0.0);
  for (std::size_t q = 0; q < rankings.size(); ++q) {
    const auto& rel = truth.relevant[q];
    if (rel.empty()) {
      ++m.skipped_queries;
      continue;
    }
    ++m.valid_queries;
    const auto& ranked = rankings[q];
    for (std::size_t k : ks) {
      m.precision_at[k] += precision_at_k(ranked, rel, k);
      m.recall_at[k] += recall_at_k(ranked, rel, k);
      m.ap_at[k] += average_precision(ranked, rel, k);
    }
    aps.push_back(average_precision(ranked, rel));
    std::size_t hits = 0;
    for (std::size_t i = 0; i < pr_depth; ++i) {
      if (i < ranked.size()) hits += contains(rel, ranked[i]);
      pr_recall[i] += static_cast<double>(hits) / static_cast<double>(rel.size());
      pr_precision[i] += static_cast<double>(hits) / static_cast<double>(i + 1);
    }
  }
  if (m.valid_queries == 0) throw Error("no query has a non-empty relevant set");
  const auto count = static_cast<double>(m.valid_queries);
  for (auto* table : {&m.precision_at, &m.recall_at, &m.ap_at}) {
    for (auto& [k, v] : *table) v /= count;
  }
  m.map_score = mean_average_precision(aps);
  m.pr_curve.resize(pr_depth);
  for (std::size_t i = 0; i < pr_depth; ++i) m.pr_curve[i] = {pr_recall[i] / count, pr_precision[i] / count};
  return m;
}

std::vector<ScoredId> brute_force_rank_euclidean(const Matrix& data, std::span<const float> query, std::size_t k) {
  if (query.size() != static_cast<std::size_t>(data.cols())) throw Error("brute force: dimension mismatch");
  std::vector<ScoredId> all(static_cast<std::size_t>(data.rows()));
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    double d2 = 0.0;
    for (Eigen::Index j = 0; j < data.cols(); ++j) {
      const double diff = static_cast<double>(data(i, j)) - static_cast<double>(query[static_cast<std::size_t>(j)]);
      d2 += diff * diff;
    }
    all[static_cast<std::size_t>(i)] = {static_cast<ItemId>(i), std::sqrt(d2)};
  }
  return take_sorted(std::move(all), k);
}

std::vector<ScoredId> brute_force_rank_hamming(const PackedCodes& codes, std::span<const std::uint64_t> query,
                                               std::size_t k) {
  std::vector<ScoredId> all(codes.size());
  for (std::size_t i = 0; i < codes.size(); ++i) {
    std::size_t d = 0;
    for (std::size_t b = 0; b < codes.bits(); ++b) {
      const bool qb = (query[b / 64] >> (b % 64)) & 1u;
      d += codes.bit(i, b) != qb;
    }
    all[i] = {static_cast<ItemId>(i), static_cast<double>(d)};
  }
  return take_sorted(std::move(all), k);
}

std::vector<ScoredId> brute_force_rank_weighted(const PackedCodes& codes, std::span<const std::uint64_t> query,
                                                std::span<const double> weights, std::size_t k) {
  if (weights.size() != codes.bits()) throw Error("brute force: weight length mismatch");
  std::vector<ScoredId> all(codes.size());
  for (std::size_t i = 0; i < codes.size(); ++i) {
    double d = 0.0;
    for (std::size_t b = 0; b < codes.bits(); ++b) {
      const bool qb = (query[b / 64] >> (b % 64)) & 1u;
      if (codes.bit(i, b) != qb) d += weights[b];
    }
    all[i] = {static_cast<ItemId>(i), d};
  }
  return take_sorted(std::move(all), k);
}

}  // namespace mvhash::eval
