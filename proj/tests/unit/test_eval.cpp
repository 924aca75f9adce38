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

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "mvhash/eval.hpp"
#include "mvhash/hashing.hpp"

using namespace mvhash;
using namespace mvhash::eval;

namespace {

// Straightforward AP: walk the list, keep a hit counter, divide at the end.
double oracle_ap(const std::vector<ItemId>& ranked, const std::vector<ItemId>& relevant, std::size_t k) {
  double sum = 0.0;
  int hits = 0;
  for (std::size_t i = 0; i < std::min(k, ranked.size()); ++i) {
    if (std::find(relevant.begin(), relevant.end(), ranked[i]) != relevant.end()) {
      ++hits;
      sum += hits / static_cast<double>(i + 1);
    }
  }
  return sum / static_cast<double>(std::min(relevant.size(), k));
}

std::vector<ItemId> shuffled(std::size_t n, std::mt19937_64& rng) {
  std::vector<ItemId> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = static_cast<ItemId>(i);
  std::shuffle(v.begin(), v.end(), rng);
  return v;
}

}  // namespace

TEST_CASE("precision and recall at k") {
  const std::vector<ItemId> ranked{4, 2, 9, 7, 1, 3, 5, 0, 8, 6};
  CHECK(precision_at_k(ranked, {1, 2, 4, 7, 9}, 5) == 1.0);
  const std::vector<ItemId> rel{2, 3, 7, 8, 11, 12, 13, 14, 15, 16};
  CHECK(recall_at_k(ranked, rel, 10) == doctest::Approx(0.4));
  // Missing tail counts as non-relevant.
  CHECK(precision_at_k(std::vector<ItemId>{2, 3}, rel, 4) == 0.5);
  CHECK(recall_at_k(std::vector<ItemId>{2, 3}, rel, 4) == doctest::Approx(0.2));
}

TEST_CASE("average precision examples") {
  CHECK(average_precision(std::vector<ItemId>{3, 1, 2}, {1, 2, 3}) == 1.0);
  CHECK(average_precision(std::vector<ItemId>{5, 1, 6, 7, 8}, {1}, 5) == 0.5);
  // Contiguous relevant block at the top is perfect even when k < |relevant|.
  CHECK(average_precision(std::vector<ItemId>{1, 2, 3, 9}, {1, 2, 3, 4, 5, 6}, 3) == 1.0);
  CHECK(average_precision(std::vector<ItemId>{9, 8}, {1}, 2) == 0.0);
}

TEST_CASE("average precision matches a second implementation") {
  std::mt19937_64 rng(8);
  std::bernoulli_distribution coin(0.3);
  std::uniform_int_distribution<std::size_t> len(1, 200);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = len(rng);
    const auto ranked = shuffled(n + 20, rng);
    std::vector<ItemId> partial(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(n));
    std::vector<ItemId> rel;
    for (ItemId i = 0; i < n + 20; ++i) {
      if (coin(rng)) rel.push_back(i);
    }
    if (rel.empty()) rel.push_back(0);
    for (std::size_t k : {std::size_t{1}, std::size_t{5}, std::size_t{10}, std::size_t{100}, n + 20}) {
      const double ap = average_precision(partial, rel, k);
      CHECK(std::abs(ap - oracle_ap(partial, rel, k)) < 1e-12);
      CHECK(ap >= 0.0);
      CHECK(ap <= 1.0);
    }
    const double p = precision_at_k(partial, rel, 10) * 10;
    CHECK(p == std::round(p));
    const double r = recall_at_k(partial, rel, 10) * static_cast<double>(rel.size());
    CHECK(std::abs(r - std::round(r)) < 1e-9);
  }
}

TEST_CASE("mean average precision") {
  const std::vector<double> aps{1.0, 0.0};
  CHECK(mean_average_precision(aps) == 0.5);
  CHECK_THROWS_AS(mean_average_precision(std::vector<double>{}), Error);
}

TEST_CASE("pr curve") {
  const auto perfect = pr_curve(std::vector<ItemId>{1, 2, 3}, {1, 2, 3});
  REQUIRE(perfect.size() == 3);
  for (const auto& p : perfect) CHECK(p.precision == 1.0);
  CHECK(perfect.back().recall == 1.0);

  std::mt19937_64 rng(2);
  const auto ranked = shuffled(100, rng);
  const std::vector<ItemId> rel{3, 10, 20, 33, 47, 58, 71, 99};
  const auto curve = pr_curve(ranked, rel);
  REQUIRE(curve.size() == 100);
  for (std::size_t i = 1; i < curve.size(); ++i) CHECK(curve[i].recall >= curve[i - 1].recall);
  CHECK(curve.back().recall == 1.0);
  CHECK(curve.back().precision == doctest::Approx(0.08));
}

TEST_CASE("compute_metrics averages over valid queries") {
  dataset::GroundTruth truth;
  truth.relevant = {{1, 2}, {}, {7}};
  const std::vector<std::vector<ItemId>> rankings{{1, 2, 3}, {1}, {5, 7}};
  const std::vector<std::size_t> ks{1, 2};
  const auto m = compute_metrics(rankings, truth, ks, 3);
  CHECK(m.valid_queries == 2);
  CHECK(m.skipped_queries == 1);
  CHECK(m.precision_at.at(1) == 0.5);
  CHECK(m.recall_at.at(2) == 1.0);
  CHECK(m.ap_at.at(2) == doctest::Approx((1.0 + 0.5) / 2));
  CHECK(m.map_score == doctest::Approx(0.75));
  REQUIRE(m.pr_curve.size() == 3);
  CHECK(m.pr_curve[0].recall == doctest::Approx(0.25));
  CHECK(m.pr_curve[2].precision == doctest::Approx((2.0 / 3 + 1.0 / 3) / 2));
  for (const auto& [k, v] : m.recall_at) CHECK(v <= 1.0);
  CHECK(m.recall_at.at(1) <= m.recall_at.at(2));

  dataset::GroundTruth none;
  none.relevant = {{}};
  CHECK_THROWS_AS(compute_metrics({{1}}, none, ks, 0), Error);
  CHECK_THROWS_AS(compute_metrics({}, truth, ks, 0), Error);
}

TEST_CASE("euclidean oracle") {
  Matrix data(6, 1);
  data << 0.0f, 5.0f, -1.0f, 2.5f, 3.0f, 2.0f;
  const float q = 2.4f;
  const auto r = brute_force_rank_euclidean(data, std::span(&q, 1), 6);
  CHECK(ids_of(r) == std::vector<ItemId>{3, 5, 4, 0, 1, 2});

  // The query itself is its own nearest neighbour.
  std::mt19937_64 rng(1);
  std::normal_distribution<float> g;
  Matrix x(50, 7);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = g(rng);
  for (Eigen::Index i = 0; i < 50; ++i) {
    const auto top = brute_force_rank_euclidean(x, {x.data() + i * 7, 7}, 1);
    CHECK(top[0].id == static_cast<ItemId>(i));
    CHECK(top[0].score == 0.0);
  }
}

TEST_CASE("hamming oracle agrees with the library ranker") {
  std::mt19937_64 rng(4);
  std::bernoulli_distribution coin(0.5);
  PackedCodes codes(5000, 48);
  for (std::size_t i = 0; i < codes.size(); ++i) {
    for (std::size_t b = 0; b < 48; ++b) codes.set_bit(i, b, coin(rng));
  }
  for (std::size_t q = 0; q < 10; ++q) {
    const auto query = codes.row(q * 311);
    const auto want = brute_force_rank_hamming(codes, query, 100);
    CHECK(hashing::hamming_rank(codes, query, 100) == want);
    CHECK(want[0].id == static_cast<ItemId>(q * 311));
    CHECK(std::is_sorted(want.begin(), want.end(), ascending_score));
  }
}

TEST_CASE("weighted oracle with unit weights equals hamming") {
  std::mt19937_64 rng(6);
  std::bernoulli_distribution coin(0.5);
  PackedCodes codes(300, 20);
  for (std::size_t i = 0; i < codes.size(); ++i) {
    for (std::size_t b = 0; b < 20; ++b) codes.set_bit(i, b, coin(rng));
  }
  const std::vector<double> w(20, 1.0);
  const auto q = codes.row(17);
  CHECK(brute_force_rank_weighted(codes, q, w, 300) == brute_force_rank_hamming(codes, q, 300));
}
