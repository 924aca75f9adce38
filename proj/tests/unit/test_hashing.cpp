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
#include <numeric>
#include <random>

#include "mvhash/dataset.hpp"
#include "mvhash/eval.hpp"
#include "mvhash/hashing.hpp"
#include "test_util.hpp"

using namespace mvhash;
using namespace mvhash::hashing;

namespace {

Matrix gaussian(std::size_t n, std::size_t d, std::uint64_t seed, double anisotropy = 0.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> g;
  Matrix m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = g(rng) * static_cast<float>(1.0 + anisotropy * j);
  }
  return m;
}

PackedCodes random_codes(std::size_t n, std::size_t bits, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  PackedCodes c(n, bits);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < bits; ++k) c.set_bit(i, k, rng() & 1u);
  }
  return c;
}

std::uint32_t naive_hamming(const PackedCodes& c, std::size_t i, std::size_t j) {
  std::uint32_t d = 0;
  for (std::size_t k = 0; k < c.bits(); ++k) d += c.bit(i, k) != c.bit(j, k);
  return d;
}

}  // namespace

TEST_CASE("lsh training is deterministic for a fixed seed") {
  const Matrix x = gaussian(200, 16, 1);
  const auto a = train(HashFamily::kLsh, x, {48, 5, 50});
  const auto b = train(HashFamily::kLsh, x, {48, 5, 50});
  const auto c = train(HashFamily::kLsh, x, {48, 6, 50});
  CHECK(a.projection() == b.projection());
  CHECK(a.mean() == b.mean());
  CHECK(a.projection() != c.projection());
  CHECK(encode(a, x) == encode(b, x));
}

TEST_CASE("itq rotation is orthogonal") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const Matrix x = gaussian(500, 24, seed, 0.3);
    const auto model = train(HashFamily::kItq, x, {16, seed, 50});
    const Eigen::MatrixXd r = model.rotation();
    const double err = (r.transpose() * r - Eigen::MatrixXd::Identity(16, 16)).cwiseAbs().maxCoeff();
    CHECK(err < 1e-6);
  }
}

TEST_CASE("itq quantization loss never increases") {
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    const Matrix x = gaussian(300 + 50 * seed, 12 + seed, seed, 0.2 * static_cast<double>(seed));
    std::vector<double> loss;
    train(HashFamily::kItq, x, {8, seed, 30}, &loss);
    REQUIRE(loss.size() == 31);
    for (std::size_t t = 1; t < loss.size(); ++t) CHECK(loss[t] <= loss[t - 1] * (1 + 1e-12) + 1e-9);
    CHECK(loss.back() < loss.front());
  }
}

TEST_CASE("encode: identity projection and the zero tie") {
  HashModel model(HashFamily::kLsh, Eigen::VectorXd::Zero(2), Eigen::MatrixXd::Identity(2, 2),
                  Eigen::MatrixXd::Identity(2, 2));
  Matrix x(2, 2);
  x << 1.0f, -2.0f, 0.0f, 0.0f;
  const auto codes = encode(model, x);
  CHECK(codes.bit(0, 0) == true);
  CHECK(codes.bit(0, 1) == false);
  CHECK(codes.bit(1, 0) == true);
  CHECK(codes.bit(1, 1) == true);
}

TEST_CASE("encoded bits reproduce the sign of the projection") {
  const Matrix x = gaussian(100, 10, 4);
  for (HashFamily f : {HashFamily::kLsh, HashFamily::kPcah, HashFamily::kItq}) {
    // Principal-direction families are bounded by the dimension.
    const std::size_t bits = f == HashFamily::kLsh ? 70 : 8;
    const auto model = train(f, x, {bits, 4, 10});
    const auto codes = encode(model, x);
    CHECK(codes.bits() == bits);
    CHECK(codes.words_per_item() == (bits + 63) / 64);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      const auto p = model.project({x.row(i).data(), 10});
      const auto one = encode_one(model, {x.row(i).data(), 10});
      for (std::size_t k = 0; k < bits; ++k) CHECK(codes.bit(static_cast<std::size_t>(i), k) == (p[k] >= 0.0));
      CHECK(std::equal(one.begin(), one.end(), codes.row(static_cast<std::size_t>(i)).begin()));
    }
  }
}

TEST_CASE("pcah bits are balanced on well-conditioned synthetic data") {
  // One cluster: a unimodal Gaussian cloud, where the mean threshold splits
  // every principal direction near the median. Multi-cluster data can put
  // uneven cluster counts on either side of a direction.
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto data = dataset::gen_synthetic({1, 2000, 1, 32, 1.0, seed});
    const Matrix& x = data.view(0).data;
    const auto model = train(HashFamily::kPcah, x, {16, seed, 50});
    const auto codes = encode(model, x);
    for (std::size_t k = 0; k < 16; ++k) {
      std::size_t ones = 0;
      for (std::size_t i = 0; i < codes.size(); ++i) ones += codes.bit(i, k);
      const double frac = static_cast<double>(ones) / static_cast<double>(codes.size());
      CHECK(frac >= 0.40);
      CHECK(frac <= 0.60);
    }
  }
}

TEST_CASE("rank-deficient data is completed with a warning") {
  Matrix x = gaussian(50, 6, 8);
  x.col(3).setZero();
  x.col(4) = x.col(0);
  x.col(5).setZero();
  std::vector<std::string> warnings;
  set_warning_sink([&](std::string_view m) { warnings.emplace_back(m); });
  const auto model = train(HashFamily::kPcah, x, {6, 1, 50});
  set_warning_sink(nullptr);
  CHECK(!warnings.empty());
  const Eigen::MatrixXd p = model.projection();
  CHECK((p * p.transpose() - Eigen::MatrixXd::Identity(6, 6)).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("hamming distance basics") {
  PackedCodes c(3, 48);
  for (std::size_t k = 0; k < 48; ++k) {
    c.set_bit(0, k, k % 3 == 0);
    c.set_bit(1, k, k % 3 == 0);
    c.set_bit(2, k, k % 3 != 0);
  }
  CHECK(hamming(c, 0, 1) == 0);
  CHECK(hamming(c, 0, 2) == 48);
  const auto r = random_codes(40, 96, 2);
  for (std::size_t i = 0; i < 40; ++i) {
    for (std::size_t j = 0; j < 40; ++j) CHECK(hamming(r, i, j) == naive_hamming(r, i, j));
  }
}

TEST_CASE("hamming is a metric on codes") {
  const auto r = random_codes(25, 33, 3);
  for (std::size_t i = 0; i < 25; ++i) {
    for (std::size_t j = 0; j < 25; ++j) {
      CHECK(hamming(r, i, j) == hamming(r, j, i));
      CHECK((hamming(r, i, j) == 0) == (r.row(i)[0] == r.row(j)[0]));
      for (std::size_t l = 0; l < 25; ++l) CHECK(hamming(r, i, l) <= hamming(r, i, j) + hamming(r, j, l));
    }
  }
}

TEST_CASE("hamming_rank") {
  const auto codes = random_codes(500, 48, 4);
  const auto q5 = std::vector<std::uint64_t>(codes.row(5).begin(), codes.row(5).end());
  auto ranked = hamming_rank(codes, q5, 10);
  REQUIRE(!ranked.empty());
  CHECK(ranked[0].id == 5);
  CHECK(ranked[0].score == 0.0);

  ranked = hamming_rank(codes, q5, 500);
  auto ids = ids_of(ranked);
  std::sort(ids.begin(), ids.end());
  std::vector<ItemId> all(500);
  std::iota(all.begin(), all.end(), 0);
  CHECK(ids == all);

  const auto query = random_codes(1, 48, 99);
  for (std::size_t k : {1u, 7u, 100u, 500u}) {
    const auto fast = hamming_rank(codes, query.row(0), k);
    const auto slow = eval::brute_force_rank_hamming(codes, query.row(0), k);
    REQUIRE(fast.size() == slow.size());
    for (std::size_t i = 0; i < fast.size(); ++i) {
      CHECK(fast[i].id == slow[i].id);
      CHECK(fast[i].score == slow[i].score);
    }
  }
}

TEST_CASE("hamming_rank ties resolve by ascending id") {
  PackedCodes same(9, 20);
  for (std::size_t i = 0; i < 9; ++i) same.set_bit(i, 3, true);
  const auto ranked = hamming_rank(same, same.row(0), 9);
  for (std::size_t i = 0; i < 9; ++i) CHECK(ranked[i].id == i);
}

TEST_CASE("model and code files round trip exactly") {
  mvhash::testing::TempDir dir("hashing");
  const Matrix x = gaussian(120, 9, 5, 0.5);
  for (HashFamily f : {HashFamily::kLsh, HashFamily::kPcah, HashFamily::kItq}) {
    const auto model = train(f, x, {8, 5, 20});
    save_model(dir.file("m.bin"), model);
    const auto back = load_model(dir.file("m.bin"));
    CHECK(back.family() == f);
    CHECK(back.encoder() == model.encoder());
    CHECK(back.mean() == model.mean());
    CHECK(encode(back, x) == encode(model, x));
  }
  const auto codes = random_codes(17, 70, 6);
  save_codes(dir.file("c.bin"), codes);
  CHECK(load_codes(dir.file("c.bin")) == codes);
  CHECK_THROWS_AS(load_model(dir.file("c.bin")), Error);
}

TEST_CASE("principal-direction families reject more bits than dimensions") {
  const Matrix x = gaussian(50, 4, 1);
  CHECK_THROWS_AS(train(HashFamily::kPcah, x, {5, 1, 10}), Error);
  CHECK_THROWS_AS(train(HashFamily::kItq, x, {5, 1, 10}), Error);
  CHECK(train(HashFamily::kLsh, x, {5, 1, 10}).bits() == 5);
}

TEST_CASE("family names") {
  CHECK(parse_family("lsh") == HashFamily::kLsh);
  CHECK(parse_family("pcah") == HashFamily::kPcah);
  CHECK(parse_family("itq") == HashFamily::kItq);
  CHECK(family_name(HashFamily::kItq) == "itq");
  CHECK_THROWS_AS(parse_family("sh"), Error);
}
