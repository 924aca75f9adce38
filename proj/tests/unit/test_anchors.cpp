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
#include <set>

#include "mvhash/anchors.hpp"
#include "mvhash/hashing.hpp"
#include "test_util.hpp"

using namespace mvhash;
using namespace mvhash::anchors;

namespace {

Matrix gaussian(std::size_t n, std::size_t d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> g;
  Matrix m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = g(rng);
  return m;
}

std::span<const float> row(const Matrix& m, Eigen::Index i) {
  return {m.data() + i * m.cols(), static_cast<std::size_t>(m.cols())};
}

double row_sum(const SparseRow& r) {
  double s = 0.0;
  for (double v : r.value) s += v;
  return s;
}

}  // namespace

TEST_CASE("300 anchors from a 60000-point database") {
  const Matrix x = gaussian(60000, 8, 1);
  AnchorOptions o;
  o.k = 300;
  o.s_nn = 5;
  o.seed = 3;
  const auto model = build_anchors(x, o);
  CHECK(model.k() == 300);
  CHECK(model.dim() == 8);
  CHECK(model.anchor_embedding.size() == 300);
  CHECK(model.bandwidth > 0.0);
  CHECK(model.sigma > 0.0);
  CHECK_NOTHROW(model.validate());
}

TEST_CASE("K = n selects every row once") {
  const Matrix x = gaussian(40, 3, 2);
  AnchorOptions o;
  o.k = 40;
  o.s_nn = 3;
  const auto model = build_anchors(x, o);
  std::multiset<std::vector<float>> a, b;
  for (Eigen::Index i = 0; i < 40; ++i) {
    a.insert({x.row(i).data(), x.row(i).data() + 3});
    b.insert({model.anchors.row(i).data(), model.anchors.row(i).data() + 3});
  }
  CHECK(a == b);
  o.k = 41;
  CHECK_THROWS_AS(build_anchors(x, o), Error);
}

TEST_CASE("kmeans anchors land inside separated clusters") {
  // Five tight boxes far apart; the oracle assigns each anchor to the box that
  // contains it.
  const int clusters = 5;
  Matrix x(clusters * 50, 2);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  for (int c = 0; c < clusters; ++c) {
    for (int i = 0; i < 50; ++i) {
      x(c * 50 + i, 0) = 100.0f * static_cast<float>(c) + u(rng);
      x(c * 50 + i, 1) = -50.0f * static_cast<float>(c) + u(rng);
    }
  }
  AnchorOptions o;
  o.k = clusters;
  o.method = AnchorMethod::kKmeans;
  o.s_nn = 1;
  o.seed = 9;
  const auto model = build_anchors(x, o);
  std::set<int> hit;
  for (Eigen::Index a = 0; a < model.anchors.rows(); ++a) {
    int owner = -1;
    for (int c = 0; c < clusters; ++c) {
      const bool inside = model.anchors(a, 0) >= 100.0f * c && model.anchors(a, 0) <= 100.0f * c + 1.0f &&
                          model.anchors(a, 1) >= -50.0f * c && model.anchors(a, 1) <= -50.0f * c + 1.0f;
      if (inside) owner = c;
    }
    CHECK(owner >= 0);
    hit.insert(owner);
  }
  CHECK(hit.size() == static_cast<std::size_t>(clusters));
}

TEST_CASE("kernel weights normalise kernel values") {
  // Kernel values 3 and 1: distances 0 and 2 bw^2 ln 3.
  const double bw = 0.7;
  const std::vector<double> d2{0.0, 2.0 * bw * bw * std::log(3.0)};
  const auto w = kernel_weights(d2, bw);
  REQUIRE(w.size() == 2);
  CHECK(w[0] == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(w[1] == doctest::Approx(0.25).epsilon(1e-12));
  // Far-away points do not underflow to 0/0.
  const auto far = kernel_weights(std::vector<double>{1e6, 1e6 + 1.0}, 1e-3);
  CHECK(std::isfinite(far[0]));
  CHECK(far[0] + far[1] == doctest::Approx(1.0));
}

TEST_CASE("embedding of an anchor with s_nn = 1 is its indicator") {
  const Matrix x = gaussian(200, 6, 5);
  AnchorOptions o;
  o.k = 20;
  o.s_nn = 1;
  const auto model = build_anchors(x, o);
  for (Eigen::Index j = 0; j < 20; ++j) {
    const auto z = embed(model, row(model.anchors, j));
    REQUIRE(z.nnz() == 1);
    CHECK(z.index[0] == static_cast<std::uint32_t>(j));
    CHECK(z.value[0] == 1.0);
  }
}

TEST_CASE("embedding rows are probability vectors with s_nn entries") {
  const Matrix x = gaussian(500, 10, 6);
  for (std::size_t s : {1u, 2u, 5u, 9u}) {
    AnchorOptions o;
    o.k = 30;
    o.s_nn = s;
    const auto model = build_anchors(x, o);
    for (Eigen::Index i = 0; i < 100; ++i) {
      const auto z = embed(model, row(x, i));
      CHECK(z.nnz() == s);
      CHECK(std::abs(row_sum(z) - 1.0) < 1e-9);
      CHECK(std::is_sorted(z.index.begin(), z.index.end()));
      for (double v : z.value) CHECK(v >= 0.0);
    }
  }
}

TEST_CASE("embedding keeps the nearest anchors") {
  const Matrix x = gaussian(300, 4, 7);
  AnchorOptions o;
  o.k = 25;
  o.s_nn = 4;
  const auto model = build_anchors(x, o);
  for (Eigen::Index i = 0; i < 50; ++i) {
    std::vector<std::pair<double, std::uint32_t>> d;
    for (Eigen::Index j = 0; j < 25; ++j) {
      double s = 0.0;
      for (Eigen::Index c = 0; c < 4; ++c) {
        const double t = double(x(i, c)) - double(model.anchors(j, c));
        s += t * t;
      }
      d.emplace_back(s, static_cast<std::uint32_t>(j));
    }
    std::sort(d.begin(), d.end());
    std::vector<std::uint32_t> expect;
    for (int t = 0; t < 4; ++t) expect.push_back(d[t].second);
    std::sort(expect.begin(), expect.end());
    CHECK(embed(model, row(x, i)).index == expect);
  }
}

TEST_CASE("embedding similarity") {
  SparseRow a{{0, 1}, {0.5, 0.5}};
  SparseRow b{{2, 3}, {0.5, 0.5}};
  CHECK(similarity(a, a, 1.0) == 1.0);
  CHECK(squared_distance(a, b) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(similarity(a, b, 1.0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
  CHECK(similarity(a, b, 1.0) == similarity(b, a, 1.0));
  SparseRow c{{0, 2}, {0.5, 0.5}};
  CHECK(similarity(a, c, 1.0) > similarity(a, b, 1.0));
  CHECK_THROWS_AS(similarity(a, b, 0.0), Error);
}

TEST_CASE("similarity is symmetric and 1 only for identical rows") {
  const Matrix x = gaussian(200, 5, 8);
  AnchorOptions o;
  o.k = 15;
  o.s_nn = 3;
  const auto model = build_anchors(x, o);
  for (Eigen::Index i = 0; i < 30; ++i) {
    const auto zi = embed(model, row(x, i));
    for (Eigen::Index j = 0; j < 30; ++j) {
      const auto zj = embed(model, row(x, j));
      const double s = similarity(zi, zj, model.sigma);
      CHECK(s == similarity(zj, zi, model.sigma));
      CHECK(s > 0.0);
      CHECK(s <= 1.0);
      CHECK((s == 1.0) == (zi.index == zj.index && zi.value == zj.value));
    }
  }
}

TEST_CASE("query neighbor profile") {
  const Matrix x = gaussian(400, 6, 10);
  AnchorOptions o;
  o.k = 40;
  o.s_nn = 5;
  const auto model = build_anchors(x, o);
  for (Eigen::Index i = 0; i < 40; ++i) {
    const auto z = embed(model, row(x, i));
    const auto one = query_neighbor_profile(model, z, 1);
    REQUIRE(one.size() == 1);
    CHECK(one[0].weight == 1.0);

    for (std::size_t l : {3u, 25u, 40u}) {
      const auto p = query_neighbor_profile(model, z, l);
      REQUIRE(p.size() == l);
      double total = 0.0;
      for (const auto& e : p) total += e.weight;
      CHECK(std::abs(total - 1.0) < 1e-9);

      // Oracle: similarity to every landmark, full sort.
      std::vector<std::pair<double, std::uint32_t>> all;
      for (std::uint32_t k = 0; k < 40; ++k) {
        all.emplace_back(-similarity(z, model.anchor_embedding[k], model.sigma), k);
      }
      std::sort(all.begin(), all.end());
      double mass = 0.0;
      for (std::size_t t = 0; t < l; ++t) mass += -all[t].first;
      for (std::size_t t = 0; t < l; ++t) {
        CHECK(p[t].landmark == all[t].second);
        CHECK(p[t].weight == doctest::Approx(-all[t].first / mass).epsilon(1e-12));
      }
    }
  }
  CHECK_THROWS_AS(query_neighbor_profile(model, embed(model, row(x, 0)), 41), Error);
}

TEST_CASE("anchor codes follow the hash model") {
  const Matrix x = gaussian(300, 6, 11);
  const auto hm = hashing::train(hashing::HashFamily::kLsh, x, {24, 1, 50});
  AnchorOptions o;
  o.k = 30;
  const auto model = build_anchors(x, o, &hm);
  CHECK(model.anchor_codes == hashing::encode(hm, model.anchors));
}

TEST_CASE("anchor files round trip") {
  mvhash::testing::TempDir dir("anchors");
  const Matrix x = gaussian(300, 6, 12);
  AnchorOptions o;
  o.k = 30;
  o.s_nn = 4;
  o.method = AnchorMethod::kKmeans;
  const auto model = build_anchors(x, o);
  save_anchors(dir.file("a.bin"), model);
  const auto back = load_anchors(dir.file("a.bin"));
  CHECK(back.anchors == model.anchors);
  CHECK(back.bandwidth == model.bandwidth);
  CHECK(back.sigma == model.sigma);
  CHECK(back.s_nn == 4);
  REQUIRE(back.anchor_embedding.size() == model.anchor_embedding.size());
  for (std::size_t k = 0; k < back.k(); ++k) {
    CHECK(back.anchor_embedding[k].index == model.anchor_embedding[k].index);
    CHECK(back.anchor_embedding[k].value == model.anchor_embedding[k].value);
  }
}

TEST_CASE("invalid anchor models are rejected") {
  AnchorModel m;
  CHECK_THROWS_AS(m.validate(), Error);
  m.anchors = Matrix::Zero(3, 2);
  m.s_nn = 4;
  CHECK_THROWS_AS(m.validate(), Error);
  m.s_nn = 2;
  m.sigma = 0.0;
  CHECK_THROWS_AS(m.validate(), Error);
  CHECK_THROWS_AS(parse_method("grid"), Error);
}
