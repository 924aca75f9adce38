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
#include <set>

#include "mvhash/dataset.hpp"
#include "test_util.hpp"

using namespace mvhash;
using namespace mvhash::dataset;
using mvhash::testing::TempDir;

TEST_CASE("csv parsing") {
  const Matrix m = parse_csv("1.0,2.0\n3.0,4.0");
  REQUIRE(m.rows() == 2);
  REQUIRE(m.cols() == 2);
  CHECK(m(0, 0) == 1.0f);
  CHECK(m(0, 1) == 2.0f);
  CHECK(m(1, 0) == 3.0f);
  CHECK(m(1, 1) == 4.0f);
}

TEST_CASE("csv rejects nan and names the row") {
  try {
    parse_csv("nan,1.0\n2.0,3.0");
    FAIL("expected a LoadError");
  } catch (const LoadError& e) {
    REQUIRE(e.row().has_value());
    CHECK(*e.row() == 0);
    CHECK(std::string(e.what()).find("row 0") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_csv("1.0,2.0\n3.0"), LoadError);
  CHECK_THROWS_AS(parse_csv("1.0,abc"), LoadError);
}

TEST_CASE("binary and csv round trips") {
  TempDir dir("dataset");
  Matrix m(3, 4);
  for (int i = 0; i < 12; ++i) m.data()[i] = 0.25f * static_cast<float>(i) - 1.0f;
  save_vectors(dir.file("v.mvh"), m, VectorFormat::kBinary);
  save_vectors(dir.file("v.csv"), m, VectorFormat::kCsv);
  CHECK(load_vectors(dir.file("v.mvh"), VectorFormat::kBinary).data == m);
  CHECK(load_vectors(dir.file("v.csv"), VectorFormat::kCsv).data == m);

  // 12 header bytes + 12 floats.
  CHECK(mvhash::testing::read_file(dir.file("v.mvh")).size() == 12 + 12 * 4);
  CHECK(mvhash::testing::read_file(dir.file("v.mvh")).substr(0, 4) == "MVH1");
}

TEST_CASE("truncated and mislabelled binary files are rejected") {
  TempDir dir("dataset_bad");
  Matrix m = Matrix::Ones(4, 2);
  save_vectors(dir.file("v.mvh"), m, VectorFormat::kBinary);
  auto bytes = mvhash::testing::read_file(dir.file("v.mvh"));
  mvhash::testing::write_file(dir.file("short.mvh"), bytes.substr(0, bytes.size() - 3));
  CHECK_THROWS_AS(load_vectors(dir.file("short.mvh"), VectorFormat::kBinary), Error);
  bytes[0] = 'X';
  mvhash::testing::write_file(dir.file("magic.mvh"), bytes);
  CHECK_THROWS_AS(load_vectors(dir.file("magic.mvh"), VectorFormat::kBinary), Error);
  CHECK_THROWS_AS(load_vectors(dir.file("missing.mvh"), VectorFormat::kBinary), Error);
}

TEST_CASE("labels round trip, including multi-label rows") {
  TempDir dir("labels");
  const Labels labels{{0}, {3, 1}, {2}};
  save_labels(dir.file("l.txt"), labels);
  // Tags are a set: stored sorted and deduplicated.
  CHECK(load_labels(dir.file("l.txt")) == Labels{{0}, {1, 3}, {2}});
  mvhash::testing::write_file(dir.file("m.txt"), "4\n1 2\n7,8\n");
  const Labels parsed = load_labels(dir.file("m.txt"));
  REQUIRE(parsed.size() == 3);
  CHECK(parsed[1] == std::vector<std::int32_t>{1, 2});
  CHECK(parsed[2] == std::vector<std::int32_t>{7, 8});
}

TEST_CASE("view count mismatch is a constructor error") {
  std::vector<VectorView> views{{0, Matrix::Zero(3, 2)}, {1, Matrix::Zero(4, 2)}};
  CHECK_THROWS_AS(MultiViewDataset(views, std::nullopt), Error);
  std::vector<VectorView> ok{{0, Matrix::Zero(3, 2)}};
  CHECK_THROWS_AS(MultiViewDataset(ok, Labels{{0}, {1}}), Error);
}

TEST_CASE("split sizes follow the evaluation protocol counts") {
  const auto s = make_split(70000, 5000, 3000, 7);
  CHECK(s.train_idx.size() == 5000);
  CHECK(s.query_idx.size() == 3000);
  CHECK(s.database_idx.size() == 67000);
}

TEST_CASE("split invariants and determinism") {
  const auto a = make_split(1000, 300, 100, 3);
  const auto b = make_split(1000, 300, 100, 3);
  const auto c = make_split(1000, 300, 100, 4);
  CHECK(a.train_idx == b.train_idx);
  CHECK(a.query_idx == b.query_idx);
  CHECK(a.query_idx != c.query_idx);
  std::set<ItemId> q(a.query_idx.begin(), a.query_idx.end());
  for (ItemId t : a.train_idx) CHECK(q.count(t) == 0);
  for (ItemId d : a.database_idx) CHECK(q.count(d) == 0);
  CHECK(a.database_idx.size() + a.query_idx.size() == 1000);
  for (const auto* list : {&a.train_idx, &a.query_idx, &a.database_idx}) {
    CHECK(std::is_sorted(list->begin(), list->end()));
    for (ItemId i : *list) CHECK(i < 1000);
  }
}

TEST_CASE("split boundary: everything is training data") {
  const auto s = make_split(10, 10, 0, 5);
  CHECK(s.train_idx.size() == 10);
  CHECK(s.query_idx.empty());
  CHECK(s.database_idx.size() == 10);
  CHECK_THROWS_AS(make_split(10, 8, 3, 5), Error);
}

TEST_CASE("ground truth by shared label") {
  const Labels single{{0}, {0}, {1}};
  auto gt = ground_truth(single, {0}, {1, 2});
  REQUIRE(gt.relevant.size() == 1);
  CHECK(gt.relevant[0] == std::vector<ItemId>{1});
  CHECK(gt.empty_queries == 0);

  const Labels unique{{5}, {0}, {1}};
  gt = ground_truth(unique, {0}, {1, 2});
  CHECK(gt.relevant[0].empty());
  CHECK(gt.empty_queries == 1);

  const Labels multi{{0, 1}, {1, 2}, {3}};
  gt = ground_truth(multi, {0}, {1, 2});
  CHECK(gt.relevant[0] == std::vector<ItemId>{1});
}

TEST_CASE("ground truth is independent of database order") {
  const Labels labels{{0}, {1}, {0}, {1}, {0}};
  const auto a = ground_truth(labels, {0}, {1, 2, 3, 4});
  const auto b = ground_truth(labels, {0}, {4, 3, 2, 1});
  CHECK(a.relevant == b.relevant);
}

TEST_CASE("synthetic data shape contract") {
  const auto d = gen_synthetic({10, 200, 2, 32, 0.3, 9});
  CHECK(d.size() == 2000);
  CHECK(d.view_count() == 2);
  CHECK(d.view(0).dim() == 32);
  REQUIRE(d.labels().has_value());
  std::set<std::int32_t> tags;
  for (const auto& l : *d.labels()) tags.insert(l.at(0));
  CHECK(tags.size() == 10);
  CHECK(*tags.begin() == 0);
  CHECK(*tags.rbegin() == 9);
}

TEST_CASE("synthetic data without noise collapses each cluster") {
  const auto d = gen_synthetic({3, 5, 2, 8, 0.0, 2});
  for (std::size_t m = 0; m < 2; ++m) {
    const Matrix& x = d.view(m).data;
    for (int c = 0; c < 3; ++c) {
      for (int i = 1; i < 5; ++i) CHECK((x.row(c * 5 + i) - x.row(c * 5)).norm() < 1e-5f);
    }
    CHECK((x.row(0) - x.row(5)).norm() > 1e-2f);
  }
}

TEST_CASE("synthetic data depends on the seed only") {
  const auto a = gen_synthetic({4, 10, 2, 6, 0.5, 1});
  const auto b = gen_synthetic({4, 10, 2, 6, 0.5, 1});
  const auto c = gen_synthetic({4, 10, 2, 6, 0.5, 2});
  CHECK(a.view(1).data == b.view(1).data);
  CHECK(a.view(0).data != c.view(0).data);
  CHECK(a.view(0).data.rows() == c.view(0).data.rows());
  // The two views are different rotations of the structure.
  CHECK(a.view(0).data != a.view(1).data);
}
