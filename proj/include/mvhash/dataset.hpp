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
#include <optional>
#include <string>
#include <vector>

#include "mvhash/common.hpp"

namespace mvhash::dataset {

enum class VectorFormat { kBinary, kCsv };

/// Parses "binary" / "csv"; throws Error otherwise.
VectorFormat parse_format(const std::string& name);

/// Raised by the loaders. 'row' is the offending data row when known.
class LoadError : public Error {
 public:
  LoadError(const std::string& message, std::optional<std::size_t> row = std::nullopt);
  std::optional<std::size_t> row() const { return row_; }

 private:
  std::optional<std::size_t> row_;
};

/// One feature representation of the N items.
struct VectorView {
  int view_id = 0;
  Matrix data;

  std::size_t rows() const { return static_cast<std::size_t>(data.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(data.cols()); }
};

/// Tags per item. Single-label data has exactly one tag per item.
using Labels = std::vector<std::vector<std::int32_t>>;

class MultiViewDataset {
 public:
  MultiViewDataset() = default;
  /// Throws Error if the views disagree on N, or labels are present with the
  /// wrong length.
  MultiViewDataset(std::vector<VectorView> views, std::optional<Labels> labels = std::nullopt);

  std::size_t size() const { return n_; }
  std::size_t view_count() const { return views_.size(); }
  const VectorView& view(std::size_t m) const { return views_.at(m); }
  const std::vector<VectorView>& views() const { return views_; }
  const std::optional<Labels>& labels() const { return labels_; }

 private:
  std::vector<VectorView> views_;
  std::optional<Labels> labels_;
  std::size_t n_ = 0;
};

// Binary vector file: "MVH1", u32 N, u32 D, then N*D float32, row-major,
// little-endian.
VectorView load_vectors(const std::string& path, VectorFormat format, int view_id = 0);
void save_vectors(const std::string& path, const Matrix& data, VectorFormat format);

/// Parses CSV text ('.' decimals, ',' separators). Exposed for tests.
Matrix parse_csv(const std::string& text);

/// One line per item; a line holds one integer, or several separated by
/// commas/whitespace for multi-label items.
Labels load_labels(const std::string& path);
void save_labels(const std::string& path, const Labels& labels);

struct DatasetSplit {
  std::vector<ItemId> train_idx;
  std::vector<ItemId> query_idx;
  /// Every item that is not a query (includes the training items).
  std::vector<ItemId> database_idx;
  std::uint64_t seed = 0;
};

/// Random disjoint train/query split; all three lists are sorted ascending.
DatasetSplit make_split(std::size_t n, std::size_t n_train, std::size_t n_query, std::uint64_t seed);

struct GroundTruth {
  /// relevant[q] = sorted database ids sharing at least one tag with query q.
  std::vector<std::vector<ItemId>> relevant;
  /// Queries with no relevant item; excluded from MAP.
  std::size_t empty_queries = 0;
};

GroundTruth ground_truth(const Labels& labels, const std::vector<ItemId>& query_idx,
                         const std::vector<ItemId>& database_idx);

struct SyntheticSpec {
  std::size_t clusters = 10;
  std::size_t per_cluster = 200;
  std::size_t views = 2;
  std::size_t dim = 32;
  double noise = 0.3;
  std::uint64_t seed = 1;
};

/// Gaussian clusters shared by all views. Each view applies its own random
/// rotation to independently noised copies of the latent points, so the
/// views carry complementary noise over one cluster structure. Labels are
/// cluster ids; item i belongs to cluster i / per_cluster.
MultiViewDataset gen_synthetic(const SyntheticSpec& spec);

}  // namespace mvhash::dataset
