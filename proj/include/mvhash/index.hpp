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
#include <string>
#include <vector>

#include "mvhash/anchors.hpp"
#include "mvhash/dataset.hpp"
#include "mvhash/hashing.hpp"
#include "mvhash/qrank.hpp"

namespace mvhash::index {

struct BuildOptions {
  hashing::HashFamily family = hashing::HashFamily::kLsh;
  std::size_t bits = 48;
  std::size_t itq_iters = 50;
  anchors::AnchorOptions anchors;
  double lambda = 1.0;
  double mi_pseudocount = qrank::kDefaultPseudocount;
  std::uint64_t seed = 1;
};

/// One table per view over the same database split.
struct MultiTableIndex {
  std::vector<qrank::Table> tables;
  std::vector<ItemId> train_ids;
  std::vector<ItemId> query_ids;
  std::vector<ItemId> database_ids;
};

/// Copies the listed rows.
Matrix gather_rows(const Matrix& data, const std::vector<ItemId>& rows);

/// Offline stage for one view: hash functions trained on the train split,
/// database codes, anchors from the database, and the independence matrix
/// over the training codes.
qrank::Table build_table(const dataset::VectorView& view, const dataset::DatasetSplit& split,
                         const BuildOptions& options);

MultiTableIndex build_index(const dataset::MultiViewDataset& data, const dataset::DatasetSplit& split,
                            const BuildOptions& options);

/// Writes the bundle directory: one file per artifact plus manifest.json
/// listing every file with its SHA-256.
void save_index(const MultiTableIndex& index, const std::string& dir);

/// Loads a bundle, verifying every file hash listed in the manifest.
MultiTableIndex load_index(const std::string& dir);

/// Lowercase hex SHA-256 of a file's bytes.
std::string sha256_file(const std::string& path);

// Id list file: "MVID", u32 count, count u32 ids.
void save_ids(const std::string& path, const std::vector<ItemId>& ids);
std::vector<ItemId> load_ids(const std::string& path);

}  // namespace mvhash::index
