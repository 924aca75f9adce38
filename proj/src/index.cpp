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

#include "mvhash/index.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <memory>
#include <sstream>

#include <json.hpp>
#include <openssl/evp.h>

#include "mvhash/binary_io.hpp"

namespace mvhash::index {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kBundleVersion = 1;

std::string view_file(std::size_t m, const char* kind) { return "view" + std::to_string(m) + "." + kind; }

}  // namespace

Matrix gather_rows(const Matrix& data, const std::vector<ItemId>& rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), data.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r] >= data.rows()) throw Error("row " + std::to_string(rows[r]) + " out of range");
    out.row(static_cast<Eigen::Index>(r)) = data.row(rows[r]);
  }
  return out;
}

qrank::Table build_table(const dataset::VectorView& view, const dataset::DatasetSplit& split,
                         const BuildOptions& options) {
  if (split.train_idx.empty()) throw Error("view " + std::to_string(view.view_id) + ": empty training split");
  if (split.database_idx.empty()) throw Error("view " + std::to_string(view.view_id) + ": empty database");
  if (!std::is_sorted(split.database_idx.begin(), split.database_idx.end())) {
    throw Error("database ids must be ascending");
  }
  const std::uint64_t seed = options.seed + 1000003ull * static_cast<std::uint64_t>(view.view_id);
  qrank::Table table;
  table.view_id = view.view_id;

  const Matrix train = gather_rows(view.data, split.train_idx);
  table.model = hashing::train(options.family, train, {options.bits, seed, options.itq_iters});
  const PackedCodes train_codes = hashing::encode(table.model, train);
  table.independence = qrank::independence_matrix(train_codes, options.lambda, options.mi_pseudocount);

  const Matrix database = gather_rows(view.data, split.database_idx);
  table.codes = hashing::encode(table.model, database);
  table.ids = split.database_idx;

  anchors::AnchorOptions anchor_options = options.anchors;
  anchor_options.seed = seed;
  table.anchors = anchors::build_anchors(database, anchor_options, &table.model);
  return table;
}

MultiTableIndex build_index(const dataset::MultiViewDataset& data, const dataset::DatasetSplit& split,
                            const BuildOptions& options) {
  MultiTableIndex index;
  index.train_ids = split.train_idx;
  index.query_ids = split.query_idx;
  index.database_ids = split.database_idx;
  index.tables.resize(data.view_count());
  for (std::size_t m = 0; m < data.view_count(); ++m) {
    try {
      index.tables[m] = build_table(data.view(m), split, options);
    } catch (const Error& e) {
      throw Error("view " + std::to_string(m) + ": " + e.what());
    }
  }
  return index;
}

std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "' for hashing");
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) throw Error("SHA-256 init failed");
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof(buf));
    if (in.gcount() > 0 && EVP_DigestUpdate(ctx.get(), buf, static_cast<std::size_t>(in.gcount())) != 1) {
      throw Error("SHA-256 update failed");
    }
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_DigestFinal_ex(ctx.get(), digest, &len) != 1) throw Error("SHA-256 final failed");
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int{digest[i]};
  return hex.str();
}

void save_ids(const std::string& path, const std::vector<ItemId>& ids) {
  io::Writer out(path);
  out.magic("MVID");
  out.put(static_cast<std::uint32_t>(ids.size()));
  out.put_array(std::span<const ItemId>(ids));
  out.close();
}

std::vector<ItemId> load_ids(const std::string& path) {
  io::Reader in(path);
  in.expect_magic("MVID");
  const auto n = in.get<std::uint32_t>();
  if (in.remaining() != std::uint64_t{n} * sizeof(ItemId)) throw Error("'" + path + "': id payload mismatch");
  std::vector<ItemId> ids(n);
  in.get_array(std::span<ItemId>(ids));
  return ids;
}

void save_index(const MultiTableIndex& index, const std::string& dir) {
  fs::create_directories(dir);
  auto path = [&](const std::string& name) { return (fs::path(dir) / name).string(); };
  json manifest;
  manifest["format"] = "mvhash-index";
  manifest["version"] = kBundleVersion;

  json files = json::object();
  auto record = [&](const std::string& name) { files[name] = sha256_file(path(name)); };

  save_ids(path("train.ids"), index.train_ids);
  save_ids(path("query.ids"), index.query_ids);
  save_ids(path("database.ids"), index.database_ids);
  for (const char* name : {"train.ids", "query.ids", "database.ids"}) record(name);

  json views = json::array();
  for (std::size_t m = 0; m < index.tables.size(); ++m) {
    const auto& t = index.tables[m];
    hashing::save_model(path(view_file(m, "model")), t.model);
    save_codes(path(view_file(m, "codes")), t.codes);
    anchors::save_anchors(path(view_file(m, "anchors")), t.anchors);
    save_codes(path(view_file(m, "anchor_codes")), t.anchors.anchor_codes);
    qrank::save_independence(path(view_file(m, "indep")), t.independence);
    json v;
    v["view_id"] = t.view_id;
    v["dim"] = t.model.dim();
    v["bits"] = t.model.bits();
    v["family"] = hashing::family_name(t.model.family());
    v["anchors"] = t.anchors.k();
    v["s_nn"] = t.anchors.s_nn;
    json vf;
    for (const char* kind : {"model", "codes", "anchors", "anchor_codes", "indep"}) {
      vf[kind] = view_file(m, kind);
      record(view_file(m, kind));
    }
    v["files"] = vf;
    views.push_back(v);
  }
  manifest["views"] = views;
  manifest["sha256"] = files;

  std::ofstream out(path("manifest.json"), std::ios::trunc);
  if (!out) throw Error("cannot write manifest in '" + dir + "'");
  out << manifest.dump(2) << '\n';
  if (!out) throw Error("manifest write failed in '" + dir + "'");
}

MultiTableIndex load_index(const std::string& dir) {
  auto path = [&](const std::string& name) { return (fs::path(dir) / name).string(); };
  std::ifstream in(path("manifest.json"));
  if (!in) throw Error("no manifest.json in '" + dir + "'");
  json manifest;
  try {
    manifest = json::parse(in);
  } catch (const json::exception& e) {
    throw Error("manifest in '" + dir + "' is not valid JSON: " + e.what());
  }
  if (manifest.value("format", "") != "mvhash-index") throw Error("'" + dir + "' is not an mvhash index bundle");
  if (manifest.value("version", 0) != kBundleVersion) throw Error("unsupported index bundle version");

  const auto& hashes = manifest.at("sha256");
  for (const auto& [name, digest] : hashes.items()) {
    if (sha256_file(path(name)) != digest.get<std::string>()) {
      throw Error("'" + name + "' in '" + dir + "' does not match its manifest hash");
    }
  }

  MultiTableIndex index;
  index.train_ids = load_ids(path("train.ids"));
  index.query_ids = load_ids(path("query.ids"));
  index.database_ids = load_ids(path("database.ids"));
  for (const auto& v : manifest.at("views")) {
    const auto& f = v.at("files");
    qrank::Table t;
    t.view_id = v.at("view_id").get<int>();
    try {
      t.model = hashing::load_model(path(f.at("model").get<std::string>()));
      t.codes = load_codes(path(f.at("codes").get<std::string>()));
      t.anchors = anchors::load_anchors(path(f.at("anchors").get<std::string>()));
      t.anchors.anchor_codes = load_codes(path(f.at("anchor_codes").get<std::string>()));
      t.anchors.validate();
      t.independence = qrank::load_independence(path(f.at("indep").get<std::string>()));
    } catch (const Error& e) {
      throw Error("view " + std::to_string(t.view_id) + ": " + e.what());
    }
    t.ids = index.database_ids;
    if (t.codes.size() != t.ids.size()) throw Error("view " + std::to_string(t.view_id) + ": code count mismatch");
    index.tables.push_back(std::move(t));
  }
  return index;
}

}  // namespace mvhash::index
