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

#include "mvhash/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "mvhash/binary_io.hpp"

namespace mvhash::dataset {

namespace {

constexpr std::string_view kVectorMagic = "MVH1";

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

void check_finite(const Matrix& data) {
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    if (!data.row(i).allFinite()) {
      throw LoadError("non-finite value in row " + std::to_string(i), static_cast<std::size_t>(i));
    }
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

VectorFormat parse_format(const std::string& name) {
  if (name == "binary" || name == "binary-f32" || name == "bin") return VectorFormat::kBinary;
  if (name == "csv") return VectorFormat::kCsv;
  throw Error("unknown vector format '" + name + "' (expected binary or csv)");
}

LoadError::LoadError(const std::string& message, std::optional<std::size_t> row)
    : Error(message), row_(row) {}

MultiViewDataset::MultiViewDataset(std::vector<VectorView> views, std::optional<Labels> labels)
    : views_(std::move(views)), labels_(std::move(labels)) {
  if (views_.empty()) throw Error("dataset needs at least one view");
  n_ = views_.front().rows();
  if (n_ == 0) throw Error("dataset views must be non-empty");
  for (std::size_t m = 0; m < views_.size(); ++m) {
    if (views_[m].rows() != n_) {
      throw Error("view " + std::to_string(m) + " has " + std::to_string(views_[m].rows()) +
                  " rows, expected " + std::to_string(n_));
    }
  }
  if (labels_ && labels_->size() != n_) {
    throw Error("label count " + std::to_string(labels_->size()) + " does not match item count " +
                std::to_string(n_));
  }
}

Matrix parse_csv(const std::string& text) {
  std::vector<float> values;
  std::size_t cols = 0;
  std::size_t row = 0;
  std::string_view rest(text);
  while (!rest.empty()) {
    const std::size_t eol = rest.find('\n');
    std::string_view line = trim(rest.substr(0, eol));
    rest = eol == std::string_view::npos ? std::string_view{} : rest.substr(eol + 1);
    if (line.empty()) continue;

    std::size_t fields = 0;
    while (true) {
      const std::size_t comma = line.find(',');
      const std::string_view field = trim(line.substr(0, comma));
      float v = 0.0f;
      const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
      if (field.empty() || ec != std::errc() || ptr != field.data() + field.size()) {
        throw LoadError("row " + std::to_string(row) + ": cannot parse '" + std::string(field) + "'", row);
      }
      if (!std::isfinite(v)) {
        throw LoadError("row " + std::to_string(row) + ": non-finite value", row);
      }
      values.push_back(v);
      ++fields;
      if (comma == std::string_view::npos) break;
      line = line.substr(comma + 1);
    }
    if (row == 0) {
      cols = fields;
    } else if (fields != cols) {
      throw LoadError("row " + std::to_string(row) + ": expected " + std::to_string(cols) +
                          " values, found " + std::to_string(fields),
                      row);
    }
    ++row;
  }
  if (row == 0) throw LoadError("no rows");
  Matrix out(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(cols));
  std::copy(values.begin(), values.end(), out.data());
  return out;
}

VectorView load_vectors(const std::string& path, VectorFormat format, int view_id) {
  VectorView view;
  view.view_id = view_id;
  if (format == VectorFormat::kCsv) {
    try {
      view.data = parse_csv(read_file(path));
    } catch (const LoadError& e) {
      throw LoadError("'" + path + "': " + e.what(), e.row());
    }
    return view;
  }

  io::Reader in(path);
  try {
    in.expect_magic(kVectorMagic);
  } catch (const Error& e) {
    throw LoadError(e.what());
  }
  if (in.remaining() < 8) throw LoadError("'" + path + "': malformed header");
  const auto n = in.get<std::uint32_t>();
  const auto d = in.get<std::uint32_t>();
  if (n == 0 || d == 0) throw LoadError("'" + path + "': header has zero rows or columns");
  const std::uint64_t expected = std::uint64_t{n} * d * sizeof(float);
  if (in.remaining() != expected) {
    throw LoadError("'" + path + "': header says " + std::to_string(n) + "x" + std::to_string(d) +
                    " but payload has " + std::to_string(in.remaining()) + " bytes");
  }
  view.data.resize(n, d);
  in.get_array(std::span<float>(view.data.data(), static_cast<std::size_t>(view.data.size())));
  try {
    check_finite(view.data);
  } catch (const LoadError& e) {
    throw LoadError("'" + path + "': " + e.what(), e.row());
  }
  return view;
}

void save_vectors(const std::string& path, const Matrix& data, VectorFormat format) {
  if (format == VectorFormat::kCsv) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    char buf[32];
    for (Eigen::Index i = 0; i < data.rows(); ++i) {
      for (Eigen::Index j = 0; j < data.cols(); ++j) {
        const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), data(i, j));
        if (j > 0) out << ',';
        out.write(buf, ptr - buf);
      }
      out << '\n';
    }
    if (!out) throw Error("write failed on '" + path + "'");
    return;
  }
  io::Writer out(path);
  out.magic(kVectorMagic);
  out.put(static_cast<std::uint32_t>(data.rows()));
  out.put(static_cast<std::uint32_t>(data.cols()));
  out.put_array(std::span<const float>(data.data(), static_cast<std::size_t>(data.size())));
  out.close();
}

Labels load_labels(const std::string& path) {
  const std::string text = read_file(path);
  Labels labels;
  std::string_view rest(text);
  std::size_t row = 0;
  while (!rest.empty()) {
    const std::size_t eol = rest.find('\n');
    std::string_view line = trim(rest.substr(0, eol));
    rest = eol == std::string_view::npos ? std::string_view{} : rest.substr(eol + 1);
    if (line.empty()) continue;
    std::vector<std::int32_t> tags;
    while (!line.empty()) {
      const std::size_t sep = line.find_first_of(", \t");
      const std::string_view field = line.substr(0, sep);
      if (!field.empty()) {
        std::int32_t v = 0;
        const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
        if (ec != std::errc() || ptr != field.data() + field.size()) {
          throw LoadError("'" + path + "': label row " + std::to_string(row) + ": cannot parse '" +
                              std::string(field) + "'",
                          row);
        }
        tags.push_back(v);
      }
      if (sep == std::string_view::npos) break;
      line = line.substr(sep + 1);
    }
    std::sort(tags.begin(), tags.end());
    tags.erase(std::unique(tags.begin(), tags.end()), tags.end());
    labels.push_back(std::move(tags));
    ++row;
  }
  return labels;
}

void save_labels(const std::string& path, const Labels& labels) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  for (const auto& tags : labels) {
    for (std::size_t t = 0; t < tags.size(); ++t) {
      if (t > 0) out << ',';
      out << tags[t];
    }
    out << '\n';
  }
  if (!out) throw Error("write failed on '" + path + "'");
}

DatasetSplit make_split(std::size_t n, std::size_t n_train, std::size_t n_query, std::uint64_t seed) {
  if (n_train + n_query > n) {
    throw Error("split needs " + std::to_string(n_train) + " train + " + std::to_string(n_query) +
                " query items but only " + std::to_string(n) + " exist");
  }
  std::vector<ItemId> perm(n);
  std::iota(perm.begin(), perm.end(), ItemId{0});
  auto rng = make_rng(seed, 7);
  for (std::size_t i = n; i > 1; --i) {
    std::uniform_int_distribution<std::size_t> pick(0, i - 1);
    std::swap(perm[i - 1], perm[pick(rng)]);
  }

  DatasetSplit split;
  split.seed = seed;
  split.query_idx.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_query));
  split.train_idx.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_query),
                         perm.begin() + static_cast<std::ptrdiff_t>(n_query + n_train));
  std::sort(split.query_idx.begin(), split.query_idx.end());
  std::sort(split.train_idx.begin(), split.train_idx.end());

  std::vector<bool> is_query(n, false);
  for (ItemId q : split.query_idx) is_query[q] = true;
  split.database_idx.reserve(n - n_query);
  for (std::size_t i = 0; i < n; ++i) {
    if (!is_query[i]) split.database_idx.push_back(static_cast<ItemId>(i));
  }
  return split;
}

GroundTruth ground_truth(const Labels& labels, const std::vector<ItemId>& query_idx,
                         const std::vector<ItemId>& database_idx) {
  auto tags_of = [&](ItemId i) -> const std::vector<std::int32_t>& {
    if (i >= labels.size() || labels[i].empty()) {
      throw Error("missing label for item " + std::to_string(i));
    }
    return labels[i];
  };
  auto share_tag = [](const std::vector<std::int32_t>& a, const std::vector<std::int32_t>& b) {
    auto ia = a.begin();
    auto ib = b.begin();
    while (ia != a.end() && ib != b.end()) {
      if (*ia == *ib) return true;
      if (*ia < *ib) ++ia; else ++ib;
    }
    return false;
  };

  GroundTruth gt;
  gt.relevant.resize(query_idx.size());
  for (ItemId d : database_idx) tags_of(d);
  for (std::size_t q = 0; q < query_idx.size(); ++q) {
    const auto& qtags = tags_of(query_idx[q]);
    auto& rel = gt.relevant[q];
    for (ItemId d : database_idx) {
      if (share_tag(qtags, labels[d])) rel.push_back(d);
    }
    std::sort(rel.begin(), rel.end());
    if (rel.empty()) ++gt.empty_queries;
  }
  return gt;
}

MultiViewDataset gen_synthetic(const SyntheticSpec& spec) {
  if (spec.clusters == 0 || spec.per_cluster == 0 || spec.views == 0 || spec.dim == 0) {
    throw Error("gen_synthetic: all counts must be positive");
  }
  if (!(spec.noise >= 0.0) || !std::isfinite(spec.noise)) throw Error("gen_synthetic: noise must be >= 0");

  const auto dim = static_cast<Eigen::Index>(spec.dim);
  const std::size_t n = spec.clusters * spec.per_cluster;
  std::normal_distribution<double> gauss(0.0, 1.0);

  auto center_rng = make_rng(spec.seed, 1);
  Eigen::MatrixXd centers(static_cast<Eigen::Index>(spec.clusters), dim);
  for (Eigen::Index c = 0; c < centers.rows(); ++c) {
    for (Eigen::Index j = 0; j < dim; ++j) centers(c, j) = gauss(center_rng);
  }

  std::vector<VectorView> views;
  for (std::size_t m = 0; m < spec.views; ++m) {
    auto rng = make_rng(spec.seed, 100 + m);
    // Haar-random rotation: QR of a Gaussian matrix with the sign of R's
    // diagonal folded into Q.
    Eigen::MatrixXd g(dim, dim);
    for (Eigen::Index i = 0; i < dim; ++i) {
      for (Eigen::Index j = 0; j < dim; ++j) g(i, j) = gauss(rng);
    }
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    Eigen::MatrixXd q = qr.householderQ();
    const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (Eigen::Index j = 0; j < dim; ++j) {
      if (r(j, j) < 0) q.col(j) = -q.col(j);
    }

    VectorView view;
    view.view_id = static_cast<int>(m);
    view.data.resize(static_cast<Eigen::Index>(n), dim);
    Eigen::VectorXd latent(dim);
    for (std::size_t i = 0; i < n; ++i) {
      const auto c = static_cast<Eigen::Index>(i / spec.per_cluster);
      for (Eigen::Index j = 0; j < dim; ++j) latent(j) = centers(c, j) + spec.noise * gauss(rng);
      view.data.row(static_cast<Eigen::Index>(i)) = (q * latent).cast<float>().transpose();
    }
    views.push_back(std::move(view));
  }

  Labels labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = {static_cast<std::int32_t>(i / spec.per_cluster)};
  return MultiViewDataset(std::move(views), std::move(labels));
}

}  // namespace mvhash::dataset
