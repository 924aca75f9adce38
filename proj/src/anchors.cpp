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

#include "mvhash/anchors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "mvhash/binary_io.hpp"
#include "mvhash/simd/kernels.hpp"

namespace mvhash::anchors {

namespace {

constexpr double kMinScale = 1e-6;

std::span<const float> row_of(const Matrix& m, std::size_t i) {
  return {m.row(static_cast<Eigen::Index>(i)).data(), static_cast<std::size_t>(m.cols())};
}

// Indices of the 'count' smallest values, ties by lower index.
std::vector<std::uint32_t> smallest(std::span<const double> values, std::size_t count) {
  std::vector<std::uint32_t> idx(values.size());
  std::iota(idx.begin(), idx.end(), 0u);
  count = std::min(count, idx.size());
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(count), idx.end(),
                    [&](std::uint32_t a, std::uint32_t b) {
                      return values[a] < values[b] || (values[a] == values[b] && a < b);
                    });
  idx.resize(count);
  return idx;
}

std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t count, std::mt19937_64& rng) {
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  count = std::min(count, n);
  for (std::size_t i = 0; i < count; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, n - 1);
    std::swap(perm[i], perm[pick(rng)]);
  }
  perm.resize(count);
  return perm;
}

Matrix kmeans(const Matrix& data, std::size_t k, std::size_t iters, std::mt19937_64& rng) {
  const auto& kern = simd::active_kernels();
  const auto n = static_cast<std::size_t>(data.rows());
  const auto d = static_cast<std::size_t>(data.cols());
  Matrix centers(static_cast<Eigen::Index>(k), data.cols());

  // k-means++ seeding.
  std::uniform_int_distribution<std::size_t> first(0, n - 1);
  centers.row(0) = data.row(static_cast<Eigen::Index>(first(rng)));
  std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
  for (std::size_t c = 1; c < k; ++c) {
    const float* prev = centers.row(static_cast<Eigen::Index>(c - 1)).data();
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      nearest[i] = std::min(nearest[i], kern.squared_l2(data.row(static_cast<Eigen::Index>(i)).data(), prev, d));
      total += nearest[i];
    }
    std::size_t chosen = 0;
    if (total > 0.0) {
      std::uniform_real_distribution<double> u(0.0, total);
      double target = u(rng);
      chosen = n - 1;
      for (std::size_t i = 0; i < n; ++i) {
        target -= nearest[i];
        if (target < 0.0) {
          chosen = i;
          break;
        }
      }
    } else {
      chosen = first(rng);
    }
    centers.row(static_cast<Eigen::Index>(c)) = data.row(static_cast<Eigen::Index>(chosen));
  }

  std::vector<std::uint32_t> assign(n, std::numeric_limits<std::uint32_t>::max());
  std::vector<double> dist(k);
  for (std::size_t it = 0; it < iters; ++it) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      kern.squared_l2_batch(centers.data(), k, d, data.row(static_cast<Eigen::Index>(i)).data(), dist.data());
      const auto best = smallest(dist, 1).front();
      if (best != assign[i]) {
        assign[i] = best;
        changed = true;
      }
    }
    if (!changed) break;
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(k), data.cols());
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      sums.row(assign[i]) += data.row(static_cast<Eigen::Index>(i)).cast<double>();
      ++counts[assign[i]];
    }
    for (std::size_t c = 0; c < k; ++c) {
      // Empty clusters keep their previous center.
      if (counts[c] > 0) {
        centers.row(static_cast<Eigen::Index>(c)) =
            (sums.row(static_cast<Eigen::Index>(c)) / static_cast<double>(counts[c])).cast<float>();
      }
    }
  }
  return centers;
}

}  // namespace

AnchorMethod parse_method(const std::string& name) {
  if (name == "random") return AnchorMethod::kRandom;
  if (name == "kmeans") return AnchorMethod::kKmeans;
  throw Error("unknown anchor method '" + name + "' (expected random or kmeans)");
}

void AnchorModel::validate() const {
  if (k() == 0) throw Error("anchor model has no anchors");
  if (s_nn < 1 || s_nn > k()) {
    throw Error("s_nn must be in [1, K], got " + std::to_string(s_nn) + " with K=" + std::to_string(k()));
  }
  if (!(bandwidth > 0.0)) throw Error("anchor bandwidth must be positive");
  if (!(sigma > 0.0)) throw Error("anchor sigma must be positive");
  if (anchor_codes.size() != 0 && anchor_codes.size() != k()) throw Error("anchor code count differs from K");
}

std::vector<double> kernel_weights(std::span<const double> squared_distances, double bandwidth) {
  std::vector<double> w(squared_distances.size());
  if (w.empty()) return w;
  const double base = *std::min_element(squared_distances.begin(), squared_distances.end());
  const double denom = 2.0 * bandwidth * bandwidth;
  double total = 0.0;
  for (std::size_t j = 0; j < w.size(); ++j) {
    w[j] = std::max(std::exp(-(squared_distances[j] - base) / denom), std::numeric_limits<double>::min());
    total += w[j];
  }
  for (double& v : w) v /= total;
  return w;
}

SparseRow embed(const AnchorModel& model, std::span<const float> x) {
  if (x.size() != model.dim()) {
    throw Error("embed: vector has dimension " + std::to_string(x.size()) + ", anchors have " +
                std::to_string(model.dim()));
  }
  std::vector<double> d2(model.k());
  simd::active_kernels().squared_l2_batch(model.anchors.data(), model.k(), model.dim(), x.data(), d2.data());
  auto nn = smallest(d2, model.s_nn);
  std::sort(nn.begin(), nn.end());
  std::vector<double> kept(nn.size());
  for (std::size_t j = 0; j < nn.size(); ++j) kept[j] = d2[nn[j]];
  return {std::move(nn), kernel_weights(kept, model.bandwidth)};
}

double squared_distance(const SparseRow& a, const SparseRow& b) {
  double sum = 0.0;
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < a.nnz() || j < b.nnz()) {
    double diff;
    if (j == b.nnz() || (i < a.nnz() && a.index[i] < b.index[j])) {
      diff = a.value[i++];
    } else if (i == a.nnz() || b.index[j] < a.index[i]) {
      diff = b.value[j++];
    } else {
      diff = a.value[i++] - b.value[j++];
    }
    sum += diff * diff;
  }
  return sum;
}

double similarity(const SparseRow& a, const SparseRow& b, double sigma) {
  if (!(sigma > 0.0)) throw Error("similarity: sigma must be positive");
  return std::exp(-squared_distance(a, b) / (sigma * sigma));
}

std::vector<LandmarkWeight> query_neighbor_profile(const AnchorModel& model, const SparseRow& z_query,
                                                   std::size_t l) {
  const std::size_t k = model.anchor_embedding.size();
  if (k == 0) throw Error("anchor model has no landmark embeddings");
  if (l == 0 || l > k) throw Error("profile size L must be in [1, K]");
  std::vector<double> neg_sim(k);
  for (std::size_t j = 0; j < k; ++j) neg_sim[j] = -similarity(z_query, model.anchor_embedding[j], model.sigma);
  const auto top = smallest(neg_sim, l);
  double total = 0.0;
  for (auto j : top) total += -neg_sim[j];
  std::vector<LandmarkWeight> out;
  out.reserve(top.size());
  for (auto j : top) out.push_back({j, -neg_sim[j] / total});
  return out;
}

void finalize(AnchorModel& model, const hashing::HashModel* hash_model) {
  model.anchor_embedding.resize(model.k());
  for (std::size_t j = 0; j < model.k(); ++j) model.anchor_embedding[j] = embed(model, row_of(model.anchors, j));
  if (hash_model) model.anchor_codes = hashing::encode(*hash_model, model.anchors);
  model.validate();
}

AnchorModel build_anchors(const Matrix& data, const AnchorOptions& options, const hashing::HashModel* hash_model) {
  const auto n = static_cast<std::size_t>(data.rows());
  if (options.k == 0) throw Error("anchor count K must be >= 1");
  if (options.k > n) {
    throw Error("anchor count K=" + std::to_string(options.k) + " exceeds the " + std::to_string(n) +
                " available points");
  }
  if (options.s_nn < 1 || options.s_nn > options.k) throw Error("s_nn must be in [1, K]");

  auto rng = make_rng(options.seed, 0xa1c);
  AnchorModel model;
  model.s_nn = options.s_nn;
  if (options.method == AnchorMethod::kRandom) {
    const auto rows = sample_without_replacement(n, options.k, rng);
    model.anchors.resize(static_cast<Eigen::Index>(options.k), data.cols());
    for (std::size_t j = 0; j < rows.size(); ++j) {
      model.anchors.row(static_cast<Eigen::Index>(j)) = data.row(static_cast<Eigen::Index>(rows[j]));
    }
  } else {
    model.anchors = kmeans(data, options.k, options.kmeans_iters, rng);
  }

  // Bandwidth: mean distance from sampled points to their s_nn-th nearest anchor.
  const auto& kern = simd::active_kernels();
  const auto sample = sample_without_replacement(n, options.bandwidth_sample, rng);
  std::vector<double> d2(model.k());
  double total = 0.0;
  for (std::size_t i : sample) {
    kern.squared_l2_batch(model.anchors.data(), model.k(), model.dim(), row_of(data, i).data(), d2.data());
    std::nth_element(d2.begin(), d2.begin() + static_cast<std::ptrdiff_t>(model.s_nn - 1), d2.end());
    total += std::sqrt(d2[model.s_nn - 1]);
  }
  model.bandwidth = std::max(total / static_cast<double>(sample.size()), kMinScale);

  // Sigma: largest embedding distance over random database pairs.
  double max_d2 = 0.0;
  if (n > 1) {
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    for (std::size_t p = 0; p < options.sigma_pairs; ++p) {
      const std::size_t a = pick(rng);
      std::size_t b = pick(rng);
      while (b == a) b = pick(rng);
      max_d2 = std::max(max_d2, squared_distance(embed(model, row_of(data, a)), embed(model, row_of(data, b))));
    }
  }
  model.sigma = std::max(std::sqrt(max_d2), kMinScale);

  finalize(model, hash_model);
  return model;
}

void save_anchors(const std::string& path, const AnchorModel& model) {
  io::Writer out(path);
  out.magic("MVA1");
  out.put(std::uint32_t{1});
  out.put(static_cast<std::uint32_t>(model.k()));
  out.put(static_cast<std::uint32_t>(model.dim()));
  out.put(static_cast<std::uint32_t>(model.s_nn));
  out.put(model.bandwidth);
  out.put(model.sigma);
  out.put_array(std::span<const float>(model.anchors.data(), static_cast<std::size_t>(model.anchors.size())));
  out.close();
}

AnchorModel load_anchors(const std::string& path) {
  io::Reader in(path);
  in.expect_magic("MVA1");
  if (const auto version = in.get<std::uint32_t>(); version != 1) {
    throw Error("'" + path + "': unsupported anchor version " + std::to_string(version));
  }
  AnchorModel model;
  const auto k = in.get<std::uint32_t>();
  const auto d = in.get<std::uint32_t>();
  model.s_nn = in.get<std::uint32_t>();
  model.bandwidth = in.get<double>();
  model.sigma = in.get<double>();
  if (in.remaining() != std::uint64_t{k} * d * sizeof(float)) {
    throw Error("'" + path + "': anchor payload does not match header");
  }
  model.anchors.resize(k, d);
  in.get_array(std::span<float>(model.anchors.data(), static_cast<std::size_t>(model.anchors.size())));
  finalize(model, nullptr);
  return model;
}

}  // namespace mvhash::anchors
