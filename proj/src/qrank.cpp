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

#include "mvhash/qrank.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

#include "mvhash/binary_io.hpp"
#include "mvhash/simd/kernels.hpp"

namespace mvhash::qrank {

namespace {

// Bit k of every item as one bitset over items.
std::vector<std::vector<std::uint64_t>> bit_columns(const PackedCodes& codes) {
  const std::size_t words = (codes.size() + 63) / 64;
  std::vector<std::vector<std::uint64_t>> cols(codes.bits(), std::vector<std::uint64_t>(words, 0));
  for (std::size_t i = 0; i < codes.size(); ++i) {
    const auto row = codes.row(i);
    for (std::size_t w = 0; w < row.size(); ++w) {
      std::uint64_t x = row[w];
      while (x != 0) {
        const std::size_t k = w * 64 + static_cast<std::size_t>(std::countr_zero(x));
        cols[k][i / 64] |= std::uint64_t{1} << (i % 64);
        x &= x - 1;
      }
    }
  }
  return cols;
}

void check_bit(const PackedCodes& codes, std::size_t k) {
  if (k >= codes.bits()) throw Error("bit index " + std::to_string(k) + " out of range");
}

}  // namespace

double mutual_information_from_counts(std::uint64_t n11, std::uint64_t n10, std::uint64_t n01,
                                      std::uint64_t n00, double pseudocount) {
  const double c[2][2] = {{static_cast<double>(n00) + pseudocount, static_cast<double>(n01) + pseudocount},
                          {static_cast<double>(n10) + pseudocount, static_cast<double>(n11) + pseudocount}};
  const double total = c[0][0] + c[0][1] + c[1][0] + c[1][1];
  if (!(total > 0.0)) return 0.0;
  const double px[2] = {(c[0][0] + c[0][1]) / total, (c[1][0] + c[1][1]) / total};
  const double py[2] = {(c[0][0] + c[1][0]) / total, (c[0][1] + c[1][1]) / total};
  double mi = 0.0;
  for (int x = 0; x < 2; ++x) {
    for (int y = 0; y < 2; ++y) {
      const double p = c[x][y] / total;
      if (p > 0.0) mi += p * std::log(p / (px[x] * py[y]));
    }
  }
  return std::max(mi, 0.0);
}

double mutual_information(const PackedCodes& codes, std::size_t i, std::size_t j, double pseudocount) {
  check_bit(codes, i);
  check_bit(codes, j);
  if (codes.size() == 0) throw Error("mutual_information needs at least one item");
  std::uint64_t n11 = 0, n10 = 0, n01 = 0;
  for (std::size_t r = 0; r < codes.size(); ++r) {
    const bool a = codes.bit(r, i);
    const bool b = codes.bit(r, j);
    n11 += a && b;
    n10 += a && !b;
    n01 += !a && b;
  }
  const std::uint64_t n00 = codes.size() - n11 - n10 - n01;
  return mutual_information_from_counts(n11, n10, n01, n00, pseudocount);
}

IndependenceMatrix independence_matrix(const PackedCodes& codes, double lambda, double pseudocount) {
  if (!(lambda > 0.0)) throw Error("lambda must be positive");
  if (codes.size() == 0) throw Error("independence matrix needs at least one item");
  const std::size_t b = codes.bits();
  const auto cols = bit_columns(codes);
  const auto& kern = simd::active_kernels();
  const std::size_t words = cols.empty() ? 0 : cols.front().size();

  std::vector<std::uint64_t> ones(b);
  for (std::size_t k = 0; k < b; ++k) ones[k] = kern.popcount_and(cols[k].data(), cols[k].data(), words);

  IndependenceMatrix out;
  out.lambda = lambda;
  out.a = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(b));
  const std::uint64_t n = codes.size();
  for (std::size_t i = 0; i < b; ++i) {
    for (std::size_t j = i + 1; j < b; ++j) {
      const std::uint64_t n11 = kern.popcount_and(cols[i].data(), cols[j].data(), words);
      const std::uint64_t n10 = ones[i] - n11;
      const std::uint64_t n01 = ones[j] - n11;
      const std::uint64_t n00 = n - n11 - n10 - n01;
      const double a = std::exp(-lambda * mutual_information_from_counts(n11, n10, n01, n00, pseudocount));
      out.a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = a;
      out.a(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = a;
    }
  }
  return out;
}

void save_independence(const std::string& path, const IndependenceMatrix& m) {
  io::Writer out(path);
  out.magic("MVI1");
  out.put(static_cast<std::uint32_t>(m.bits()));
  out.put(m.lambda);
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> a = m.a;
  out.put_array(std::span<const double>(a.data(), static_cast<std::size_t>(a.size())));
  out.close();
}

IndependenceMatrix load_independence(const std::string& path) {
  io::Reader in(path);
  in.expect_magic("MVI1");
  const auto b = static_cast<Eigen::Index>(in.get<std::uint32_t>());
  IndependenceMatrix m;
  m.lambda = in.get<double>();
  if (in.remaining() != static_cast<std::uint64_t>(b * b) * 8) {
    throw Error("'" + path + "': independence payload does not match header");
  }
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> a(b, b);
  in.get_array(std::span<double>(a.data(), static_cast<std::size_t>(a.size())));
  m.a = a;
  return m;
}

std::vector<double> raw_weights_from_profile(std::span<const std::uint64_t> query_code,
                                             const PackedCodes& landmark_codes,
                                             const std::vector<anchors::LandmarkWeight>& profile,
                                             double gamma) {
  if (!(gamma >= 0.0)) throw Error("gamma must be non-negative");
  if (query_code.size() != landmark_codes.words_per_item()) throw Error("raw_weights: code length mismatch");
  const std::size_t b = landmark_codes.bits();
  std::vector<double> agreement(b, 0.0);
  for (const auto& lw : profile) {
    const auto row = landmark_codes.row(lw.landmark);
    for (std::size_t k = 0; k < b; ++k) {
      const bool differ = ((row[k / 64] ^ query_code[k / 64]) >> (k % 64)) & 1u;
      agreement[k] += differ ? -lw.weight : lw.weight;
    }
  }
  std::vector<double> w(b);
  for (std::size_t k = 0; k < b; ++k) w[k] = std::exp(gamma * agreement[k]);
  return w;
}

std::vector<double> raw_weights(const hashing::HashModel& hash_model, const anchors::AnchorModel& anchor_model,
                                std::span<const float> query, double gamma, std::size_t l) {
  if (anchor_model.anchor_codes.size() != anchor_model.k()) throw Error("anchor model has no anchor codes");
  const auto z = anchors::embed(anchor_model, query);
  const auto profile = anchors::query_neighbor_profile(anchor_model, z, l);
  const auto code = hashing::encode_one(hash_model, query);
  return raw_weights_from_profile(code, anchor_model.anchor_codes, profile, gamma);
}

Calibration replicator_dynamics(const Eigen::MatrixXd& m, const CalibrateOptions& options,
                                const SimplexObserver& observer) {
  const auto b = m.rows();
  if (b == 0 || m.cols() != b) throw Error("replicator dynamics needs a square non-empty matrix");
  Calibration out;
  Eigen::VectorXd pi = Eigen::VectorXd::Constant(b, 1.0 / static_cast<double>(b));
  if (observer) observer({pi.data(), static_cast<std::size_t>(b)});
  Eigen::VectorXd mp = m * pi;
  double objective = pi.dot(mp);
  out.objective.push_back(objective);
  if (!(objective > 0.0)) {
    warn("calibration objective is zero at the uniform start; returning uniform weights");
    out.pi.assign(pi.data(), pi.data() + b);
    out.converged = true;
    return out;
  }
  while (out.iterations < options.max_iters) {
    const Eigen::VectorXd next = pi.cwiseProduct(mp) / objective;
    const double delta = (next - pi).lpNorm<1>();
    pi = next;
    ++out.iterations;
    if (observer) observer({pi.data(), static_cast<std::size_t>(b)});
    mp = m * pi;
    objective = pi.dot(mp);
    out.objective.push_back(objective);
    if (delta < options.tol) {
      out.converged = true;
      break;
    }
  }
  out.pi.assign(pi.data(), pi.data() + b);
  return out;
}

Calibration calibrate(std::span<const double> raw, const IndependenceMatrix& independence,
                      const CalibrateOptions& options, const SimplexObserver& observer) {
  const std::size_t b = raw.size();
  if (independence.bits() != b) throw Error("calibrate: weight length differs from independence matrix");
  for (double w : raw) {
    if (!(w > 0.0)) throw Error("calibrate: raw weights must be positive");
  }
  Eigen::MatrixXd m(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(b));
  for (std::size_t i = 0; i < b; ++i) {
    for (std::size_t j = 0; j < b; ++j) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          raw[i] * independence.a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) * raw[j];
    }
  }
  Calibration out = replicator_dynamics(m, options, observer);
  out.calibrated.resize(b);
  for (std::size_t k = 0; k < b; ++k) out.calibrated[k] = std::max(raw[k] * out.pi[k], kWeightFloor);
  return out;
}

double weighted_hamming(const PackedCodes& codes, std::size_t i, std::span<const std::uint64_t> query_code,
                        std::span<const double> weights) {
  if (weights.size() != codes.bits()) throw Error("weighted_hamming: weight length differs from code length");
  if (query_code.size() != codes.words_per_item()) throw Error("weighted_hamming: code length mismatch");
  double d = 0.0;
  simd::scalar_kernels().weighted_hamming_scan(codes.row(i).data(), 1, codes.words_per_item(), codes.bits(),
                                               query_code.data(), weights.data(), &d);
  return d;
}

std::vector<double> weighted_hamming_scan(const PackedCodes& codes, std::span<const std::uint64_t> query_code,
                                          std::span<const double> weights) {
  if (weights.size() != codes.bits()) throw Error("weighted_hamming: weight length differs from code length");
  if (query_code.size() != codes.words_per_item()) throw Error("weighted_hamming: code length mismatch");
  std::vector<double> d(codes.size());
  simd::active_kernels().weighted_hamming_scan(codes.data(), codes.size(), codes.words_per_item(), codes.bits(),
                                               query_code.data(), weights.data(), d.data());
  return d;
}

std::vector<double> ranking_weights(std::span<const double> calibrated) {
  const std::size_t b = calibrated.size();
  if (b == 0) throw Error("ranking_weights: no bits");
  double total = 0.0;
  for (double w : calibrated) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw Error("ranking_weights: weights must be finite and nonnegative");
    total += w;
  }
  if (!(total > 0.0)) throw Error("ranking_weights: weights sum to zero");
  // Grid values are integers n_k * 2^-shift with sum(n_k) <= 2^shift + b,
  // which stays below 2^53, so every partial sum is exact.
  const int shift = 52 - static_cast<int>(std::bit_width(b));
  std::vector<double> out(b);
  for (std::size_t k = 0; k < b; ++k) {
    const double steps = std::max(1.0, std::nearbyint(std::ldexp(calibrated[k] / total, shift)));
    out[k] = std::ldexp(steps, -shift);
  }
  return out;
}

std::vector<ScoredId> rank_by_weights(const PackedCodes& codes, std::span<const std::uint64_t> query_code,
                                      std::span<const double> calibrated, std::size_t top_n) {
  const auto w = ranking_weights(calibrated);
  return hashing::top_k_ascending(weighted_hamming_scan(codes, query_code, w), top_n);
}

BitWeights query_weights(const Table& table, std::span<const float> query,
                         std::span<const std::uint64_t> query_code, const QRankParams& params) {
  const auto z = anchors::embed(table.anchors, query);
  const auto profile = anchors::query_neighbor_profile(table.anchors, z, params.landmarks);
  BitWeights w;
  w.gamma = params.gamma;
  w.raw = raw_weights_from_profile(query_code, table.anchors.anchor_codes, profile, params.gamma);
  if (params.calibrate) {
    auto cal = calibrate(w.raw, table.independence, {params.tol, params.max_iters});
    w.pi = std::move(cal.pi);
    w.calibrated = std::move(cal.calibrated);
  } else {
    const std::size_t b = w.raw.size();
    w.pi.assign(b, 1.0 / static_cast<double>(b));
    w.calibrated.resize(b);
    for (std::size_t k = 0; k < b; ++k) w.calibrated[k] = std::max(w.raw[k] * w.pi[k], kWeightFloor);
  }
  w.ranking = ranking_weights(w.calibrated);
  return w;
}

QRankResult qrank_query(const Table& table, std::span<const float> query, const QRankParams& params) {
  QRankResult out;
  out.query_code = hashing::encode_one(table.model, query);
  out.weights = query_weights(table, query, out.query_code, params);
  const auto dist = weighted_hamming_scan(table.codes, out.query_code, out.weights.ranking);
  auto top = hashing::top_k_ascending(dist, params.top_n);
  out.rows.reserve(top.size());
  for (auto& item : top) {
    out.rows.push_back(item.id);
    item.id = table.ids.at(item.id);
  }
  out.ranked = std::move(top);
  return out;
}

}  // namespace mvhash::qrank
