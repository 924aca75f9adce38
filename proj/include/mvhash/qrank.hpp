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
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "mvhash/anchors.hpp"
#include "mvhash/common.hpp"
#include "mvhash/hashing.hpp"

namespace mvhash::qrank {

/// Per-cell pseudo-count of the smoothed mutual-information estimator.
inline constexpr double kDefaultPseudocount = 0.25;
/// Lower bound applied to calibrated weights.
inline constexpr double kWeightFloor = 1e-12;

/// Empirical MI (nats) of two binary variables from their 2x2 joint counts,
/// each cell smoothed by 'pseudocount'. With pseudocount 0, empty cells
/// contribute 0.
double mutual_information_from_counts(std::uint64_t n11, std::uint64_t n10, std::uint64_t n01,
                                      std::uint64_t n00, double pseudocount = kDefaultPseudocount);

/// MI between bits i and j over all items of 'codes'.
double mutual_information(const PackedCodes& codes, std::size_t i, std::size_t j,
                          double pseudocount = kDefaultPseudocount);

/// a_ij = exp(-lambda * MI(y_i, y_j)) off the diagonal, 0 on it.
struct IndependenceMatrix {
  Eigen::MatrixXd a;
  double lambda = 1.0;

  std::size_t bits() const { return static_cast<std::size_t>(a.rows()); }
};

IndependenceMatrix independence_matrix(const PackedCodes& codes, double lambda,
                                       double pseudocount = kDefaultPseudocount);

// Independence file: "MVI1", u32 B, f64 lambda, B*B f64 row-major.
void save_independence(const std::string& path, const IndependenceMatrix& m);
IndependenceMatrix load_independence(const std::string& path);

/// w_k = exp(gamma * sum_p s_p * h_k(q) * h_k(p)) where p ranges over the
/// profile landmarks and h-values are +/-1 taken from the packed codes.
std::vector<double> raw_weights_from_profile(std::span<const std::uint64_t> query_code,
                                             const PackedCodes& landmark_codes,
                                             const std::vector<anchors::LandmarkWeight>& profile,
                                             double gamma);

/// Full raw-weight computation for one query vector.
std::vector<double> raw_weights(const hashing::HashModel& hash_model, const anchors::AnchorModel& anchor_model,
                                std::span<const float> query, double gamma, std::size_t l);

struct CalibrateOptions {
  double tol = 1e-8;
  std::size_t max_iters = 1000;
};

struct Calibration {
  std::vector<double> pi;
  std::vector<double> calibrated;  // max(raw * pi, kWeightFloor)
  std::size_t iterations = 0;
  bool converged = false;
  /// pi^T M pi at the start and after every update.
  std::vector<double> objective;
};

/// Called with every iterate, starting from the uniform vector.
using SimplexObserver = std::function<void(std::span<const double>)>;

/// Replicator dynamics pi <- (pi o M pi) / (pi^T M pi) from the uniform
/// vector until ||delta pi||_1 < tol or max_iters updates. If the start
/// objective is zero the uniform vector is returned with a warning.
Calibration replicator_dynamics(const Eigen::MatrixXd& m, const CalibrateOptions& options = {},
                                const SimplexObserver& observer = {});

/// Builds M_ij = w_i a_ij w_j and runs replicator dynamics on it.
Calibration calibrate(std::span<const double> raw, const IndependenceMatrix& independence,
                      const CalibrateOptions& options = {}, const SimplexObserver& observer = {});

struct BitWeights {
  std::vector<double> raw;
  std::vector<double> pi;
  std::vector<double> calibrated;
  /// ranking_weights(calibrated): the weights actually used for distances.
  std::vector<double> ranking;
  double gamma = 1.0;
};

/// Calibrated weights divided by their sum and rounded to a binary grid
/// fine enough that every sum of up to B grid values is an exact double
/// (grid 2^-(52 - bit_width(B)), at least one grid step per bit). Weighted
/// distances over these weights are exact, so they do not depend on the
/// summation order, equal real sums compare equal, and rescaling the
/// calibrated weights by any c > 0 leaves the ranking unchanged.
std::vector<double> ranking_weights(std::span<const double> calibrated);

/// Ranks every row of 'codes' by weighted distance under ranking_weights(w)
/// and returns the top_n (row, distance) pairs, ties by ascending row.
std::vector<ScoredId> rank_by_weights(const PackedCodes& codes, std::span<const std::uint64_t> query_code,
                                      std::span<const double> calibrated, std::size_t top_n);

/// Sum of weights[k] over the bits where row i and query_code differ.
double weighted_hamming(const PackedCodes& codes, std::size_t i, std::span<const std::uint64_t> query_code,
                        std::span<const double> weights);

/// Weighted distances from query_code to every row of 'codes'.
std::vector<double> weighted_hamming_scan(const PackedCodes& codes, std::span<const std::uint64_t> query_code,
                                          std::span<const double> weights);

struct QRankParams {
  double gamma = 1.0;
  double lambda = 1.0;
  std::size_t landmarks = 25;  // L
  double tol = 1e-8;
  std::size_t max_iters = 1000;
  bool calibrate = true;
  std::size_t top_n = 1000;  // N_k
};

/// One view's hash table: model, database codes, anchors and the offline
/// independence matrix. Row r of 'codes' is database item ids[r]; ids are
/// ascending.
struct Table {
  int view_id = 0;
  hashing::HashModel model;
  PackedCodes codes;
  std::vector<ItemId> ids;
  anchors::AnchorModel anchors;
  IndependenceMatrix independence;
};

struct QRankResult {
  /// (global id, weighted distance), ascending, ties by ascending id.
  std::vector<ScoredId> ranked;
  /// Table rows of the ranked items, same order.
  std::vector<std::size_t> rows;
  BitWeights weights;
  std::vector<std::uint64_t> query_code;
};

/// Query-adaptive weighting followed by a weighted Hamming scan, returning
/// the top_n items. Distances are in units of the calibrated weight sum.
QRankResult qrank_query(const Table& table, std::span<const float> query, const QRankParams& params);

/// Weights for one query without the scan (used by fusion).
BitWeights query_weights(const Table& table, std::span<const float> query,
                         std::span<const std::uint64_t> query_code, const QRankParams& params);

}  // namespace mvhash::qrank
