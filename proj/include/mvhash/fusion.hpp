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
#include <vector>

#include <Eigen/Sparse>

#include "mvhash/anchors.hpp"
#include "mvhash/common.hpp"
#include "mvhash/qrank.hpp"

namespace mvhash::fusion {

/// Vertex key of the query in every graph.
inline constexpr std::int64_t kQueryVertex = -1;

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Candidates of one table plus the query. vertices[0] is the query, the
/// rest are global item ids in ascending order. omega is symmetric,
/// nonnegative and has no diagonal.
struct CandidateGraph {
  int table_id = 0;
  std::vector<std::int64_t> vertices;
  SparseMatrix omega;
  /// Vertices whose similarity normaliser was zero.
  std::vector<std::uint8_t> isolated;
};

/// Anchor representation of every row of candidate_codes in the weighted
/// Hamming space: the s_nn nearest anchors under 'weights', valued
/// exp(-d / sigma_h) and normalised per row, with sigma_h = sum(weights).
anchors::SparseEmbedding candidate_embedding(const PackedCodes& candidate_codes, const PackedCodes& anchor_codes,
                                             std::span<const double> weights, std::size_t s_nn);

/// S_ij = <Z_i, Z_j> / lambda_i + <Z_j, Z_i> / lambda_j, lambda_i = sum_j <Z_i, Z_j>
/// over all rows (including i). Only rows sharing an anchor are linked; the
/// diagonal is dropped. Rows with lambda_i = 0 are flagged in 'isolated'.
SparseMatrix candidate_similarity(const anchors::SparseEmbedding& z, std::vector<std::uint8_t>* isolated = nullptr);

CandidateGraph build_candidate_graph(int table_id, std::vector<std::int64_t> vertices,
                                     const anchors::SparseEmbedding& z);

struct FusedGraph {
  std::vector<std::int64_t> vertices;  // query first, then ascending ids
  SparseMatrix omega;
  /// Row-normalised omega. Rows of dangling vertices are stored empty and
  /// stand for the uniform row.
  SparseMatrix transition;
  std::vector<std::uint8_t> dangling;
  std::vector<double> restart;
  double alpha = 0.85;

  std::size_t size() const { return vertices.size(); }
  /// Index of a vertex key, or -1.
  std::ptrdiff_t index_of(std::int64_t vertex) const;
  /// Transition matrix with the dangling rows expanded.
  Eigen::MatrixXd dense_transition() const;
};

/// Union of the vertex sets with summed edge weights.
FusedGraph fuse(const std::vector<CandidateGraph>& graphs);

/// Fills transition and restart: restart_mass on the query, the remainder
/// spread uniformly over the other vertices.
void transition_and_restart(FusedGraph& graph, double alpha, double restart_mass = 0.99);

struct RankScores {
  std::vector<double> r;
  std::size_t iterations = 0;
  bool converged = false;
  /// ||r_{t+1} - r_t||_1 for every update.
  std::vector<double> deltas;
};

using WalkObserver = std::function<void(std::span<const double>)>;

/// r <- (1 - alpha) restart + alpha P^T r from r = restart until the L1
/// change drops below tol or max_iters updates.
RankScores random_walk(const FusedGraph& graph, double tol = 1e-10, std::size_t max_iters = 1000,
                       const WalkObserver& observer = {});

/// r* = (1 - alpha) (I - alpha P^T)^{-1} restart by a dense LU solve.
RankScores closed_form_rank(const FusedGraph& graph);

struct QsrfParams {
  qrank::QRankParams qrank;  // qrank.top_n is N_k
  double alpha = 0.85;
  double restart_mass = 0.99;
  double walk_tol = 1e-10;
  std::size_t walk_max_iters = 1000;
};

struct QsrfResult {
  /// (global id, visiting probability), descending, ties by ascending id.
  std::vector<ScoredId> ranked;
  RankScores scores;
  std::size_t vertex_count = 0;
};

/// Per-table weighted ranking, candidate graphs, fusion and a random walk
/// with restart from the query. query_views[m] is the query in table m's view.
QsrfResult qsrf_search(std::span<const qrank::Table> tables, const std::vector<std::span<const float>>& query_views,
                       const QsrfParams& params);

}  // namespace mvhash::fusion
