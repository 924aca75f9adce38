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

#include "mvhash/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include <Eigen/LU>

#include "mvhash/simd/kernels.hpp"

namespace mvhash::fusion {

namespace {

using Triplet = Eigen::Triplet<double>;

SparseMatrix from_triplets(std::size_t n, const std::vector<Triplet>& triplets) {
  SparseMatrix m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  m.setFromTriplets(triplets.begin(), triplets.end());
  m.makeCompressed();
  return m;
}

}  // namespace

anchors::SparseEmbedding candidate_embedding(const PackedCodes& candidate_codes, const PackedCodes& anchor_codes,
                                             std::span<const double> weights, std::size_t s_nn) {
  const std::size_t k = anchor_codes.size();
  if (s_nn < 1 || s_nn > k) throw Error("candidate_embedding: s_nn must be in [1, K]");
  if (candidate_codes.bits() != anchor_codes.bits() || weights.size() != anchor_codes.bits()) {
    throw Error("candidate_embedding: code/weight length mismatch");
  }
  const double sigma_h = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (!(sigma_h > 0.0)) throw Error("candidate_embedding: weights sum to zero");

  const auto& kern = simd::active_kernels();
  anchors::SparseEmbedding z(candidate_codes.size());
  parallel_for(candidate_codes.size(), [&](std::size_t i) {
    std::vector<double> d(k);
    kern.weighted_hamming_scan(anchor_codes.data(), k, anchor_codes.words_per_item(), anchor_codes.bits(),
                               candidate_codes.row(i).data(), weights.data(), d.data());
    std::vector<std::uint32_t> idx(k);
    std::iota(idx.begin(), idx.end(), 0u);
    std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(s_nn), idx.end(),
                      [&](std::uint32_t a, std::uint32_t b) { return d[a] < d[b] || (d[a] == d[b] && a < b); });
    idx.resize(s_nn);
    std::sort(idx.begin(), idx.end());
    auto& row = z[i];
    row.index = idx;
    row.value.resize(s_nn);
    double total = 0.0;
    for (std::size_t j = 0; j < s_nn; ++j) {
      row.value[j] = std::exp(-d[idx[j]] / sigma_h);
      total += row.value[j];
    }
    for (double& v : row.value) v /= total;
  });
  return z;
}

SparseMatrix candidate_similarity(const anchors::SparseEmbedding& z, std::vector<std::uint8_t>* isolated) {
  const std::size_t n = z.size();
  std::uint32_t anchor_count = 0;
  for (const auto& row : z) {
    for (auto a : row.index) anchor_count = std::max(anchor_count, a + 1);
  }

  // Inverted lists: anchor -> (row, value), rows ascending.
  std::vector<std::vector<std::pair<std::uint32_t, double>>> lists(anchor_count);
  std::vector<double> column_sum(anchor_count, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t t = 0; t < z[i].nnz(); ++t) {
      lists[z[i].index[t]].emplace_back(static_cast<std::uint32_t>(i), z[i].value[t]);
      column_sum[z[i].index[t]] += z[i].value[t];
    }
  }
  std::vector<double> lambda(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t t = 0; t < z[i].nnz(); ++t) lambda[i] += z[i].value[t] * column_sum[z[i].index[t]];
  }
  if (isolated) {
    isolated->assign(n, 0);
    for (std::size_t i = 0; i < n; ++i) (*isolated)[i] = lambda[i] > 0.0 ? 0 : 1;
  }

  std::vector<Triplet> triplets;
  std::vector<double> acc(n, 0.0);
  std::vector<std::uint8_t> seen(n, 0);
  std::vector<std::uint32_t> touched;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(lambda[i] > 0.0)) continue;
    touched.clear();
    for (std::size_t t = 0; t < z[i].nnz(); ++t) {
      const double zi = z[i].value[t];
      for (const auto& [j, zj] : lists[z[i].index[t]]) {
        if (j <= i) continue;
        if (!seen[j]) {
          seen[j] = 1;
          touched.push_back(j);
        }
        acc[j] += zi * zj;
      }
    }
    std::sort(touched.begin(), touched.end());
    for (auto j : touched) {
      const double ip = acc[j];
      acc[j] = 0.0;
      seen[j] = 0;
      if (!(lambda[j] > 0.0) || !(ip > 0.0)) continue;
      const double s = ip / lambda[i] + ip / lambda[j];
      triplets.emplace_back(static_cast<int>(i), static_cast<int>(j), s);
      triplets.emplace_back(static_cast<int>(j), static_cast<int>(i), s);
    }
  }
  return from_triplets(n, triplets);
}

CandidateGraph build_candidate_graph(int table_id, std::vector<std::int64_t> vertices,
                                     const anchors::SparseEmbedding& z) {
  if (vertices.size() != z.size()) throw Error("candidate graph: vertex count differs from embedding rows");
  if (vertices.empty() || vertices.front() != kQueryVertex) throw Error("candidate graph: query vertex must come first");
  CandidateGraph g;
  g.table_id = table_id;
  g.vertices = std::move(vertices);
  g.omega = candidate_similarity(z, &g.isolated);
  return g;
}

std::ptrdiff_t FusedGraph::index_of(std::int64_t vertex) const {
  if (vertex == kQueryVertex) return vertices.empty() ? -1 : 0;
  const auto it = std::lower_bound(vertices.begin() + 1, vertices.end(), vertex);
  return it != vertices.end() && *it == vertex ? it - vertices.begin() : -1;
}

Eigen::MatrixXd FusedGraph::dense_transition() const {
  const auto n = static_cast<Eigen::Index>(size());
  Eigen::MatrixXd p = transition.toDense();
  for (Eigen::Index i = 0; i < n; ++i) {
    if (dangling[static_cast<std::size_t>(i)]) p.row(i).setConstant(1.0 / static_cast<double>(n));
  }
  return p;
}

FusedGraph fuse(const std::vector<CandidateGraph>& graphs) {
  if (graphs.empty()) throw Error("fuse: no graphs");
  std::vector<std::int64_t> ids;
  for (const auto& g : graphs) {
    if (g.vertices.empty() || g.vertices.front() != kQueryVertex) throw Error("fuse: graph without query vertex");
    ids.insert(ids.end(), g.vertices.begin() + 1, g.vertices.end());
  }
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());

  FusedGraph fused;
  fused.vertices.reserve(ids.size() + 1);
  fused.vertices.push_back(kQueryVertex);
  fused.vertices.insert(fused.vertices.end(), ids.begin(), ids.end());

  std::vector<Triplet> triplets;
  for (const auto& g : graphs) {
    std::vector<std::ptrdiff_t> map(g.vertices.size());
    for (std::size_t v = 0; v < g.vertices.size(); ++v) map[v] = fused.index_of(g.vertices[v]);
    for (Eigen::Index r = 0; r < g.omega.outerSize(); ++r) {
      for (SparseMatrix::InnerIterator it(g.omega, r); it; ++it) {
        triplets.emplace_back(static_cast<int>(map[static_cast<std::size_t>(it.row())]),
                              static_cast<int>(map[static_cast<std::size_t>(it.col())]), it.value());
      }
    }
  }
  fused.omega = from_triplets(fused.size(), triplets);
  return fused;
}

void transition_and_restart(FusedGraph& graph, double alpha, double restart_mass) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error("alpha must be in (0, 1)");
  if (!(restart_mass > 0.0 && restart_mass <= 1.0)) throw Error("restart mass must be in (0, 1]");
  const std::size_t n = graph.size();
  if (n == 0) throw Error("transition_and_restart: empty graph");
  graph.alpha = alpha;
  graph.transition = graph.omega;
  graph.dangling.assign(n, 0);
  for (Eigen::Index r = 0; r < graph.transition.outerSize(); ++r) {
    double total = 0.0;
    for (SparseMatrix::InnerIterator it(graph.transition, r); it; ++it) total += it.value();
    if (total > 0.0) {
      for (SparseMatrix::InnerIterator it(graph.transition, r); it; ++it) it.valueRef() /= total;
    } else {
      graph.dangling[static_cast<std::size_t>(r)] = 1;
    }
  }
  graph.restart.assign(n, 0.0);
  if (n == 1) {
    graph.restart[0] = 1.0;
    return;
  }
  graph.restart[0] = restart_mass;
  const double rest = (1.0 - restart_mass) / static_cast<double>(n - 1);
  for (std::size_t i = 1; i < n; ++i) graph.restart[i] = rest;
}

RankScores random_walk(const FusedGraph& graph, double tol, std::size_t max_iters, const WalkObserver& observer) {
  const std::size_t n = graph.size();
  if (graph.restart.size() != n || graph.dangling.size() != n) {
    throw Error("random_walk: transition/restart not initialised");
  }
  const double alpha = graph.alpha;
  RankScores out;
  std::vector<double> r = graph.restart;
  std::vector<double> next(n);
  if (observer) observer(r);
  while (out.iterations < max_iters) {
    std::fill(next.begin(), next.end(), 0.0);
    double dangling_mass = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (graph.dangling[i]) {
        dangling_mass += r[i];
        continue;
      }
      for (SparseMatrix::InnerIterator it(graph.transition, static_cast<Eigen::Index>(i)); it; ++it) {
        next[static_cast<std::size_t>(it.col())] += it.value() * r[i];
      }
    }
    const double spread = dangling_mass / static_cast<double>(n);
    double delta = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      next[j] = (1.0 - alpha) * graph.restart[j] + alpha * (next[j] + spread);
      delta += std::abs(next[j] - r[j]);
    }
    r.swap(next);
    ++out.iterations;
    out.deltas.push_back(delta);
    if (observer) observer(r);
    if (delta < tol) {
      out.converged = true;
      break;
    }
  }
  out.r = std::move(r);
  return out;
}

RankScores closed_form_rank(const FusedGraph& graph) {
  const auto n = static_cast<Eigen::Index>(graph.size());
  if (graph.restart.size() != graph.size()) throw Error("closed_form_rank: restart not initialised");
  const Eigen::MatrixXd a = Eigen::MatrixXd::Identity(n, n) - graph.alpha * graph.dense_transition().transpose();
  const Eigen::VectorXd restart = Eigen::Map<const Eigen::VectorXd>(graph.restart.data(), n);
  Eigen::VectorXd r = (1.0 - graph.alpha) * a.partialPivLu().solve(restart);
  if (!r.allFinite()) throw Error("closed_form_rank: linear solve failed");
  r /= r.sum();
  RankScores out;
  out.r.assign(r.data(), r.data() + n);
  out.converged = true;
  return out;
}

QsrfResult qsrf_search(std::span<const qrank::Table> tables, const std::vector<std::span<const float>>& query_views,
                       const QsrfParams& params) {
  if (tables.empty()) throw Error("qsrf_search: no tables");
  if (query_views.size() != tables.size()) {
    throw Error("qsrf_search: query supplies " + std::to_string(query_views.size()) + " views for " +
                std::to_string(tables.size()) + " tables");
  }

  std::vector<CandidateGraph> graphs(tables.size());
  parallel_for(tables.size(), [&](std::size_t m) {
    const auto& table = tables[m];
    const auto res = qrank::qrank_query(table, query_views[m], params.qrank);

    std::vector<std::size_t> rows = res.rows;
    std::sort(rows.begin(), rows.end());  // table rows ascend with ids
    PackedCodes codes(rows.size() + 1, table.codes.bits());
    std::copy(res.query_code.begin(), res.query_code.end(), codes.row(0).begin());
    std::vector<std::int64_t> vertices{kQueryVertex};
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const auto src = table.codes.row(rows[r]);
      std::copy(src.begin(), src.end(), codes.row(r + 1).begin());
      vertices.push_back(table.ids[rows[r]]);
    }
    const auto z = candidate_embedding(codes, table.anchors.anchor_codes, res.weights.ranking, table.anchors.s_nn);
    graphs[m] = build_candidate_graph(table.view_id, std::move(vertices), z);
  });

  QsrfResult out;
  FusedGraph fused = fuse(graphs);
  out.vertex_count = fused.size();
  if (fused.size() == 1) return out;
  transition_and_restart(fused, params.alpha, params.restart_mass);
  out.scores = random_walk(fused, params.walk_tol, params.walk_max_iters);
  out.ranked.reserve(fused.size() - 1);
  for (std::size_t v = 1; v < fused.size(); ++v) {
    out.ranked.push_back({static_cast<ItemId>(fused.vertices[v]), out.scores.r[v]});
  }
  std::sort(out.ranked.begin(), out.ranked.end(), descending_score);
  return out;
}

}  // namespace mvhash::fusion
