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

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mvhash/dataset.hpp"
#include "mvhash/eval.hpp"
#include "mvhash/fusion.hpp"
#include "mvhash/index.hpp"

namespace mvhash::cli {

inline constexpr std::array<std::size_t, 2> kBitPresets{48, 96};

struct ViewSpec {
  std::string path;
  std::string format = "binary";
};

/// Every tunable of a run. Stored as a flat JSON object; keys match the
/// field names below.
struct RunConfig {
  std::vector<ViewSpec> views;
  std::string labels;

  std::size_t bits = 48;
  std::string family = "lsh";
  std::size_t itq_iters = 50;

  std::size_t anchors = 300;
  std::string anchor_method = "random";
  std::size_t s_nn = 5;
  std::size_t landmarks = 25;

  double gamma = 1.0;
  double lambda = 1.0;
  double mi_pseudocount = qrank::kDefaultPseudocount;
  bool calibrate = true;
  double calib_tol = 1e-8;
  std::size_t calib_max_iters = 1000;

  double alpha = 0.85;
  double restart = 0.99;
  std::size_t top_n = 1000;
  double walk_tol = 1e-10;
  std::size_t walk_max_iters = 1000;

  std::uint64_t seed = 1;
  std::size_t runs = 10;
  std::size_t n_train = 5000;
  std::size_t n_query = 3000;
  std::vector<std::size_t> eval_ks{5, 10, 100};
  /// PR curve depth; 0 evaluates every rank position of the shortest list.
  std::size_t pr_depth = 0;
  std::vector<std::string> modes{"hamming", "qrank", "qsrf"};
  bool force_qsrf = false;
  std::string output = "out";
  unsigned threads = 0;

  std::size_t synth_clusters = 10;
  std::size_t synth_per_cluster = 200;
  std::size_t synth_views = 2;
  std::size_t synth_dim = 32;
  double synth_noise = 0.3;

  /// Throws Error naming the first out-of-range field.
  void validate() const;

  index::BuildOptions build_options(std::uint64_t seed_override) const;
  qrank::QRankParams qrank_params() const;
  fusion::QsrfParams qsrf_params() const;
  dataset::SyntheticSpec synthetic_spec() const;
};

nlohmann::json to_json(const RunConfig& config);
/// Unknown keys are rejected so typos do not silently fall back to defaults.
RunConfig from_json(const nlohmann::json& j, const RunConfig& base = {});
RunConfig load_config(const std::string& path);

/// Scalar config keys, in declaration order ('views' excluded).
std::vector<std::string> config_keys();
/// Sets one key from command-line text. The text is read as JSON when it
/// parses (numbers, booleans, arrays) and as a plain string otherwise.
void apply_override(RunConfig& config, const std::string& key, const std::string& value);
void save_config(const std::string& path, const RunConfig& config);

dataset::MultiViewDataset load_dataset(const RunConfig& config);

/// Writes view<m>.mvh, labels.txt and a config.json pointing at them.
void cmd_synth(const RunConfig& config, const std::string& out_dir);

/// Trains every view and writes the index bundle.
void cmd_build(const RunConfig& config, const std::string& index_dir);

enum class QueryMode { kHamming, kQRank, kQsrf };
QueryMode parse_mode(const std::string& name);
std::string mode_name(QueryMode mode);

struct QueryRequest {
  QueryMode mode = QueryMode::kQsrf;
  std::size_t k = 10;
  /// Table used by the single-view modes.
  std::size_t view = 0;
};

/// Ranks every query row. query_views[m] holds the queries in view m; the
/// single-view modes only need the selected view.
nlohmann::json run_queries(const index::MultiTableIndex& index, const std::vector<std::optional<Matrix>>& query_views,
                           const RunConfig& config, const QueryRequest& request);

void cmd_query(const std::string& index_dir, const std::vector<std::optional<ViewSpec>>& query_files,
               const RunConfig& config, const QueryRequest& request, std::ostream& out);

/// Ranked global ids for one evaluated method on every split query.
struct MethodRankings {
  std::string mode;
  std::vector<std::vector<ItemId>> rankings;
};

/// Mode tags are "hamming@v<m>", "qrank@v<m>" and "qsrf".
std::vector<MethodRankings> rank_split_queries(const dataset::MultiViewDataset& data,
                                               const index::MultiTableIndex& index, const RunConfig& config);

struct RunMetrics {
  std::uint64_t seed = 0;
  std::map<std::string, eval::Metrics> by_mode;
};

/// One evaluation run: split and index derived from 'seed' unless a fixed
/// index is supplied.
RunMetrics evaluate_run(const dataset::MultiViewDataset& data, const RunConfig& config, std::uint64_t seed,
                        const index::MultiTableIndex* fixed = nullptr);

/// Runs config.runs evaluations and writes metrics.csv, metrics.json and
/// pr_curve.csv into out_dir. Returns the per-run metrics.
std::vector<RunMetrics> cmd_eval(const RunConfig& config, const std::string& out_dir,
                                 const std::optional<std::string>& index_dir = std::nullopt);

}  // namespace mvhash::cli
