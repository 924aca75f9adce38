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

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>

#include "mvhash/cli.hpp"
#include "mvhash/hashing.hpp"
#include "mvhash/qrank.hpp"

namespace mvhash::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::span<const float> row_span(const Matrix& m, std::size_t r) {
  return {m.data() + r * static_cast<std::size_t>(m.cols()), static_cast<std::size_t>(m.cols())};
}

std::vector<ScoredId> hamming_query(const qrank::Table& table, std::span<const float> x, std::size_t k) {
  const auto code = hashing::encode_one(table.model, x);
  auto ranked = hashing::hamming_rank(table.codes, code, k);
  // Table rows ascend with ids, so mapping keeps the tie order.
  for (auto& s : ranked) s.id = table.ids[s.id];
  return ranked;
}

std::vector<ScoredId> qrank_ranking(const qrank::Table& table, std::span<const float> x, std::size_t k,
                                    qrank::QRankParams params) {
  params.top_n = k;
  return qrank::qrank_query(table, x, params).ranked;
}

std::vector<ScoredId> qsrf_ranking(const index::MultiTableIndex& index, const std::vector<std::span<const float>>& xs,
                                   std::size_t k, const fusion::QsrfParams& params) {
  auto ranked = fusion::qsrf_search(index.tables, xs, params).ranked;
  if (ranked.size() > k) ranked.resize(k);
  return ranked;
}

bool qsrf_enabled(const RunConfig& config, std::size_t views) {
  const bool listed = std::find(config.modes.begin(), config.modes.end(), "qsrf") != config.modes.end();
  return listed && (views >= 2 || config.force_qsrf);
}

bool mode_listed(const RunConfig& config, const char* mode) {
  return std::find(config.modes.begin(), config.modes.end(), mode) != config.modes.end();
}

double sample_stddev(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  return out;
}

}  // namespace

QueryMode parse_mode(const std::string& name) {
  if (name == "hamming") return QueryMode::kHamming;
  if (name == "qrank") return QueryMode::kQRank;
  if (name == "qsrf") return QueryMode::kQsrf;
  throw Error("unknown mode '" + name + "' (expected hamming, qrank or qsrf)");
}

std::string mode_name(QueryMode mode) {
  switch (mode) {
    case QueryMode::kHamming: return "hamming";
    case QueryMode::kQRank: return "qrank";
    case QueryMode::kQsrf: return "qsrf";
  }
  return "?";
}

void cmd_synth(const RunConfig& config, const std::string& out_dir) {
  config.validate();
  const auto data = dataset::gen_synthetic(config.synthetic_spec());
  fs::create_directories(out_dir);
  RunConfig written = config;
  written.views.clear();
  for (std::size_t m = 0; m < data.view_count(); ++m) {
    const std::string name = "view" + std::to_string(m) + ".mvh";
    dataset::save_vectors((fs::path(out_dir) / name).string(), data.view(m).data, dataset::VectorFormat::kBinary);
    written.views.push_back({name, "binary"});
  }
  dataset::save_labels((fs::path(out_dir) / "labels.txt").string(), *data.labels());
  written.labels = "labels.txt";
  // Split sizes scaled to the generated data: half for training, a tenth as
  // queries, never above the configured counts.
  written.n_train = std::min(config.n_train, std::max<std::size_t>(1, data.size() / 2));
  written.n_query = std::min(config.n_query, data.size() / 10);
  save_config((fs::path(out_dir) / "config.json").string(), written);
}

void cmd_build(const RunConfig& config, const std::string& index_dir) {
  config.validate();
  const auto data = load_dataset(config);
  const auto split = dataset::make_split(data.size(), config.n_train, config.n_query, config.seed);
  const auto index = index::build_index(data, split, config.build_options(config.seed));
  index::save_index(index, index_dir);
}

json run_queries(const index::MultiTableIndex& index, const std::vector<std::optional<Matrix>>& query_views,
                 const RunConfig& config, const QueryRequest& request) {
  const std::size_t m_count = index.tables.size();
  if (request.k < 1) throw Error("k must be >= 1");
  if (query_views.size() > m_count) throw Error("more query views than index tables");
  std::vector<std::size_t> needed;
  if (request.mode == QueryMode::kQsrf) {
    for (std::size_t m = 0; m < m_count; ++m) needed.push_back(m);
  } else {
    if (request.view >= m_count) throw Error("view " + std::to_string(request.view) + " is not in the index");
    needed.push_back(request.view);
  }
  std::size_t n_queries = 0;
  bool first = true;
  for (std::size_t m : needed) {
    if (m >= query_views.size() || !query_views[m]) {
      throw Error("view " + std::to_string(m) + ": missing query vectors for mode " + mode_name(request.mode));
    }
    const Matrix& q = *query_views[m];
    const auto dim = index.tables[m].model.dim();
    if (static_cast<std::size_t>(q.cols()) != dim) {
      throw Error("view " + std::to_string(m) + ": query dimension " + std::to_string(q.cols()) +
                  " does not match index dimension " + std::to_string(dim));
    }
    if (!first && static_cast<std::size_t>(q.rows()) != n_queries) {
      throw Error("view " + std::to_string(m) + ": query count differs from view " + std::to_string(needed[0]));
    }
    n_queries = static_cast<std::size_t>(q.rows());
    first = false;
  }

  const auto qparams = config.qrank_params();
  const auto sparams = config.qsrf_params();
  std::vector<std::vector<ScoredId>> results(n_queries);
  parallel_for(n_queries, [&](std::size_t i) {
    switch (request.mode) {
      case QueryMode::kHamming:
        results[i] = hamming_query(index.tables[request.view], row_span(*query_views[request.view], i), request.k);
        break;
      case QueryMode::kQRank:
        results[i] =
            qrank_ranking(index.tables[request.view], row_span(*query_views[request.view], i), request.k, qparams);
        break;
      case QueryMode::kQsrf: {
        std::vector<std::span<const float>> xs;
        for (std::size_t m = 0; m < m_count; ++m) xs.push_back(row_span(*query_views[m], i));
        results[i] = qsrf_ranking(index, xs, request.k, sparams);
        break;
      }
    }
  });

  json out;
  out["mode"] = mode_name(request.mode);
  out["k"] = request.k;
  if (request.mode != QueryMode::kQsrf) out["view"] = request.view;
  // qsrf scores are visiting probabilities (higher is closer); the other
  // modes report distances (lower is closer).
  out["score"] = request.mode == QueryMode::kQsrf ? "probability" : "distance";
  json queries = json::array();
  for (std::size_t i = 0; i < n_queries; ++i) {
    json items = json::array();
    for (const auto& s : results[i]) items.push_back({{"id", s.id}, {"score", s.score}});
    queries.push_back({{"query", i}, {"results", items}});
  }
  out["queries"] = queries;
  return out;
}

void cmd_query(const std::string& index_dir, const std::vector<std::optional<ViewSpec>>& query_files,
               const RunConfig& config, const QueryRequest& request, std::ostream& out) {
  config.validate();
  const auto index = index::load_index(index_dir);
  std::vector<std::optional<Matrix>> views(query_files.size());
  for (std::size_t m = 0; m < query_files.size(); ++m) {
    if (!query_files[m]) continue;
    try {
      views[m] = dataset::load_vectors(query_files[m]->path, dataset::parse_format(query_files[m]->format),
                                       static_cast<int>(m))
                     .data;
    } catch (const Error& e) {
      throw Error("view " + std::to_string(m) + ": " + e.what());
    }
  }
  out << run_queries(index, views, config, request).dump(2) << '\n';
}

std::vector<MethodRankings> rank_split_queries(const dataset::MultiViewDataset& data,
                                               const index::MultiTableIndex& index, const RunConfig& config) {
  const std::size_t m_count = index.tables.size();
  if (m_count != data.view_count()) throw Error("index and dataset disagree on the number of views");
  const auto& queries = index.query_ids;
  const std::size_t full = index.database_ids.size();
  std::vector<MethodRankings> methods;
  enum Kind { kH, kQ, kS };
  std::vector<std::pair<Kind, std::size_t>> plan;
  for (std::size_t m = 0; m < m_count; ++m) {
    if (mode_listed(config, "hamming")) {
      methods.push_back({"hamming@v" + std::to_string(m), {}});
      plan.emplace_back(kH, m);
    }
    if (mode_listed(config, "qrank")) {
      methods.push_back({"qrank@v" + std::to_string(m), {}});
      plan.emplace_back(kQ, m);
    }
  }
  if (qsrf_enabled(config, m_count)) {
    methods.push_back({"qsrf", {}});
    plan.emplace_back(kS, 0);
  }
  for (auto& method : methods) method.rankings.resize(queries.size());

  const auto qparams = config.qrank_params();
  const auto sparams = config.qsrf_params();
  parallel_for(queries.size(), [&](std::size_t i) {
    const std::size_t row = queries[i];
    for (std::size_t p = 0; p < plan.size(); ++p) {
      const auto [kind, m] = plan[p];
      std::vector<ScoredId> ranked;
      if (kind == kH) {
        ranked = hamming_query(index.tables[m], row_span(data.view(m).data, row), full);
      } else if (kind == kQ) {
        ranked = qrank_ranking(index.tables[m], row_span(data.view(m).data, row), full, qparams);
      } else {
        std::vector<std::span<const float>> xs;
        for (std::size_t v = 0; v < m_count; ++v) xs.push_back(row_span(data.view(v).data, row));
        ranked = qsrf_ranking(index, xs, full, sparams);
      }
      methods[p].rankings[i] = ids_of(ranked);
    }
  });
  return methods;
}

RunMetrics evaluate_run(const dataset::MultiViewDataset& data, const RunConfig& config, std::uint64_t seed,
                        const index::MultiTableIndex* fixed) {
  if (!data.labels()) throw Error("evaluation needs labels");
  index::MultiTableIndex built;
  if (fixed == nullptr) {
    const auto split = dataset::make_split(data.size(), config.n_train, config.n_query, seed);
    built = index::build_index(data, split, config.build_options(seed));
    fixed = &built;
  }
  const auto truth = dataset::ground_truth(*data.labels(), fixed->query_ids, fixed->database_ids);
  const auto methods = rank_split_queries(data, *fixed, config);
  RunMetrics run;
  run.seed = seed;
  for (const auto& method : methods) {
    std::size_t depth = config.pr_depth;
    if (depth == 0) {
      depth = std::numeric_limits<std::size_t>::max();
      for (const auto& r : method.rankings) depth = std::min(depth, r.size());
      if (method.rankings.empty()) depth = 0;
    }
    run.by_mode[method.mode] = eval::compute_metrics(method.rankings, truth, config.eval_ks, depth);
  }
  return run;
}

std::vector<RunMetrics> cmd_eval(const RunConfig& config, const std::string& out_dir,
                                 const std::optional<std::string>& index_dir) {
  config.validate();
  const auto data = load_dataset(config);
  std::vector<RunMetrics> runs;
  if (index_dir) {
    const auto index = index::load_index(*index_dir);
    if (config.runs > 1) warn("a fixed index gives identical runs; evaluating once");
    runs.push_back(evaluate_run(data, config, config.seed, &index));
  } else {
    for (std::size_t r = 0; r < config.runs; ++r) runs.push_back(evaluate_run(data, config, config.seed + r));
  }

  fs::create_directories(out_dir);
  // Mode order follows the first run (every run evaluates the same modes).
  std::vector<std::string> mode_order;
  for (const auto& [mode, _] : runs.front().by_mode) mode_order.push_back(mode);

  auto csv = open_output(fs::path(out_dir) / "metrics.csv");
  csv << "mode,metric,k,mean,stddev\n";
  json modes_json = json::object();
  for (const auto& mode : mode_order) {
    json mj = json::object();
    auto emit = [&](const std::string& metric, const std::string& k, const std::vector<double>& values) {
      csv << mode << ',' << metric << ',' << k << ',' << fmt(mean_of(values)) << ',' << fmt(sample_stddev(values))
          << '\n';
      mj[metric][k] = {{"mean", mean_of(values)}, {"stddev", sample_stddev(values)}, {"per_run", values}};
    };
    const auto& first = runs.front().by_mode.at(mode);
    for (const auto& [name, table] :
         {std::pair{"precision", &eval::Metrics::precision_at}, std::pair{"recall", &eval::Metrics::recall_at},
          std::pair{"ap", &eval::Metrics::ap_at}}) {
      for (const auto& [k, _] : first.*table) {
        std::vector<double> values;
        for (const auto& run : runs) values.push_back((run.by_mode.at(mode).*table).at(k));
        emit(name, std::to_string(k), values);
      }
    }
    std::vector<double> maps;
    json valid = json::array(), skipped = json::array();
    for (const auto& run : runs) {
      const auto& m = run.by_mode.at(mode);
      maps.push_back(m.map_score);
      valid.push_back(m.valid_queries);
      skipped.push_back(m.skipped_queries);
    }
    emit("map", "all", maps);
    mj["valid_queries"] = valid;
    mj["skipped_queries"] = skipped;
    modes_json[mode] = mj;
  }

  auto pr = open_output(fs::path(out_dir) / "pr_curve.csv");
  pr << "mode,recall,precision\n";
  for (const auto& mode : mode_order) {
    std::size_t depth = std::numeric_limits<std::size_t>::max();
    for (const auto& run : runs) depth = std::min(depth, run.by_mode.at(mode).pr_curve.size());
    for (std::size_t i = 0; i < depth; ++i) {
      double r = 0.0, p = 0.0;
      for (const auto& run : runs) {
        r += run.by_mode.at(mode).pr_curve[i].recall;
        p += run.by_mode.at(mode).pr_curve[i].precision;
      }
      const auto n = static_cast<double>(runs.size());
      pr << mode << ',' << fmt(r / n) << ',' << fmt(p / n) << '\n';
    }
  }

  json report;
  report["runs"] = runs.size();
  json seeds = json::array();
  for (const auto& run : runs) seeds.push_back(run.seed);
  report["seeds"] = seeds;
  report["modes"] = modes_json;
  report["config"] = to_json(config);
  auto js = open_output(fs::path(out_dir) / "metrics.json");
  js << report.dump(2) << '\n';
  if (!csv || !pr || !js) throw Error("failed writing metrics to '" + out_dir + "'");
  return runs;
}

}  // namespace mvhash::cli
