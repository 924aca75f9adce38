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

#include <cmath>
#include <filesystem>
#include <fstream>
#include <type_traits>

#include "mvhash/anchors.hpp"
#include "mvhash/cli.hpp"
#include "mvhash/hashing.hpp"

namespace mvhash::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Single list of scalar fields shared by serialization and parsing. 'views'
// is the one structured key and is handled separately.
template <class Config, class Visit>
void visit_fields(Config& c, Visit&& f) {
  f("labels", c.labels);
  f("bits", c.bits);
  f("family", c.family);
  f("itq_iters", c.itq_iters);
  f("anchors", c.anchors);
  f("anchor_method", c.anchor_method);
  f("s_nn", c.s_nn);
  f("landmarks", c.landmarks);
  f("gamma", c.gamma);
  f("lambda", c.lambda);
  f("mi_pseudocount", c.mi_pseudocount);
  f("calibrate", c.calibrate);
  f("calib_tol", c.calib_tol);
  f("calib_max_iters", c.calib_max_iters);
  f("alpha", c.alpha);
  f("restart", c.restart);
  f("top_n", c.top_n);
  f("walk_tol", c.walk_tol);
  f("walk_max_iters", c.walk_max_iters);
  f("seed", c.seed);
  f("runs", c.runs);
  f("n_train", c.n_train);
  f("n_query", c.n_query);
  f("eval_ks", c.eval_ks);
  f("pr_depth", c.pr_depth);
  f("modes", c.modes);
  f("force_qsrf", c.force_qsrf);
  f("output", c.output);
  f("threads", c.threads);
  f("synth_clusters", c.synth_clusters);
  f("synth_per_cluster", c.synth_per_cluster);
  f("synth_views", c.synth_views);
  f("synth_dim", c.synth_dim);
  f("synth_noise", c.synth_noise);
}

void require(bool ok, const std::string& field, const std::string& rule) {
  if (!ok) throw Error("config: '" + field + "' must be " + rule);
}

bool finite_positive(double v) { return std::isfinite(v) && v > 0.0; }

}  // namespace

void RunConfig::validate() const {
  for (std::size_t m = 0; m < views.size(); ++m) {
    require(!views[m].path.empty(), "views", "non-empty paths");
    dataset::parse_format(views[m].format);
  }
  require(bits >= 1 && bits <= 4096, "bits", "in [1, 4096]");
  hashing::parse_family(family);
  anchors::parse_method(anchor_method);
  require(anchors >= 1, "anchors", ">= 1");
  require(s_nn >= 1 && s_nn <= anchors, "s_nn", "in [1, anchors]");
  require(landmarks >= 1 && landmarks <= anchors, "landmarks", "in [1, anchors]");
  require(std::isfinite(gamma) && gamma >= 0.0, "gamma", "finite and >= 0");
  require(finite_positive(lambda), "lambda", "> 0");
  require(finite_positive(mi_pseudocount), "mi_pseudocount", "> 0");
  require(finite_positive(calib_tol), "calib_tol", "> 0");
  require(calib_max_iters >= 1, "calib_max_iters", ">= 1");
  require(alpha > 0.0 && alpha < 1.0, "alpha", "in (0, 1)");
  require(restart > 0.0 && restart <= 1.0, "restart", "in (0, 1]");
  require(top_n >= 1, "top_n", ">= 1");
  require(finite_positive(walk_tol), "walk_tol", "> 0");
  require(walk_max_iters >= 1, "walk_max_iters", ">= 1");
  require(runs >= 1, "runs", ">= 1");
  require(n_train >= 1, "n_train", ">= 1");
  for (std::size_t k : eval_ks) require(k >= 1, "eval_ks", "all >= 1");
  require(!modes.empty(), "modes", "non-empty");
  for (const auto& m : modes) parse_mode(m);
  require(synth_clusters >= 1, "synth_clusters", ">= 1");
  require(synth_per_cluster >= 1, "synth_per_cluster", ">= 1");
  require(synth_views >= 1, "synth_views", ">= 1");
  require(synth_dim >= 1, "synth_dim", ">= 1");
  require(std::isfinite(synth_noise) && synth_noise >= 0.0, "synth_noise", "finite and >= 0");
}

index::BuildOptions RunConfig::build_options(std::uint64_t seed_override) const {
  index::BuildOptions o;
  o.family = hashing::parse_family(family);
  o.bits = bits;
  o.itq_iters = itq_iters;
  o.anchors.k = anchors;
  o.anchors.method = anchors::parse_method(anchor_method);
  o.anchors.s_nn = s_nn;
  o.anchors.seed = seed_override;
  o.lambda = lambda;
  o.mi_pseudocount = mi_pseudocount;
  o.seed = seed_override;
  return o;
}

qrank::QRankParams RunConfig::qrank_params() const {
  qrank::QRankParams p;
  p.gamma = gamma;
  p.lambda = lambda;
  p.landmarks = landmarks;
  p.tol = calib_tol;
  p.max_iters = calib_max_iters;
  p.calibrate = calibrate;
  p.top_n = top_n;
  return p;
}

fusion::QsrfParams RunConfig::qsrf_params() const {
  fusion::QsrfParams p;
  p.qrank = qrank_params();
  p.alpha = alpha;
  p.restart_mass = restart;
  p.walk_tol = walk_tol;
  p.walk_max_iters = walk_max_iters;
  return p;
}

dataset::SyntheticSpec RunConfig::synthetic_spec() const {
  return {synth_clusters, synth_per_cluster, synth_views, synth_dim, synth_noise, seed};
}

json to_json(const RunConfig& config) {
  json j = json::object();
  json views = json::array();
  for (const auto& v : config.views) views.push_back({{"path", v.path}, {"format", v.format}});
  j["views"] = views;
  visit_fields(config, [&](const char* name, const auto& value) { j[name] = value; });
  return j;
}

RunConfig from_json(const json& j, const RunConfig& base) {
  if (!j.is_object()) throw Error("config: expected a JSON object");
  RunConfig c = base;
  for (const auto& [key, value] : j.items()) {
    try {
      if (key == "views") {
        c.views.clear();
        for (const auto& v : value) {
          ViewSpec spec;
          spec.path = v.at("path").get<std::string>();
          spec.format = v.value("format", std::string("binary"));
          c.views.push_back(spec);
        }
        continue;
      }
      bool found = false;
      visit_fields(c, [&](const char* name, auto& field) {
        if (key == name) {
          field = value.get<std::decay_t<decltype(field)>>();
          found = true;
        }
      });
      if (!found) throw Error("config: unknown key '" + key + "'");
    } catch (const json::exception& e) {
      throw Error("config: bad value for '" + key + "': " + e.what());
    }
  }
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw Error("config '" + path + "' is not valid JSON: " + e.what());
  }
  RunConfig c = from_json(j);
  // Data paths are relative to the config file.
  const fs::path base = fs::path(path).parent_path();
  auto resolve = [&](std::string& p) {
    if (!p.empty() && fs::path(p).is_relative()) p = (base / p).lexically_normal().string();
  };
  for (auto& v : c.views) resolve(v.path);
  resolve(c.labels);
  return c;
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  RunConfig c;
  visit_fields(c, [&](const char* name, const auto&) { keys.emplace_back(name); });
  return keys;
}

void apply_override(RunConfig& config, const std::string& key, const std::string& value) {
  json v = json::parse(value, nullptr, false);
  if (v.is_discarded()) v = value;
  // A bare word that happens to be valid JSON ("true", "1") stays typed; a
  // string-valued key still receives text.
  bool is_string_key = false;
  bool is_list_key = false;
  visit_fields(config, [&](const char* name, const auto& field) {
    using T = std::decay_t<decltype(field)>;
    if (key != name) return;
    is_string_key = std::is_same_v<T, std::string>;
    is_list_key = std::is_same_v<T, std::vector<std::string>> || std::is_same_v<T, std::vector<std::size_t>>;
  });
  if (is_string_key) v = value;
  // Lists also accept "a,b,c".
  if (is_list_key && !v.is_array()) {
    json list = json::array();
    std::size_t start = 0;
    while (start <= value.size()) {
      const auto comma = std::min(value.find(',', start), value.size());
      const std::string item = value.substr(start, comma - start);
      json parsed = json::parse(item, nullptr, false);
      list.push_back(parsed.is_discarded() ? json(item) : parsed);
      start = comma + 1;
    }
    v = list;
  }
  config = from_json(json{{key, v}}, config);
}

void save_config(const std::string& path, const RunConfig& config) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write config '" + path + "'");
  out << to_json(config).dump(2) << '\n';
  if (!out) throw Error("config write failed for '" + path + "'");
}

dataset::MultiViewDataset load_dataset(const RunConfig& config) {
  if (config.views.empty()) throw Error("config lists no views");
  std::vector<dataset::VectorView> views;
  for (std::size_t m = 0; m < config.views.size(); ++m) {
    try {
      views.push_back(dataset::load_vectors(config.views[m].path, dataset::parse_format(config.views[m].format),
                                            static_cast<int>(m)));
    } catch (const Error& e) {
      throw Error("view " + std::to_string(m) + ": " + e.what());
    }
  }
  std::optional<dataset::Labels> labels;
  if (!config.labels.empty()) labels = dataset::load_labels(config.labels);
  return dataset::MultiViewDataset(std::move(views), std::move(labels));
}

}  // namespace mvhash::cli
