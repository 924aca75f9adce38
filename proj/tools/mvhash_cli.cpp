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

// mvhash: synth / build / query / eval front end.

#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mvhash/cli.hpp"

namespace {

using mvhash::cli::RunConfig;

struct Overrides {
  std::map<std::string, std::string> values;

  // One flag per config key, accepted with either '_' or '-'.
  void attach(CLI::App* cmd) {
    for (const auto& key : mvhash::cli::config_keys()) {
      std::string names = "--" + key;
      std::string dashed = key;
      for (auto& c : dashed) c = c == '_' ? '-' : c;
      if (dashed != key) names += ",--" + dashed;
      cmd->add_option_function<std::string>(names, [this, key](const std::string& v) { values[key] = v; },
                                             "override config key '" + key + "'");
    }
  }
};

RunConfig resolve_config(const std::string& path, const Overrides& overrides) {
  RunConfig config = path.empty() ? RunConfig{} : mvhash::cli::load_config(path);
  for (const auto& [key, value] : overrides.values) mvhash::cli::apply_override(config, key, value);
  if (config.threads != 0) mvhash::set_max_threads(config.threads);
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  mvhash::set_warning_sink([](std::string_view msg) { std::cerr << "warning: " << msg << '\n'; });

  CLI::App app{"Multi-view binary hashing search with query-adaptive bit weights and graph rank fusion"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::string index_dir;

  auto* synth = app.add_subcommand("synth", "generate a synthetic multi-view dataset");
  Overrides synth_over;
  synth->add_option("--config", config_path, "JSON run config");
  synth->add_option("-o,--out", out_dir, "output directory")->required();
  synth_over.attach(synth);

  auto* build = app.add_subcommand("build", "train hash tables and write an index bundle");
  Overrides build_over;
  build->add_option("--config", config_path, "JSON run config")->required();
  build->add_option("-i,--index", index_dir, "index bundle directory")->required();
  build_over.attach(build);

  auto* query = app.add_subcommand("query", "rank query vectors against an index bundle");
  Overrides query_over;
  std::vector<std::string> query_paths;
  std::string query_format = "binary";
  std::string mode = "qsrf";
  std::size_t k = 10;
  std::size_t view = 0;
  query->add_option("--config", config_path, "JSON run config (query-time parameters)");
  query->add_option("-i,--index", index_dir, "index bundle directory")->required();
  query->add_option("-q,--query", query_paths,
                    "query vectors, one file per view in view order; '-' skips a view")
      ->required();
  query->add_option("--query-format", query_format, "binary or csv")->check(CLI::IsMember({"binary", "csv"}));
  query->add_option("-m,--mode", mode, "hamming, qrank or qsrf")->check(CLI::IsMember({"hamming", "qrank", "qsrf"}));
  query->add_option("-k", k, "results per query")->check(CLI::PositiveNumber);
  query->add_option("--view", view, "table used by hamming and qrank");
  query_over.attach(query);

  auto* evaluate = app.add_subcommand("eval", "evaluate ranking quality over repeated runs");
  Overrides eval_over;
  evaluate->add_option("--config", config_path, "JSON run config")->required();
  evaluate->add_option("-i,--index", index_dir, "evaluate a fixed index bundle instead of rebuilding per run");
  evaluate->add_option("-o,--out", out_dir, "metrics directory (defaults to the config 'output')");
  eval_over.attach(evaluate);

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) {
      mvhash::cli::cmd_synth(resolve_config(config_path, synth_over), out_dir);
    } else if (build->parsed()) {
      mvhash::cli::cmd_build(resolve_config(config_path, build_over), index_dir);
    } else if (query->parsed()) {
      const RunConfig config = resolve_config(config_path, query_over);
      std::vector<std::optional<mvhash::cli::ViewSpec>> files;
      for (const auto& p : query_paths) {
        if (p == "-") {
          files.emplace_back();
        } else {
          files.push_back(mvhash::cli::ViewSpec{p, query_format});
        }
      }
      mvhash::cli::cmd_query(index_dir, files, config, {mvhash::cli::parse_mode(mode), k, view}, std::cout);
    } else if (evaluate->parsed()) {
      const RunConfig config = resolve_config(config_path, eval_over);
      const std::string dir = out_dir.empty() ? config.output : out_dir;
      mvhash::cli::cmd_eval(config, dir, index_dir.empty() ? std::nullopt : std::optional<std::string>(index_dir));
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
