// phonematch: stage-by-stage driver for centroid-to-phone matching.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "phonematch/fixture.hpp"
#include "phonematch/pipeline.hpp"

namespace fs = std::filesystem;
using namespace phonematch;

namespace {

struct GlobalOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  std::vector<std::string> overrides;
};

PipelineConfig build_config(const GlobalOptions& g) {
  PipelineConfig cfg;
  if (!g.config_path.empty()) {
    if (!fs::exists(g.config_path)) throw MissingInput(g.config_path);
    cfg = load_config(g.config_path);
  }
  for (const auto& kv : g.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
    auto key = kv.substr(0, eq);
    while (!key.empty() && key.back() == ' ') key.pop_back();
    cfg.set(key, kv.substr(eq + 1), fs::current_path());
  }
  if (g.seed) cfg.seed = *g.seed;
  if (!g.out_dir.empty()) cfg.out_dir = g.out_dir;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Match k-means type vectors to phone embeddings with entropic Gromov-Wasserstein"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOptions g;
  app.add_option("--config", g.config_path, "key = value configuration file");
  app.add_option("--seed", g.seed, "global seed; per-stage seeds are derived from it");
  app.add_option("--out-dir", g.out_dir, "directory for stage artifacts and manifest.tsv");
  app.add_option("-s,--set", g.overrides, "override a config key (key=value), repeatable");

  std::vector<std::pair<CLI::App*, Stage>> stage_cmds;
  for (Stage s : kAllStages) {
    auto* sub = app.add_subcommand(std::string(stage_name(s)), "run the " + std::string(stage_name(s)) + " stage");
    stage_cmds.emplace_back(sub, s);
  }
  auto* pipeline = app.add_subcommand("pipeline", "collapse -> kmeans -> cbow -> match -> label -> evaluate");

  FixtureOptions fx;
  std::string fixture_dir;
  auto* fixture = app.add_subcommand("fixture", "write the synthetic isometry fixture");
  fixture->add_option("dir", fixture_dir, "output directory")->required();
  fixture->add_option("--phones", fx.phones);
  fixture->add_option("--dim", fx.dim);
  fixture->add_option("--utterances", fx.utterances);
  fixture->add_option("--noise", fx.noise);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (fixture->parsed()) {
      fx.seed = g.seed.value_or(0);
      write_fixture(fixture_dir, make_fixture(fx));
      return kExitOk;
    }
    const PipelineConfig cfg = build_config(g);
    if (pipeline->parsed()) {
      for (const auto& o : run_pipeline(cfg)) {
        std::cerr << stage_name(o.stage) << (o.skipped ? ": up to date\n" : ": done\n");
      }
      return kExitOk;
    }
    for (const auto& [cmd, stage] : stage_cmds) {
      if (cmd->parsed()) {
        run_stage(stage, cfg);
        std::cerr << stage_name(stage) << ": done\n";
      }
    }
    return kExitOk;
  } catch (...) {
    std::string message;
    const int code = exit_code_for_current_exception(message);
    std::cerr << "phonematch: " << message << '\n';
    return code;
  }
}
