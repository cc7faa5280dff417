#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "evdro/csv.hpp"
#include "evdro/pipeline.hpp"

namespace {

struct CommonOptions {
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  int threads = 0;
  std::vector<std::string> modes;
  bool has_out = false, has_seed = false, has_threads = false;
};

void add_common(CLI::App* cmd, CommonOptions& opts) {
  cmd->add_option("--config", opts.config_path, "pipeline config file")->required();
  cmd->add_option("--out", opts.out_dir, "output directory (overrides config)")
      ->each([&](const std::string&) { opts.has_out = true; });
  cmd->add_option("--seed", opts.seed, "master seed (overrides config seeds)")
      ->each([&](const std::string&) { opts.has_seed = true; });
  cmd->add_option("--threads", opts.threads, "worker thread cap")
      ->each([&](const std::string&) { opts.has_threads = true; });
  cmd->add_option("--mode", opts.modes,
                  "dispatch modes to run (deterministic|drcc|drcc_pm)");
}

evdro::config::PipelineConfig make_config(const CommonOptions& opts) {
  auto cfg = evdro::config::load_config(opts.config_path);
  std::filesystem::path out = opts.out_dir;
  evdro::config::apply_overrides(cfg, opts.has_out ? &out : nullptr,
                                 opts.has_seed ? &opts.seed : nullptr,
                                 opts.has_threads ? &opts.threads : nullptr,
                                 opts.modes.empty() ? nullptr : &opts.modes);
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"EVCD-aware distributionally robust dispatch pipeline"};
  app.require_subcommand(1);

  CommonOptions opts;
  auto* simulate = app.add_subcommand("simulate", "generate demand scenarios");
  auto* moments = app.add_subcommand("moments", "estimate demand moments");
  auto* solve = app.add_subcommand("solve", "solve the dispatch models");
  auto* evaluate = app.add_subcommand("evaluate", "Monte-Carlo post-evaluation");
  auto* pipeline = app.add_subcommand("pipeline", "run all stages in order");
  for (auto* cmd : {simulate, moments, solve, evaluate, pipeline})
    add_common(cmd, opts);

  CLI11_PARSE(app, argc, argv);

  try {
    auto cfg = make_config(opts);
    if (simulate->parsed()) evdro::pipeline::stage_simulate(cfg);
    if (moments->parsed()) evdro::pipeline::stage_moments(cfg);
    if (solve->parsed()) evdro::pipeline::stage_solve(cfg);
    if (evaluate->parsed()) evdro::pipeline::stage_evaluate(cfg);
    if (pipeline->parsed()) evdro::pipeline::run_pipeline(cfg);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
