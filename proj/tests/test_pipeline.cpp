#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "evdro/error.hpp"
#include "evdro/pipeline.hpp"

using namespace evdro;
namespace fs = std::filesystem;

namespace {

fs::path write_config(const std::string& tag, const std::string& out_dir,
                      int k_sc = 80, int realizations = 120) {
  std::ostringstream os;
  os << R"({
  "network": "data/ieee33",
  "population": {
    "arrival_rate": [12, 12, 12, 12],
    "ch_avg_mw": 0.011,
    "beta": [0.02, 0.08]
  },
  "scenario": { "k_sc": )"
     << k_sc << R"(, "seed": 7 },
  "ambiguity": { "gamma1": 0.1, "gamma2": 1.0, "epsilon": 0.1, "ridge": 0.001 },
  "dopf": { "modes": ["deterministic", "drcc", "drcc_pm"] },
  "eval": { "realizations": )"
     << realizations << R"(, "seed": 1 },
  "out": ")"
     << out_dir << R"("
})";
  auto path = fs::temp_directory_path() / ("evdro_cfg_" + tag + ".json");
  std::ofstream(path) << os.str();
  return path;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

const std::vector<std::string> kOutputs = {
    "scenarios.csv",      "moments.csv",          "cov.csv",
    "dispatch_deterministic.csv", "dispatch_drcc.csv", "dispatch_drcc_pm.csv",
    "eval_summary.csv",   "violations.csv",       "comparison.txt"};

}  // namespace

TEST_CASE("full pipeline emits every artifact and is byte-reproducible") {
  auto out1 = fs::temp_directory_path() / "evdro_out_a";
  auto out2 = fs::temp_directory_path() / "evdro_out_b";
  fs::remove_all(out1);
  fs::remove_all(out2);

  auto cfg1 = config::load_config(write_config("a", out1.string()));
  pipeline::run_pipeline(cfg1);
  for (const auto& f : kOutputs) CHECK(fs::exists(out1 / f));

  auto cfg2 = config::load_config(write_config("b", out2.string()));
  pipeline::run_pipeline(cfg2);
  for (const auto& f : kOutputs) {
    CHECK(slurp(out1 / f) == slurp(out2 / f));
  }
}

TEST_CASE("running the stages by hand reproduces the pipeline output") {
  auto out1 = fs::temp_directory_path() / "evdro_out_c";
  auto out2 = fs::temp_directory_path() / "evdro_out_d";
  fs::remove_all(out1);
  fs::remove_all(out2);

  auto cfg1 = config::load_config(write_config("c", out1.string(), 40, 60));
  pipeline::run_pipeline(cfg1);

  auto cfg2 = config::load_config(write_config("d", out2.string(), 40, 60));
  pipeline::stage_simulate(cfg2);
  pipeline::stage_moments(cfg2);
  pipeline::stage_solve(cfg2);
  pipeline::stage_evaluate(cfg2);

  for (const auto& f : kOutputs) CHECK(slurp(out1 / f) == slurp(out2 / f));
}

TEST_CASE("solve without upstream artifacts names the missing file") {
  auto out = fs::temp_directory_path() / "evdro_out_missing";
  fs::remove_all(out);
  auto cfg = config::load_config(write_config("m", out.string()));
  CHECK_THROWS_WITH_AS(pipeline::stage_solve(cfg),
                       doctest::Contains("missing scenarios.csv"), Error);

  // with scenarios present but no moments, the next missing stage is named
  pipeline::stage_simulate(cfg);
  CHECK_THROWS_WITH_AS(pipeline::stage_solve(cfg),
                       doctest::Contains("missing moments.csv"), Error);

  CHECK_THROWS_WITH_AS(pipeline::stage_evaluate(cfg),
                       doctest::Contains("moments.csv"), Error);
}

TEST_CASE("config errors name the offending field") {
  auto path = fs::temp_directory_path() / "evdro_cfg_bad.json";
  std::ofstream(path) << R"({"network": "data/ieee33", "population": {
    "arrival_rate": [1], "ch_avg_mw": 0.01, "typo_field": 3 },
    "scenario": {"k_sc": 10, "seed": 1},
    "ambiguity": {"gamma1": 0.1, "gamma2": 1.0, "epsilon": 0.1},
    "dopf": {}, "eval": {"realizations": 5, "seed": 1}})";
  CHECK_THROWS_WITH_AS(config::load_config(path),
                       doctest::Contains("population.typo_field"), Error);

  std::ofstream(path) << "{ not json";
  CHECK_THROWS_WITH_AS(config::load_config(path), doctest::Contains("parse error"),
                       Error);

  CHECK_THROWS_WITH_AS(config::load_config("/nope/cfg.json"),
                       doctest::Contains("missing file"), Error);
}

TEST_CASE("config validation rejects bad blocks") {
  auto path = fs::temp_directory_path() / "evdro_cfg_bad2.json";
  std::ofstream(path) << R"({"network": "data/ieee33",
    "population": {"arrival_rate": [1], "ch_avg_mw": 0.01},
    "scenario": {"k_sc": 1, "seed": 1},
    "ambiguity": {"gamma1": 0.1, "gamma2": 1.0, "epsilon": 0.1},
    "dopf": {}, "eval": {"realizations": 5, "seed": 1}})";
  CHECK_THROWS_WITH_AS(config::load_config(path), doctest::Contains("k_sc"), Error);

  std::ofstream(path) << R"({"network": "data/ieee33",
    "population": {"arrival_rate": [1], "ch_avg_mw": 0.01},
    "scenario": {"k_sc": 10, "seed": 1},
    "ambiguity": {"gamma1": 0.1, "gamma2": 1.0, "epsilon": 0.1},
    "dopf": {"modes": []}, "eval": {"realizations": 5, "seed": 1}})";
  CHECK_THROWS_WITH_AS(config::load_config(path), doctest::Contains("modes"), Error);
}

TEST_CASE("dispatch files round-trip through write and read") {
  auto out = fs::temp_directory_path() / "evdro_out_rt";
  fs::remove_all(out);
  auto cfg = config::load_config(write_config("rt", out.string(), 40, 50));
  pipeline::stage_simulate(cfg);
  pipeline::stage_moments(cfg);
  pipeline::stage_solve(cfg);

  auto d = pipeline::read_dispatch(out / "dispatch_drcc.csv");
  CHECK(d.mode == dopf::Mode::drcc);
  CHECK(d.p_g.size() == 4);
  CHECK(d.v2.size() == 33);
  CHECK(d.alpha.size() == 4);
  CHECK(std::abs(d.alpha.sum() - 1.0) <= 1e-8);
  CHECK(d.objective_value > 0.0);
  CHECK(d.eta == doctest::Approx(3.16227766).epsilon(1e-6));

  auto m = pipeline::read_moments(out);
  CHECK(m.mean_mw.size() == 4);
  CHECK(m.cov_mw.rows() == 4);
  CHECK(m.k_sc == 40);
  // price raises at the offered tariffs shrink the adjusted mean
  CHECK((m.pm_mean_mw.array() <= m.mean_mw.array() + 1e-12).all());
}

TEST_CASE("mode override narrows the solve set") {
  auto out = fs::temp_directory_path() / "evdro_out_mode";
  fs::remove_all(out);
  auto cfg = config::load_config(write_config("mode", out.string(), 40, 50));
  std::vector<std::string> only{"deterministic"};
  config::apply_overrides(cfg, nullptr, nullptr, nullptr, &only);
  pipeline::stage_simulate(cfg);
  pipeline::stage_moments(cfg);
  pipeline::stage_solve(cfg);
  CHECK(fs::exists(out / "dispatch_deterministic.csv"));
  CHECK_FALSE(fs::exists(out / "dispatch_drcc.csv"));
}
