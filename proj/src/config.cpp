#include "evdro/config.hpp"

#include <fstream>
#include <set>

#include <json.hpp>

#include "evdro/csv.hpp"
#include "evdro/rng.hpp"

namespace evdro::config {

namespace {

using nlohmann::json;

void expect_keys(const json& j, const std::string& block,
                 const std::set<std::string>& allowed) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!allowed.count(it.key()))
      throw Error("config: unknown field '" + block + "." + it.key() + "'");
  }
}

behavior::Range range_of(const json& j, const std::string& name) {
  if (!j.is_array() || j.size() != 2)
    throw Error("config: field '" + name + "' must be a [lo, hi] pair");
  return {j[0].get<double>(), j[1].get<double>()};
}

}  // namespace

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("missing file: " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw Error("config parse error in " + path.string() + ": " + e.what());
  }

  PipelineConfig cfg;
  expect_keys(j, "", {"network", "population", "scenario", "ambiguity", "dopf",
                      "eval", "out", "threads"});

  cfg.network_dir = j.at("network").get<std::string>();
  if (j.contains("out")) cfg.out_dir = j.at("out").get<std::string>();
  if (j.contains("threads")) cfg.threads = j.at("threads").get<int>();

  const json& p = j.at("population");
  expect_keys(p, "population",
              {"arrival_rate", "pool_factor", "ch_avg_mw", "service_minutes",
               "beta", "bias", "tau_q_price", "tau_p_add_price",
               "tau_q_congestion", "tau_p_add_congestion", "tau_q_bias",
               "tau_p_add_bias"});
  cfg.population.arrival_rate = p.at("arrival_rate").get<std::vector<double>>();
  if (p.contains("pool_factor")) cfg.population.pool_factor = p.at("pool_factor");
  cfg.population.ch_avg_mw = p.at("ch_avg_mw");
  if (p.contains("service_minutes"))
    cfg.population.service_minutes = p.at("service_minutes");
  auto set_range = [&](const char* key, behavior::Range& dst) {
    if (p.contains(key)) dst = range_of(p.at(key), std::string("population.") + key);
  };
  set_range("beta", cfg.population.beta);
  set_range("bias", cfg.population.bias);
  set_range("tau_q_price", cfg.population.tau_q_price);
  set_range("tau_p_add_price", cfg.population.tau_p_add_price);
  set_range("tau_q_congestion", cfg.population.tau_q_congestion);
  set_range("tau_p_add_congestion", cfg.population.tau_p_add_congestion);
  set_range("tau_q_bias", cfg.population.tau_q_bias);
  set_range("tau_p_add_bias", cfg.population.tau_p_add_bias);
  cfg.population.validate();

  const json& sc = j.at("scenario");
  expect_keys(sc, "scenario", {"k_sc", "seed"});
  cfg.scenario.k_sc = sc.at("k_sc");
  cfg.scenario.seed = sc.at("seed").get<std::uint64_t>();
  if (cfg.scenario.k_sc < 2) throw Error("config: scenario.k_sc must be >= 2");

  const json& am = j.at("ambiguity");
  expect_keys(am, "ambiguity", {"gamma1", "gamma2", "epsilon", "ridge"});
  cfg.ambiguity.gamma1 = am.at("gamma1");
  cfg.ambiguity.gamma2 = am.at("gamma2");
  cfg.ambiguity.epsilon = am.at("epsilon");
  if (am.contains("ridge")) cfg.ambiguity.ridge = am.at("ridge");
  ambiguity::AmbiguityParams check{cfg.ambiguity.gamma1, cfg.ambiguity.gamma2,
                                   cfg.ambiguity.epsilon, ambiguity::SetMode::M1};
  check.validate();

  const json& dp = j.at("dopf");
  expect_keys(dp, "dopf", {"z", "polygon_edges", "modes"});
  if (dp.contains("z")) cfg.dopf.z = dp.at("z");
  if (dp.contains("polygon_edges")) cfg.dopf.polygon_edges = dp.at("polygon_edges");
  if (dp.contains("modes")) {
    cfg.dopf.modes.clear();
    for (const auto& m : dp.at("modes"))
      cfg.dopf.modes.push_back(dopf::mode_from_name(m.get<std::string>()));
  }
  if (cfg.dopf.modes.empty()) throw Error("config: dopf.modes must be non-empty");

  const json& ev = j.at("eval");
  expect_keys(ev, "eval",
              {"realizations", "seed", "source", "penalty_balance_per_mw",
               "penalty_line_per_mva", "penalty_voltage_per_pu2", "tol"});
  cfg.eval.realizations = ev.at("realizations");
  cfg.eval.seed = ev.at("seed").get<std::uint64_t>();
  if (cfg.eval.realizations < 1)
    throw Error("config: eval.realizations must be >= 1");
  if (ev.contains("source")) {
    std::string s = ev.at("source");
    if (s == "gaussian")
      cfg.eval.source = posteval::RealizationSource::gaussian_moments;
    else if (s == "behavioral")
      cfg.eval.source = posteval::RealizationSource::behavioral_resim;
    else
      throw Error("config: eval.source must be gaussian|behavioral");
  }
  if (ev.contains("penalty_balance_per_mw"))
    cfg.eval.penalties.balance_per_mw = ev.at("penalty_balance_per_mw");
  if (ev.contains("penalty_line_per_mva"))
    cfg.eval.penalties.line_per_mva = ev.at("penalty_line_per_mva");
  if (ev.contains("penalty_voltage_per_pu2"))
    cfg.eval.penalties.voltage_per_pu2 = ev.at("penalty_voltage_per_pu2");
  if (ev.contains("tol")) cfg.eval.tol = ev.at("tol");

  return cfg;
}

void apply_overrides(PipelineConfig& cfg, const std::filesystem::path* out,
                     const std::uint64_t* seed, const int* threads,
                     const std::vector<std::string>* modes) {
  if (out) cfg.out_dir = *out;
  if (seed) {
    cfg.scenario.seed = mix_seed(*seed, 1);
    cfg.eval.seed = mix_seed(*seed, 2);
  }
  if (threads) cfg.threads = *threads;
  if (modes && !modes->empty()) {
    cfg.dopf.modes.clear();
    for (const auto& m : *modes) cfg.dopf.modes.push_back(dopf::mode_from_name(m));
  }
}

}  // namespace evdro::config
