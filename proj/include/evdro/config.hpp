#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "evdro/ambiguity.hpp"
#include "evdro/behavior.hpp"
#include "evdro/dopf.hpp"
#include "evdro/posteval.hpp"

namespace evdro::config {

struct ScenarioBlock {
  int k_sc = 500;
  std::uint64_t seed = 7;
};

struct AmbiguityBlock {
  double gamma1 = 0.1;
  double gamma2 = 1.0;
  double epsilon = 0.1;
  double ridge = 1e-3;
};

struct DopfBlock {
  double z = 0.2;
  int polygon_edges = 12;
  std::vector<dopf::Mode> modes = {dopf::Mode::deterministic, dopf::Mode::drcc,
                                   dopf::Mode::drcc_pm};
};

struct EvalBlock {
  int realizations = 1000;
  std::uint64_t seed = 1;
  posteval::RealizationSource source = posteval::RealizationSource::gaussian_moments;
  posteval::Penalties penalties;
  double tol = 1e-4;  // per-unit
};

struct PipelineConfig {
  std::filesystem::path network_dir;
  behavior::PopulationConfig population;
  ScenarioBlock scenario;
  AmbiguityBlock ambiguity;
  DopfBlock dopf;
  EvalBlock eval;
  std::filesystem::path out_dir = "out";
  int threads = 1;
};

/// Parses the JSON pipeline config; unknown fields are rejected so typos
/// surface as errors naming the field.
PipelineConfig load_config(const std::filesystem::path& path);

/// Applies CLI overrides: master seed reseeds the scenario and eval streams.
void apply_overrides(PipelineConfig& cfg, const std::filesystem::path* out,
                     const std::uint64_t* seed, const int* threads,
                     const std::vector<std::string>* modes);

}  // namespace evdro::config
