#pragma once

#include <filesystem>
#include <vector>

#include "evdro/config.hpp"

namespace evdro::pipeline {

/// Moments artifact persisted between the moments and solve stages.
struct MomentsFile {
  Eigen::VectorXd mean_mw;
  Eigen::VectorXd n_bar;
  Eigen::VectorXd pm_mean_mw;  // price-adjusted mean
  Eigen::MatrixXd cov_mw;
  int k_sc = 0;
};

void write_dispatch(const std::filesystem::path& path, const dopf::Dispatch& d,
                    const net::Network& network);
dopf::Dispatch read_dispatch(const std::filesystem::path& path);

MomentsFile read_moments(const std::filesystem::path& out_dir);

/// Pipeline stages; each one reads its upstream artifacts from cfg.out_dir
/// and writes its own, so running the stages by hand reproduces `pipeline`.
void stage_simulate(const config::PipelineConfig& cfg);
void stage_moments(const config::PipelineConfig& cfg);
void stage_solve(const config::PipelineConfig& cfg);
void stage_evaluate(const config::PipelineConfig& cfg);
void run_pipeline(const config::PipelineConfig& cfg);

}  // namespace evdro::pipeline
