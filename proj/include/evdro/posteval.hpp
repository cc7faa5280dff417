#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "evdro/behavior.hpp"
#include "evdro/dopf.hpp"
#include "evdro/netmodel.hpp"

namespace evdro::posteval {

enum class RealizationSource { gaussian_moments, behavioral_resim };

struct Realization {
  Eigen::VectorXd p_ev_actual;  // MW per station
  RealizationSource source = RealizationSource::gaussian_moments;
  int vehicle_count = -1;  // behavioral source only
};

struct Penalties {
  double balance_per_mw = 1000.0;   // applied to generator redispatch slack
  double line_per_mva = 500.0;
  double voltage_per_pu2 = 500.0;
};

struct RedispatchResult {
  Eigen::VectorXd slack_up, slack_down;  // per generator, MW
  Eigen::VectorXd voltage_slacks;        // per bus, per-unit^2
  Eigen::VectorXd line_slacks;           // per line, MVA
  double penalty_cost = 0.0;             // $
  double realized_cost = 0.0;            // generation + penalty, $
  bool feasible_flag = false;
};

/// Gaussian source: mean + sqrt(Sigma) * normals, clamped at zero demand.
std::vector<Realization> sample_realizations_gaussian(const Eigen::VectorXd& mean_mw,
                                                      const Eigen::MatrixXd& sigma_mw,
                                                      int count, std::uint64_t seed);

/// Behavioral source: fresh population and switching pass per realization,
/// with per-owner price-sensitive charge amounts.
std::vector<Realization> sample_realizations_behavioral(
    const behavior::PopulationConfig& cfg, const std::vector<net::Evcs>& stations,
    int count, std::uint64_t seed);

/// Fixes every decision to the dispatch, lets generators follow their affine
/// participation response to the realized total deviation, and measures the
/// nonnegative slacks needed to restore feasibility (the analytic optimum of
/// the per-realization slack LP with positive penalty weights).
RedispatchResult redispatch(const net::Network& network, const net::IncidenceMap& inc,
                            const dopf::Dispatch& dispatch,
                            const Realization& realization, const Penalties& penalties);

struct ViolationStats {
  double violation_pct = 0.0;
  double balance_pct = 0.0, voltage_pct = 0.0, line_pct = 0.0, generator_pct = 0.0;
};

/// tol is in per-unit terms; MW and MVA slacks are normalized by base_mva
/// before comparison.
ViolationStats violation_stats(const std::vector<RedispatchResult>& results,
                               double tol, double base_mva);

struct EvalSummary {
  std::string mode;
  double mean_cost = 0.0;          // $
  double cost_increase_pct = 0.0;  // vs cheapest mode, filled by compare()
  double d_bar = 0.0;              // mean total upward slack, MW
  double d_under = 0.0;
  double violation_pct = 0.0;
  int realizations = 0;
  std::uint64_t seed = 0;
};

EvalSummary evaluate_dispatch(const net::Network& network, const net::IncidenceMap& inc,
                              const dopf::Dispatch& dispatch,
                              const std::vector<Realization>& realizations,
                              const Penalties& penalties, double tol,
                              std::uint64_t seed, int threads = 1,
                              std::vector<RedispatchResult>* per_realization = nullptr);

struct ComparisonReport {
  std::vector<EvalSummary> rows;  // cost_increase_pct filled in
  std::string text;               // formatted table
};

/// All summaries must come from the same realization seed.
ComparisonReport compare(std::vector<EvalSummary> summaries);

}  // namespace evdro::posteval
