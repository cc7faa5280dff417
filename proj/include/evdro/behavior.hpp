#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "evdro/netmodel.hpp"
#include "evdro/promethee.hpp"

namespace evdro::behavior {

/// Criterion order used throughout: 0 = charging price (minimize),
/// 1 = congestion time (minimize), 2 = owner bias (maximize).
promethee::CriteriaSet owner_criteria();

struct Owner {
  int id = 0;
  int home_station = 0;  // index into Network::stations
  promethee::WeightVector weights;
  std::vector<promethee::PreferenceThresholds> thresholds;  // per criterion
  double bias_strength = 0.0;
  double beta = 0.0;  // MW per $/kWh price difference, per vehicle
};

struct OwnerPopulation {
  std::vector<Owner> owners;
  double ch_avg = 0.0;  // MW per charging session

  std::vector<std::vector<int>> by_station;  // owner indices per home station
};

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

struct PopulationConfig {
  std::vector<double> arrival_rate;  // expected EVs per station per scenario
  double pool_factor = 3.0;          // pool size multiplier over the rate
  double ch_avg_mw = 0.011;
  double service_minutes = 30.0;
  Range beta{0.02, 0.08};
  Range bias{0.05, 0.40};
  Range tau_q_price{0.0, 0.02};
  Range tau_p_add_price{0.01, 0.06};
  Range tau_q_congestion{0.0, 8.0};
  Range tau_p_add_congestion{4.0, 20.0};
  Range tau_q_bias{0.0, 0.05};
  Range tau_p_add_bias{0.02, 0.15};
  void validate() const;
};

struct StationState {
  int station = 0;  // index into Network::stations
  double price = 0.0;
  int occupancy = 0;
  double congestion_minutes = 0.0;
};

struct Scenario {
  Eigen::VectorXi n;       // post-switching EV count per station
  Eigen::VectorXd p_ev;    // MW per station
  std::vector<int> owner;  // participating owner indices
  std::vector<int> delta;  // participant -> chosen station index
};

OwnerPopulation sample_population(const PopulationConfig& cfg, std::uint64_t seed);

/// Raw criterion scores of every station as seen by one owner.
promethee::PerformanceTable station_performance(const std::vector<StationState>& states,
                                                const Owner& owner);

/// One-shot switching pass: every arrived owner ranks all stations against the
/// given states and moves to its net-flow argmax. Congestion is taken from the
/// initial occupancy only (no fixed-point iteration).
Scenario simulate_scenario(const OwnerPopulation& pop,
                           const std::vector<StationState>& states,
                           std::uint64_t seed);

/// Builds per-scenario station states (Poisson arrivals, prices, congestion)
/// and runs the switching pass K times. Deterministic in (cfg, seed) and
/// independent of thread count.
std::vector<Scenario> run_scenarios(const OwnerPopulation& pop,
                                    const std::vector<net::Evcs>& stations,
                                    const PopulationConfig& cfg, int k_sc,
                                    std::uint64_t seed, int threads = 1);

/// Price-coupled demand mean of Eq-style linear sensitivity: each of the
/// n_bar[i] expected vehicles charges ch_avg reduced by beta_mean times the
/// offered-minus-reference price difference, clamped to [0, 2 ch_avg].
Eigen::VectorXd price_adjusted_mean(const Eigen::VectorXd& n_bar,
                                    const std::vector<net::Evcs>& stations,
                                    double ch_avg, double beta_mean);

/// Mean per-station vehicle count over scenarios.
Eigen::VectorXd mean_counts(const std::vector<Scenario>& scenarios);

double mean_beta(const OwnerPopulation& pop);

}  // namespace evdro::behavior
