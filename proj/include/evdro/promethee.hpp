#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace evdro::promethee {

enum class Direction { maximize, minimize };

struct Criterion {
  std::string id;
  Direction direction = Direction::maximize;
};

struct CriteriaSet {
  std::vector<Criterion> criteria;
};

/// V-shaped preference thresholds: indifference below tau_q, strict
/// preference above tau_p, linear ramp in between.
struct PreferenceThresholds {
  double tau_q = 0.0;
  double tau_p = 1.0;
};

struct WeightVector {
  Eigen::VectorXd w;
  void validate() const;  // nonnegative, sums to 1 within 1e-12
};

/// Rows are alternatives, columns are criteria. Scores are raw (direction
/// handling happens when differences are formed).
struct PerformanceTable {
  Eigen::MatrixXd g;
};

struct FlowResult {
  Eigen::VectorXd phi_plus;
  Eigen::VectorXd phi_minus;
  Eigen::VectorXd phi;
};

/// V-shaped preference degree for a single criterion difference.
double preference(double delta, const PreferenceThresholds& th);

/// Weighted aggregation of per-criterion preference degrees for one ordered
/// pair of alternatives.
double preference_index(const Eigen::VectorXd& psi, const WeightVector& w);

/// Full pairwise preference-index matrix for one decision maker.
/// Minimize-direction columns are negated before differencing so a positive
/// difference always reads "row preferred over column".
Eigen::MatrixXd preference_matrix(const PerformanceTable& table,
                                  const CriteriaSet& criteria,
                                  const std::vector<PreferenceThresholds>& thresholds,
                                  const WeightVector& weights);

FlowResult outranking_flows(const Eigen::MatrixXd& pi);

/// Argmax of net flow; ties keep `current` when it is among the maximizers,
/// otherwise the lowest index wins.
int select_best(const FlowResult& flows, int current);

}  // namespace evdro::promethee
