#include "evdro/promethee.hpp"

#include <cmath>

#include "evdro/csv.hpp"

namespace evdro::promethee {

void WeightVector::validate() const {
  if (w.size() == 0) throw Error("weight vector is empty");
  if ((w.array() < 0.0).any()) throw Error("weights must be nonnegative");
  if (std::abs(w.sum() - 1.0) > 1e-12) throw Error("weights must sum to 1");
}

double preference(double delta, const PreferenceThresholds& th) {
  if (!(th.tau_q >= 0.0) || !(th.tau_p > th.tau_q))
    throw Error("preference thresholds require 0 <= tau_q < tau_p");
  if (delta <= th.tau_q) return 0.0;
  if (delta >= th.tau_p) return 1.0;
  return (delta - th.tau_q) / (th.tau_p - th.tau_q);
}

double preference_index(const Eigen::VectorXd& psi, const WeightVector& w) {
  w.validate();
  if (psi.size() != w.w.size())
    throw Error("preference_index: psi/weight length mismatch");
  return psi.dot(w.w);
}

Eigen::MatrixXd preference_matrix(const PerformanceTable& table,
                                  const CriteriaSet& criteria,
                                  const std::vector<PreferenceThresholds>& thresholds,
                                  const WeightVector& weights) {
  const Eigen::Index n = table.g.rows();
  const Eigen::Index m = table.g.cols();
  if (m != static_cast<Eigen::Index>(criteria.criteria.size()) ||
      m != static_cast<Eigen::Index>(thresholds.size()) || m != weights.w.size())
    throw Error("preference_matrix: criteria dimension mismatch");
  weights.validate();

  // Benefit-oriented scores: negate minimize-type columns once.
  Eigen::MatrixXd score = table.g;
  for (Eigen::Index j = 0; j < m; ++j)
    if (criteria.criteria[j].direction == Direction::minimize)
      score.col(j) = -score.col(j);

  Eigen::MatrixXd pi = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index k = 0; k < n; ++k) {
      if (i == k) continue;  // self-comparison excluded from flows
      double acc = 0.0;
      for (Eigen::Index j = 0; j < m; ++j) {
        double delta = score(i, j) - score(k, j);
        acc += weights.w(j) * preference(delta, thresholds[j]);
      }
      pi(i, k) = acc;
    }
  }
  return pi;
}

FlowResult outranking_flows(const Eigen::MatrixXd& pi) {
  const Eigen::Index n = pi.rows();
  if (n < 2 || pi.cols() != n)
    throw Error("outranking_flows: need a square matrix over >= 2 alternatives");
  FlowResult f;
  f.phi_plus = pi.rowwise().sum() / static_cast<double>(n - 1);
  f.phi_minus = pi.colwise().sum().transpose() / static_cast<double>(n - 1);
  f.phi = f.phi_plus - f.phi_minus;
  return f;
}

int select_best(const FlowResult& flows, int current) {
  const Eigen::Index n = flows.phi.size();
  if (n == 0) throw Error("select_best: empty flows");
  if (current < 0 || current >= n) throw Error("select_best: invalid current index");
  double best = flows.phi.maxCoeff();
  if (flows.phi(current) == best) return current;
  for (Eigen::Index i = 0; i < n; ++i)
    if (flows.phi(i) == best) return static_cast<int>(i);
  return current;  // unreachable
}

}  // namespace evdro::promethee
