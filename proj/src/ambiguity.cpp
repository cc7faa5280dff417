#include "evdro/ambiguity.hpp"

#include <cmath>

#include "evdro/csv.hpp"

namespace evdro::ambiguity {

void AmbiguityParams::validate() const {
  if (gamma1 < 0.0) throw Error("gamma1 must be >= 0");
  if (gamma2 < 1.0) throw Error("gamma2 must be >= 1");
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw Error("epsilon must lie in (0,1)");
}

Moments empirical_moments(const std::vector<Eigen::VectorXd>& p_ev) {
  if (p_ev.empty()) throw Error("empirical_moments: no scenarios");
  const Eigen::Index dim = p_ev.front().size();
  for (const auto& v : p_ev)
    if (v.size() != dim) throw Error("empirical_moments: dimension mismatch");

  Moments m;
  m.k_sc = static_cast<int>(p_ev.size());
  m.mean = Eigen::VectorXd::Zero(dim);
  for (const auto& v : p_ev) m.mean += v;
  m.mean /= static_cast<double>(m.k_sc);

  m.cov = Eigen::MatrixXd::Zero(dim, dim);
  for (const auto& v : p_ev) {
    Eigen::VectorXd d = v - m.mean;
    m.cov += d * d.transpose();
  }
  m.cov /= static_cast<double>(m.k_sc);
  m.cov = 0.5 * (m.cov + m.cov.transpose());
  return m;
}

Moments regularize_covariance(const Moments& m, double ridge) {
  if (ridge < 0.0) throw Error("regularize_covariance: ridge must be >= 0");
  Moments out = m;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(out.cov);
  double min_eig = es.eigenvalues().minCoeff();
  if (min_eig >= 1e-8) return out;

  const double dim = static_cast<double>(out.cov.rows());
  double bump = ridge * out.cov.trace() / dim;
  if (bump <= 0.0) bump = 1e-6;  // zero-trace fallback floor
  out.cov += bump * Eigen::MatrixXd::Identity(out.cov.rows(), out.cov.cols());
  return out;
}

double eta(const AmbiguityParams& params) {
  params.validate();
  const double g1 = params.gamma1, g2 = params.gamma2, eps = params.epsilon;
  if (g1 / g2 <= eps)
    return std::sqrt(g1) + std::sqrt((1.0 - eps) / eps * (g2 - g1));
  return std::sqrt(g2 / eps);
}

MembershipResult membership_check(const Eigen::VectorXd& candidate_mean,
                                  const Eigen::MatrixXd& candidate_cov,
                                  const Moments& m, const AmbiguityParams& params,
                                  const Eigen::VectorXd& mean_ref) {
  params.validate();
  Eigen::LDLT<Eigen::MatrixXd> ldlt(m.cov);
  double d_max = ldlt.vectorD().cwiseAbs().maxCoeff();
  double d_min = ldlt.vectorD().minCoeff();
  if (ldlt.info() != Eigen::Success || d_min <= 1e-12 * std::max(1.0, d_max))
    throw Error("membership_check: covariance is singular; regularize first");

  MembershipResult res;
  Eigen::VectorXd d = candidate_mean - mean_ref;
  res.mean_ok = d.dot(ldlt.solve(d)) <= params.gamma1 + 1e-12;

  // Second moment about mean_ref: Cov + (mu - ref)(mu - ref)^T.
  Eigen::MatrixXd second = candidate_cov + d * d.transpose();
  Eigen::MatrixXd gap = params.gamma2 * m.cov - second;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (gap + gap.transpose()));
  res.cov_ok = es.eigenvalues().minCoeff() >= -1e-9;
  return res;
}

}  // namespace evdro::ambiguity
