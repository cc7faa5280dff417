#pragma once

#include <Eigen/Dense>
#include <vector>

namespace evdro::ambiguity {

/// Empirical first and second moments of station demand, in MW / MW^2.
struct Moments {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
  int k_sc = 0;
};

enum class SetMode { M1, M2 };

struct AmbiguityParams {
  double gamma1 = 0.1;
  double gamma2 = 1.0;
  double epsilon = 0.1;
  SetMode mode = SetMode::M1;
  void validate() const;
};

/// Biased estimator (divisor K) over demand vectors, one column per station.
Moments empirical_moments(const std::vector<Eigen::VectorXd>& p_ev);

/// Adds a relative ridge when the smallest eigenvalue drops below 1e-8;
/// falls back to an absolute 1e-6 floor when the trace is zero.
Moments regularize_covariance(const Moments& m, double ridge);

/// DRCC safety factor.
double eta(const AmbiguityParams& params);

struct MembershipResult {
  bool mean_ok = false;
  bool cov_ok = false;
};

/// Checks a candidate (mean, covariance) pair against the moment set centered
/// at mean_ref: gamma1 ellipsoid on the mean, gamma2 cap on the second moment
/// about mean_ref.
MembershipResult membership_check(const Eigen::VectorXd& candidate_mean,
                                  const Eigen::MatrixXd& candidate_cov,
                                  const Moments& m, const AmbiguityParams& params,
                                  const Eigen::VectorXd& mean_ref);

}  // namespace evdro::ambiguity
