#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "evdro/ambiguity.hpp"
#include "evdro/netmodel.hpp"
#include "evdro/socp.hpp"

namespace evdro::dopf {

enum class Mode { deterministic, drcc, drcc_pm };

const char* mode_name(Mode m);
Mode mode_from_name(const std::string& name);

struct DopfParams {
  double epsilon = 0.1;
  double eta = 0.0;        // DRCC safety factor; 0 in deterministic mode
  double z = 0.2;          // reactive-to-real EVCD ratio (tan theta)
  int polygon_edges = 12;
  Mode mode = Mode::deterministic;
  double v2_root = 1.0;    // substation voltage squared, per-unit
  void validate() const;
};

/// Solved operating point, physical units (MW / MVAr / $).
struct Dispatch {
  Mode mode = Mode::deterministic;
  Eigen::VectorXd p_g, q_g;         // per generator, MW / MVAr
  Eigen::VectorXd v2;               // per bus, per-unit squared
  Eigen::VectorXd p_flow, q_flow;   // per line, MW / MVAr
  Eigen::VectorXd alpha;            // per generator
  Eigen::VectorXd predicted_p_ev;   // MW per station (the model's forecast)
  double objective_value = 0.0;     // $
  double eta = 0.0;
  double z = 0.2;
};

/// Standard deviations of the uncertainty-propagated quantities at a fixed
/// participation vector. Station covariance in per-unit^2.
struct UncertainShift {
  Eigen::MatrixXd dev_cov;      // covariance of delta over non-root buses
  Eigen::VectorXd sd_line_p;    // per line, per-unit
  Eigen::VectorXd sd_line_q;
  Eigen::VectorXd sd_v2;        // per bus (root entry zero), per-unit^2
  Eigen::VectorXd sd_gen_p;     // per generator, per-unit
};

UncertainShift deviation_stddevs(const net::Network& network,
                                 const net::IncidenceMap& inc,
                                 const Eigen::MatrixXd& sigma_station_pu,
                                 const Eigen::VectorXd& alpha, double z);

/// Inner (inscribed) polygonal approximation of p^2 + q^2 <= s_max^2:
/// rows (b1, b2, b3) with b1 p + b2 q <= b3 s_max.
struct PolygonEdge {
  double b1, b2, b3;
};
std::vector<PolygonEdge> polygon_coefficients(int edges);

struct ConicModel {
  socp::ConeProblem problem;
  double cost_scale = 1.0;     // objective was divided by this before solve

  // Variable offsets into x.
  int off_pg = 0, off_qg = 0, off_v2 = 0, off_pf = 0, off_qf = 0, off_alpha = 0,
      off_tl = -1, off_tv = -1;
  int n_gen = 0, n_bus = 0, n_line = 0, n_station = 0;

  std::vector<std::string> eq_names;
  std::vector<std::string> ineq_names;  // orthant rows
  std::vector<std::string> soc_names;

  DopfParams params;
  Eigen::VectorXd mean_ref_mw;
  Eigen::MatrixXd sigma_mw;

  bool infeasible_at_assembly = false;
  std::string diagnostic;
};

/// Builds the conic DOPF. mean_ref is the demand forecast per station (MW):
/// the empirical mean for drcc, the price-adjusted mean for drcc_pm, a point
/// forecast for deterministic. sigma is the station demand covariance (MW^2);
/// it must already be regularized for the drcc modes.
ConicModel assemble_model(const net::Network& network, const net::IncidenceMap& inc,
                          const Eigen::MatrixXd& sigma_mw,
                          const Eigen::VectorXd& mean_ref_mw,
                          const DopfParams& params);

struct SolveReport {
  socp::Status status = socp::Status::numerical_failure;
  Dispatch dispatch;
  double primal_residual = 0.0;
  double objective_check_error = 0.0;  // relative gap vs independent recompute
  int iterations = 0;
  std::string message;
};

SolveReport solve(const ConicModel& model, const net::Network& network,
                  const socp::ConeSolver& solver);

/// Expected generation cost of a dispatch under the quadratic cost model with
/// affine recourse: sum c2 p^2 + c2 (1' Sigma 1) alpha^2 + c1 p + c0, in $.
double expected_cost(const Dispatch& d, const Eigen::MatrixXd& sigma_mw,
                     const std::vector<net::Generator>& gens, double base_mva);

/// Per-constraint empirical violation frequencies of a dispatch under
/// omega ~ N(0, Sigma) (station space, MW). Every reformulated constraint
/// family is checked against its original form.
struct ChanceCheck {
  double max_frequency = 0.0;
  double gen_p = 0.0, gen_q = 0.0, voltage = 0.0, line = 0.0;  // family maxima
};
ChanceCheck chance_violation_frequencies(const net::Network& network,
                                         const net::IncidenceMap& inc,
                                         const Dispatch& dispatch,
                                         const Eigen::MatrixXd& sigma_mw,
                                         int samples, std::uint64_t seed);

}  // namespace evdro::dopf
