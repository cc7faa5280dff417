#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <string>
#include <vector>

namespace evdro::socp {

/// Conic program in standard form:
///   minimize    (1/2) x'Px + q'x + r0
///   subject to  A x = b
///               G x + s = h,  s in K
/// where K stacks the nonnegative orthant of dimension n_nonneg followed by
/// second-order cones of the listed dimensions (rows of G in that order).
struct ConeProblem {
  Eigen::SparseMatrix<double> P;
  Eigen::VectorXd q;
  double r0 = 0.0;
  Eigen::SparseMatrix<double> A;
  Eigen::VectorXd b;
  Eigen::SparseMatrix<double> G;
  Eigen::VectorXd h;
  int n_nonneg = 0;
  std::vector<int> soc_dims;

  int num_vars() const { return static_cast<int>(q.size()); }
  int num_ineq() const { return static_cast<int>(h.size()); }
  void validate() const;
};

enum class Status { optimal, infeasible, unbounded, iteration_limit, numerical_failure };

const char* status_name(Status s);

struct Solution {
  Status status = Status::numerical_failure;
  Eigen::VectorXd x, s, y, z;
  double objective = 0.0;
  int iterations = 0;
  double primal_residual = 0.0;  // max equality/cone infeasibility of x
  double dual_residual = 0.0;
  double gap = 0.0;
  std::string message;
};

/// Abstract convex-solver interface: quadratic objective, linear equalities
/// and inequalities, second-order cones.
class ConeSolver {
 public:
  virtual ~ConeSolver() = default;
  virtual Solution solve(const ConeProblem& problem) const = 0;
};

struct IpmSettings {
  int max_iterations = 100;
  double tol_feas = 1e-9;
  double tol_gap = 1e-9;
  double accept_feas = 1e-7;  // fallback acceptance at iteration limit
  double static_reg = 1e-9;
  int refinement_steps = 2;
};

/// Primal-dual interior-point method with Nesterov-Todd scalings and a
/// Mehrotra predictor-corrector, solving the Newton systems through a sparse
/// quasidefinite LDLT factorization with static regularization and iterative
/// refinement.
class InteriorPointSolver final : public ConeSolver {
 public:
  InteriorPointSolver() = default;
  explicit InteriorPointSolver(IpmSettings settings) : settings_(settings) {}
  Solution solve(const ConeProblem& problem) const override;

 private:
  IpmSettings settings_;
};

/// Residuals of a candidate primal point: max of |Ax-b|, orthant violation
/// and second-order-cone violation of h - Gx. Used for independent rechecks.
double primal_infeasibility(const ConeProblem& problem, const Eigen::VectorXd& x);

}  // namespace evdro::socp
