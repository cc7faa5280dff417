#include "evdro/socp.hpp"

#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <limits>

#include "evdro/csv.hpp"

namespace evdro::socp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// Cone layout helper: orthant block followed by SOC blocks.
struct Cone {
  int l = 0;                 // orthant dimension
  std::vector<int> dims;     // SOC dimensions
  std::vector<int> offsets;  // start row of each SOC block
  int m = 0;                 // total rows
  int degree = 0;            // l + number of SOC blocks

  static Cone make(int l, const std::vector<int>& dims) {
    Cone c;
    c.l = l;
    c.dims = dims;
    c.m = l;
    for (int d : dims) {
      c.offsets.push_back(c.m);
      c.m += d;
    }
    c.degree = l + static_cast<int>(dims.size());
    return c;
  }

  Eigen::VectorXd identity() const {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(m);
    e.head(l).setOnes();
    for (std::size_t k = 0; k < dims.size(); ++k) e(offsets[k]) = 1.0;
    return e;
  }

  /// Smallest "eigenvalue" with respect to the cone: min(u_i) on the orthant,
  /// u0 - |u1| on each SOC block. Positive means strictly interior.
  double min_eig(const Eigen::VectorXd& u) const {
    double m0 = kInf;
    if (l > 0) m0 = u.head(l).minCoeff();
    for (std::size_t k = 0; k < dims.size(); ++k) {
      int o = offsets[k], d = dims[k];
      m0 = std::min(m0, u(o) - u.segment(o + 1, d - 1).norm());
    }
    return m0;
  }

  /// Largest step t with u + t du staying in the cone (can be +inf).
  double max_step(const Eigen::VectorXd& u, const Eigen::VectorXd& du) const {
    double t = kInf;
    for (int i = 0; i < l; ++i)
      if (du(i) < 0.0) t = std::min(t, -u(i) / du(i));
    for (std::size_t k = 0; k < dims.size(); ++k) {
      int o = offsets[k], d = dims[k];
      double u0 = u(o), du0 = du(o);
      auto u1 = u.segment(o + 1, d - 1);
      auto du1 = du.segment(o + 1, d - 1);
      // Boundary roots of (u0 + t du0)^2 - |u1 + t du1|^2 = 0.
      double a = du0 * du0 - du1.squaredNorm();
      double b = u0 * du0 - u1.dot(du1);
      double c = u0 * u0 - u1.squaredNorm();
      double root = kInf;
      if (std::abs(a) < 1e-14) {
        if (b < 0.0) root = -c / (2.0 * b);
      } else {
        double disc = b * b - a * c;
        if (disc >= 0.0) {
          double sq = std::sqrt(disc);
          double r1 = (-b - sq) / a;
          double r2 = (-b + sq) / a;
          if (r1 > r2) std::swap(r1, r2);
          if (r1 > 0.0)
            root = r1;
          else if (r2 > 0.0 && a < 0.0)
            root = r2;
        }
      }
      if (du0 < 0.0) root = std::min(root, -u0 / du0);
      t = std::min(t, root);
    }
    return t;
  }

  /// Jordan product u o v.
  Eigen::VectorXd jprod(const Eigen::VectorXd& u, const Eigen::VectorXd& v) const {
    Eigen::VectorXd out(m);
    out.head(l) = u.head(l).cwiseProduct(v.head(l));
    for (std::size_t k = 0; k < dims.size(); ++k) {
      int o = offsets[k], d = dims[k];
      out(o) = u.segment(o, d).dot(v.segment(o, d));
      out.segment(o + 1, d - 1) =
          u(o) * v.segment(o + 1, d - 1) + v(o) * u.segment(o + 1, d - 1);
    }
    return out;
  }

  /// Solves lambda o t = d for t.
  Eigen::VectorXd jdiv(const Eigen::VectorXd& lambda, const Eigen::VectorXd& d) const {
    Eigen::VectorXd t(m);
    t.head(l) = d.head(l).cwiseQuotient(lambda.head(l));
    for (std::size_t k = 0; k < dims.size(); ++k) {
      int o = offsets[k], dim = dims[k];
      double l0 = lambda(o);
      auto l1 = lambda.segment(o + 1, dim - 1);
      double det = l0 * l0 - l1.squaredNorm();
      double t0 = (l0 * d(o) - l1.dot(d.segment(o + 1, dim - 1))) / det;
      t(o) = t0;
      t.segment(o + 1, dim - 1) = (d.segment(o + 1, dim - 1) - t0 * l1) / l0;
    }
    return t;
  }
};

/// Nesterov-Todd scaling W with W z = W^{-1} s = lambda.
struct Scaling {
  Eigen::VectorXd w_orthant;            // diag entries, orthant part
  std::vector<double> eta;              // per SOC block
  std::vector<Eigen::VectorXd> wbar;    // hyperbolic unit vectors per block

  static Scaling compute(const Cone& cone, const Eigen::VectorXd& s,
                         const Eigen::VectorXd& z) {
    Scaling sc;
    sc.w_orthant = (s.head(cone.l).cwiseQuotient(z.head(cone.l))).cwiseSqrt();
    for (std::size_t k = 0; k < cone.dims.size(); ++k) {
      int o = cone.offsets[k], d = cone.dims[k];
      auto sb = s.segment(o, d);
      auto zb = z.segment(o, d);
      double sres = sb(0) * sb(0) - sb.tail(d - 1).squaredNorm();
      double zres = zb(0) * zb(0) - zb.tail(d - 1).squaredNorm();
      if (sres <= 0.0 || zres <= 0.0)
        throw Error("socp: iterate left the cone interior");
      double snorm = std::sqrt(sres), znorm = std::sqrt(zres);
      Eigen::VectorXd sbar = sb / snorm, zbar = zb / znorm;
      double gamma = std::sqrt(0.5 * (1.0 + sbar.dot(zbar)));
      Eigen::VectorXd wb(d);
      wb(0) = (sbar(0) + zbar(0)) / (2.0 * gamma);
      wb.tail(d - 1) = (sbar.tail(d - 1) - zbar.tail(d - 1)) / (2.0 * gamma);
      sc.eta.push_back(std::sqrt(snorm / znorm));
      sc.wbar.push_back(std::move(wb));
    }
    return sc;
  }

  Eigen::VectorXd apply(const Cone& cone, const Eigen::VectorXd& v) const {
    Eigen::VectorXd out(cone.m);
    out.head(cone.l) = w_orthant.cwiseProduct(v.head(cone.l));
    for (std::size_t k = 0; k < cone.dims.size(); ++k) {
      int o = cone.offsets[k], d = cone.dims[k];
      const auto& wb = wbar[k];
      double v0 = v(o);
      auto v1 = v.segment(o + 1, d - 1);
      double dot = wb.tail(d - 1).dot(v1);
      out(o) = eta[k] * (wb(0) * v0 + dot);
      out.segment(o + 1, d - 1) =
          eta[k] * (v1 + (v0 + dot / (1.0 + wb(0))) * wb.tail(d - 1));
    }
    return out;
  }

  Eigen::VectorXd apply_inv(const Cone& cone, const Eigen::VectorXd& v) const {
    Eigen::VectorXd out(cone.m);
    out.head(cone.l) = v.head(cone.l).cwiseQuotient(w_orthant);
    for (std::size_t k = 0; k < cone.dims.size(); ++k) {
      int o = cone.offsets[k], d = cone.dims[k];
      const auto& wb = wbar[k];
      double v0 = v(o);
      auto v1 = v.segment(o + 1, d - 1);
      double dot = wb.tail(d - 1).dot(v1);
      out(o) = (wb(0) * v0 - dot) / eta[k];
      out.segment(o + 1, d - 1) =
          (v1 + (-v0 + dot / (1.0 + wb(0))) * wb.tail(d - 1)) / eta[k];
    }
    return out;
  }

  Eigen::VectorXd apply_sq(const Cone& cone, const Eigen::VectorXd& v) const {
    return apply(cone, apply(cone, v));
  }
};

/// KKT system
///   [ P   A'  G' ] [dx]   [r1]
///   [ A   0   0  ] [dy] = [r2]
///   [ G   0  -W2 ] [dz]   [r3]
/// factored as one sparse quasidefinite matrix with static regularization.
class KktSolver {
 public:
  KktSolver(const ConeProblem& prob, const Cone& cone, const IpmSettings& settings)
      : prob_(prob), cone_(cone), settings_(settings) {
    n_ = prob.num_vars();
    p_ = static_cast<int>(prob.b.size());
    dim_ = n_ + p_ + cone.m;
    build_pattern();
  }

  void factor(const Scaling& sc) {
    sc_ = &sc;
    // Refresh W^2 values; pattern is unchanged. A zero pivot escalates the
    // static regularization; iterative refinement against the exact operator
    // recovers the lost accuracy.
    for (double mult : {1.0, 1e2, 1e4, 1e6}) {
      const double reg = settings_.static_reg * mult;
      std::vector<Eigen::Triplet<double>> trips = base_trips_;
      for (int i = 0; i < n_; ++i) trips.emplace_back(i, i, reg);
      for (int i = 0; i < p_; ++i) trips.emplace_back(n_ + i, n_ + i, -reg);
      for (int i = 0; i < cone_.l; ++i) {
        double w2 = sc.w_orthant(i) * sc.w_orthant(i);
        trips.emplace_back(n_ + p_ + i, n_ + p_ + i, -w2 - reg);
      }
      for (std::size_t k = 0; k < cone_.dims.size(); ++k) {
        int o = n_ + p_ + cone_.offsets[k], d = cone_.dims[k];
        const auto& wb = sc.wbar[k];
        double e2 = sc.eta[k] * sc.eta[k];
        // W^2 = eta^2 (2 wbar wbar' - J)
        for (int i = 0; i < d; ++i) {
          for (int j = 0; j < d; ++j) {
            double jij = (i == j) ? (i == 0 ? 1.0 : -1.0) : 0.0;
            double v = e2 * (2.0 * wb(i) * wb(j) - jij);
            if (i == j) v += reg;
            trips.emplace_back(o + i, o + j, -v);
          }
        }
      }
      Eigen::SparseMatrix<double> K(dim_, dim_);
      K.setFromTriplets(trips.begin(), trips.end());
      if (first_) {
        ldlt_.analyzePattern(K);
        first_ = false;
      }
      ldlt_.factorize(K);
      if (ldlt_.info() == Eigen::Success) return;
    }
    throw Error("socp: KKT factorization failed");
  }

  /// Solve with iterative refinement against the unregularized operator.
  /// Refinement steps that fail to reduce the residual are rolled back.
  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const {
    Eigen::VectorXd sol = ldlt_.solve(rhs);
    double best = (rhs - apply_exact(sol)).norm();
    for (int it = 0; it < settings_.refinement_steps; ++it) {
      Eigen::VectorXd resid = rhs - apply_exact(sol);
      Eigen::VectorXd trial = sol + ldlt_.solve(resid);
      double rn = (rhs - apply_exact(trial)).norm();
      if (!std::isfinite(rn) || rn >= best) break;
      sol = std::move(trial);
      best = rn;
    }
    return sol;
  }

 private:
  void build_pattern() {
    base_trips_.clear();
    for (int c = 0; c < prob_.P.outerSize(); ++c)
      for (Eigen::SparseMatrix<double>::InnerIterator it(prob_.P, c); it; ++it)
        base_trips_.emplace_back(it.row(), it.col(), it.value());
    for (int c = 0; c < prob_.A.outerSize(); ++c)
      for (Eigen::SparseMatrix<double>::InnerIterator it(prob_.A, c); it; ++it) {
        base_trips_.emplace_back(n_ + it.row(), it.col(), it.value());
        base_trips_.emplace_back(it.col(), n_ + it.row(), it.value());
      }
    for (int c = 0; c < prob_.G.outerSize(); ++c)
      for (Eigen::SparseMatrix<double>::InnerIterator it(prob_.G, c); it; ++it) {
        base_trips_.emplace_back(n_ + p_ + it.row(), it.col(), it.value());
        base_trips_.emplace_back(it.col(), n_ + p_ + it.row(), it.value());
      }
  }

  Eigen::VectorXd apply_exact(const Eigen::VectorXd& v) const {
    Eigen::VectorXd dx = v.head(n_), dy = v.segment(n_, p_), dz = v.tail(cone_.m);
    Eigen::VectorXd out(dim_);
    out.head(n_) = prob_.P.selfadjointView<Eigen::Lower>() * dx +
                   prob_.A.transpose() * dy + prob_.G.transpose() * dz;
    out.segment(n_, p_) = prob_.A * dx;
    out.tail(cone_.m) = prob_.G * dx - sc_->apply_sq(cone_, dz);
    return out;
  }

  const ConeProblem& prob_;
  const Cone& cone_;
  IpmSettings settings_;
  int n_ = 0, p_ = 0, dim_ = 0;
  bool first_ = true;
  const Scaling* sc_ = nullptr;
  std::vector<Eigen::Triplet<double>> base_trips_;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt_;
};

double soc_violation(const Cone& cone, const Eigen::VectorXd& s) {
  double v = 0.0;
  if (cone.l > 0) v = std::max(v, -s.head(cone.l).minCoeff());
  for (std::size_t k = 0; k < cone.dims.size(); ++k) {
    int o = cone.offsets[k], d = cone.dims[k];
    v = std::max(v, s.segment(o + 1, d - 1).norm() - s(o));
  }
  return v;
}

}  // namespace

void ConeProblem::validate() const {
  const int n = num_vars();
  if (P.rows() != n || P.cols() != n) throw Error("socp: P dimension mismatch");
  if (A.cols() != n || A.rows() != b.size()) throw Error("socp: A/b dimension mismatch");
  if (G.cols() != n || G.rows() != h.size()) throw Error("socp: G/h dimension mismatch");
  int rows = n_nonneg;
  for (int d : soc_dims) {
    if (d < 2) throw Error("socp: SOC dimension must be >= 2");
    rows += d;
  }
  if (rows != h.size()) throw Error("socp: cone layout does not cover G rows");
}

const char* status_name(Status s) {
  switch (s) {
    case Status::optimal: return "optimal";
    case Status::infeasible: return "infeasible";
    case Status::unbounded: return "unbounded";
    case Status::iteration_limit: return "iteration_limit";
    case Status::numerical_failure: return "numerical_failure";
  }
  return "unknown";
}

double primal_infeasibility(const ConeProblem& prob, const Eigen::VectorXd& x) {
  double r = 0.0;
  if (prob.b.size() > 0) r = (prob.A * x - prob.b).cwiseAbs().maxCoeff();
  if (prob.h.size() > 0) {
    Cone cone = Cone::make(prob.n_nonneg, prob.soc_dims);
    Eigen::VectorXd s = prob.h - prob.G * x;
    r = std::max(r, soc_violation(cone, s));
  }
  return r;
}

Solution InteriorPointSolver::solve(const ConeProblem& prob) const {
  prob.validate();
  const int n = prob.num_vars();
  const int p = static_cast<int>(prob.b.size());
  Cone cone = Cone::make(prob.n_nonneg, prob.soc_dims);
  const int m = cone.m;

  Solution sol;
  auto objective = [&](const Eigen::VectorXd& x) {
    return 0.5 * x.dot(prob.P.selfadjointView<Eigen::Lower>() * x) + prob.q.dot(x) +
           prob.r0;
  };

  // Pure equality-constrained QP: one KKT solve.
  if (m == 0) {
    Cone empty = Cone::make(0, {});
    KktSolver kkt(prob, empty, settings_);
    Scaling id;  // unused
    kkt.factor(id);
    Eigen::VectorXd rhs(n + p);
    rhs.head(n) = -prob.q;
    rhs.tail(p) = prob.b;
    Eigen::VectorXd v = kkt.solve(rhs);
    sol.x = v.head(n);
    sol.y = v.tail(p);
    sol.s.resize(0);
    sol.z.resize(0);
    sol.objective = objective(sol.x);
    sol.primal_residual = primal_infeasibility(prob, sol.x);
    sol.dual_residual =
        (prob.P.selfadjointView<Eigen::Lower>() * sol.x + prob.q +
         prob.A.transpose() * sol.y)
            .cwiseAbs()
            .maxCoeff();
    sol.status = sol.primal_residual < settings_.accept_feas ? Status::optimal
                                                             : Status::numerical_failure;
    return sol;
  }

  KktSolver kkt(prob, cone, settings_);
  Eigen::VectorXd e = cone.identity();

  // Initial point from the W = I system.
  Eigen::VectorXd x, y, z, s;
  {
    Scaling sc;
    sc.w_orthant = Eigen::VectorXd::Ones(cone.l);
    for (int d : cone.dims) {
      sc.eta.push_back(1.0);
      Eigen::VectorXd wb = Eigen::VectorXd::Zero(d);
      wb(0) = 1.0;
      sc.wbar.push_back(wb);
    }
    kkt.factor(sc);
    Eigen::VectorXd rhs(n + p + m);
    rhs.head(n) = -prob.q;
    rhs.segment(n, p) = prob.b;
    rhs.tail(m) = prob.h;
    Eigen::VectorXd v = kkt.solve(rhs);
    x = v.head(n);
    y = v.segment(n, p);
    z = v.tail(m);
    s = -z;
    double ps = cone.min_eig(s);
    if (ps < 1e-8) s += (1.0 + std::max(0.0, -ps)) * e;
    double pz = cone.min_eig(z);
    if (pz < 1e-8) z += (1.0 + std::max(0.0, -pz)) * e;
  }

  const double bnorm = std::max(1.0, prob.b.size() ? prob.b.norm() : 0.0);
  const double hnorm = std::max(1.0, prob.h.norm());
  const double qnorm = std::max(1.0, prob.q.norm());

  for (int iter = 0; iter < settings_.max_iterations; ++iter) {
    Eigen::VectorXd rx = prob.P.selfadjointView<Eigen::Lower>() * x + prob.q +
                         prob.A.transpose() * y + prob.G.transpose() * z;
    Eigen::VectorXd ry = prob.A * x - prob.b;
    Eigen::VectorXd rz = prob.G * x + s - prob.h;
    double gap = s.dot(z);
    double mu = gap / cone.degree;
    double obj = objective(x);

    double pres = std::max(p ? ry.norm() / bnorm : 0.0, rz.norm() / hnorm);
    double dres = rx.norm() / qnorm;
    double relgap = gap / std::max(1.0, std::abs(obj));

    if (!std::isfinite(pres) || !std::isfinite(dres) || !std::isfinite(mu)) {
      sol.status = Status::numerical_failure;
      sol.message = "iterates diverged";
      break;
    }

    sol.iterations = iter;
    sol.primal_residual = primal_infeasibility(prob, x);
    sol.dual_residual = dres;
    sol.gap = relgap;

    if (pres < settings_.tol_feas && dres < settings_.tol_feas &&
        relgap < settings_.tol_gap) {
      sol.status = Status::optimal;
      break;
    }

    // Primal infeasibility certificate: A'y + G'z ~ 0, z in K*, h'z + b'y < 0.
    double cert = prob.h.dot(z) + (p ? prob.b.dot(y) : 0.0);
    if (cert < -1e-2) {
      double znorm2 = std::sqrt(z.squaredNorm() + y.squaredNorm());
      Eigen::VectorXd atgt = prob.A.transpose() * y + prob.G.transpose() * z;
      if (znorm2 > 1e6 && atgt.norm() / znorm2 < 1e-8 &&
          cone.min_eig(z) > -1e-8 * znorm2) {
        sol.status = Status::infeasible;
        sol.message = "primal infeasibility certificate found";
        break;
      }
    }

    Scaling sc;
    try {
      sc = Scaling::compute(cone, s, z);
      kkt.factor(sc);
    } catch (const Error& err) {
      sol.status = Status::numerical_failure;
      sol.message = err.what();
      break;
    }
    Eigen::VectorXd lambda = sc.apply(cone, z);

    auto solve_direction = [&](const Eigen::VectorXd& d)
        -> std::tuple<Eigen::VectorXd, Eigen::VectorXd, Eigen::VectorXd, Eigen::VectorXd> {
      Eigen::VectorXd wdiv = sc.apply(cone, cone.jdiv(lambda, d));
      Eigen::VectorXd rhs(n + p + m);
      rhs.head(n) = -rx;
      rhs.segment(n, p) = -ry;
      rhs.tail(m) = -rz - wdiv;
      Eigen::VectorXd v = kkt.solve(rhs);
      Eigen::VectorXd dx = v.head(n), dy = v.segment(n, p), dz = v.tail(m);
      Eigen::VectorXd ds = wdiv - sc.apply_sq(cone, dz);
      return {dx, dy, dz, ds};
    };

    // Affine (predictor) direction.
    Eigen::VectorXd d_aff = -cone.jprod(lambda, lambda);
    auto [dxa, dya, dza, dsa] = solve_direction(d_aff);
    double alpha_aff =
        std::min({1.0, cone.max_step(s, dsa), cone.max_step(z, dza)});
    double mu_aff =
        (s + alpha_aff * dsa).dot(z + alpha_aff * dza) / cone.degree;
    double sigma = std::clamp(std::pow(mu_aff / mu, 3.0), 0.0, 1.0);

    // Combined (corrector) direction.
    Eigen::VectorXd corr =
        cone.jprod(sc.apply_inv(cone, dsa), sc.apply(cone, dza));
    Eigen::VectorXd d_comb = -cone.jprod(lambda, lambda) - corr + sigma * mu * e;
    auto [dx, dy, dz, ds] = solve_direction(d_comb);

    // The boundary roots are inexact near the cone surface; back off until
    // the next iterate is strictly interior.
    auto safe_step = [&](const Eigen::VectorXd& dsv, const Eigen::VectorXd& dzv) {
      double a = 0.99 * std::min({kInf, cone.max_step(s, dsv), cone.max_step(z, dzv)});
      a = std::min(a, 1.0);
      for (int tries = 0; tries < 60 && a > 1e-13; ++tries) {
        if (cone.min_eig(s + a * dsv) > 0.0 && cone.min_eig(z + a * dzv) > 0.0) break;
        a *= 0.9;
      }
      return a;
    };
    double alpha = safe_step(ds, dz);
    if (alpha <= 1e-8) {
      // Mehrotra corrector overshoots near degenerate actives; retry with a
      // pure centering direction.
      Eigen::VectorXd d_center = -cone.jprod(lambda, lambda) + 0.8 * mu * e;
      std::tie(dx, dy, dz, ds) = solve_direction(d_center);
      alpha = safe_step(ds, dz);
    }
    if (!std::isfinite(alpha) || alpha <= 1e-12) {
      sol.status = Status::numerical_failure;
      sol.message = "step size collapsed";
      break;
    }

    x += alpha * dx;
    y += alpha * dy;
    z += alpha * dz;
    s += alpha * ds;

    if (iter + 1 == settings_.max_iterations) {
      sol.status = (pres < settings_.accept_feas && dres < settings_.accept_feas &&
                    relgap < 1e2 * settings_.accept_feas)
                       ? Status::optimal
                       : Status::iteration_limit;
      if (sol.status == Status::iteration_limit)
        sol.message = "iteration limit before convergence";
    }
  }

  sol.x = x;
  sol.y = y;
  sol.z = z;
  sol.s = s;
  sol.objective = objective(x);
  sol.primal_residual = primal_infeasibility(prob, x);
  return sol;
}

}  // namespace evdro::socp
