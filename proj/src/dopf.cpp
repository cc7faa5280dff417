#include "evdro/dopf.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "evdro/csv.hpp"
#include "evdro/rng.hpp"

namespace evdro::dopf {

namespace {

Eigen::MatrixXd matrix_sqrt(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (m + m.transpose()));
  Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

/// A' diag(r + z x) A over non-root buses: column i holds the line-weighted
/// root-path aggregation that maps injection shifts at bus i into v^2 shifts.
Eigen::MatrixXd voltage_sensitivity(const net::Network& network,
                                    const net::IncidenceMap& inc, double z) {
  Eigen::VectorXd d(network.lines.size());
  for (std::size_t l = 0; l < network.lines.size(); ++l)
    d(l) = network.lines[l].r + z * network.lines[l].x;
  return inc.A.transpose() * d.asDiagonal() * inc.A;
}

struct StationIndex {
  std::vector<int> col;  // station -> non-root column
};

StationIndex station_columns(const net::Network& network, const net::IncidenceMap& inc) {
  StationIndex si;
  for (const auto& st : network.stations) {
    int b = network.bus_index(st.bus);
    int c = inc.column_of_bus[b];
    if (c < 0) throw Error("station " + std::to_string(st.id) + " sits on the root bus");
    si.col.push_back(c);
  }
  return si;
}

std::vector<int> generator_columns(const net::Network& network,
                                   const net::IncidenceMap& inc) {
  std::vector<int> cols;
  for (const auto& g : network.generators)
    cols.push_back(inc.column_of_bus[network.bus_index(g.bus)]);  // -1 at root
  return cols;
}

}  // namespace

const char* mode_name(Mode m) {
  switch (m) {
    case Mode::deterministic: return "deterministic";
    case Mode::drcc: return "drcc";
    case Mode::drcc_pm: return "drcc_pm";
  }
  return "unknown";
}

Mode mode_from_name(const std::string& name) {
  if (name == "deterministic") return Mode::deterministic;
  if (name == "drcc") return Mode::drcc;
  if (name == "drcc_pm") return Mode::drcc_pm;
  throw Error("unknown dispatch mode '" + name + "'");
}

void DopfParams::validate() const {
  if (z < 0.0) throw Error("dopf: z must be >= 0");
  if (polygon_edges < 4 || polygon_edges % 2 != 0)
    throw Error("dopf: polygon_edges must be even and >= 4");
  if (eta < 0.0) throw Error("dopf: eta must be >= 0");
  if (v2_root <= 0.0) throw Error("dopf: v2_root must be positive");
}

std::vector<PolygonEdge> polygon_coefficients(int edges) {
  if (edges < 4) throw Error("polygon_coefficients: need at least 4 edges");
  std::vector<PolygonEdge> out;
  const double apothem = std::cos(std::numbers::pi / edges);
  for (int c = 0; c < edges; ++c) {
    double theta = 2.0 * std::numbers::pi * c / edges;
    out.push_back({std::cos(theta), std::sin(theta), apothem});
  }
  return out;
}

UncertainShift deviation_stddevs(const net::Network& network,
                                 const net::IncidenceMap& inc,
                                 const Eigen::MatrixXd& sigma_station_pu,
                                 const Eigen::VectorXd& alpha, double z) {
  const int nb = static_cast<int>(network.buses.size());
  const int nl = static_cast<int>(network.lines.size());
  const int ns = static_cast<int>(network.stations.size());
  if (sigma_station_pu.rows() != ns || alpha.size() !=
      static_cast<Eigen::Index>(network.generators.size()))
    throw Error("deviation_stddevs: dimension mismatch");

  StationIndex si = station_columns(network, inc);
  auto gcols = generator_columns(network, inc);

  // Lift alpha and Sigma onto the non-root bus space.
  Eigen::VectorXd alpha_bus = Eigen::VectorXd::Zero(nb - 1);
  for (std::size_t g = 0; g < network.generators.size(); ++g)
    if (gcols[g] >= 0) alpha_bus(gcols[g]) += alpha(g);
  Eigen::MatrixXd lift = Eigen::MatrixXd::Zero(nb - 1, ns);
  for (int s = 0; s < ns; ++s) lift(si.col[s], s) = 1.0;

  Eigen::MatrixXd sigma_bus = lift * sigma_station_pu * lift.transpose();
  Eigen::MatrixXd m = Eigen::MatrixXd::Identity(nb - 1, nb - 1) -
                      alpha_bus * Eigen::RowVectorXd::Ones(nb - 1);

  UncertainShift out;
  out.dev_cov = m * sigma_bus * m.transpose();

  Eigen::MatrixXd cov_line = inc.A * out.dev_cov * inc.A.transpose();
  out.sd_line_p = cov_line.diagonal().cwiseMax(0.0).cwiseSqrt();
  out.sd_line_q = z * out.sd_line_p;

  Eigen::MatrixXd w = voltage_sensitivity(network, inc, z);
  out.sd_v2 = Eigen::VectorXd::Zero(nb);
  for (int i = 0; i < nb; ++i) {
    int c = inc.column_of_bus[i];
    if (c < 0) continue;
    out.sd_v2(i) = 2.0 * std::sqrt(std::max(0.0, w.col(c).dot(out.dev_cov * w.col(c))));
  }

  double sigma_tot = std::sqrt(std::max(
      0.0, (Eigen::VectorXd::Ones(ns).transpose() * sigma_station_pu *
            Eigen::VectorXd::Ones(ns))(0)));
  out.sd_gen_p = alpha * sigma_tot;
  return out;
}

ConicModel assemble_model(const net::Network& network, const net::IncidenceMap& inc,
                          const Eigen::MatrixXd& sigma_mw,
                          const Eigen::VectorXd& mean_ref_mw,
                          const DopfParams& params) {
  params.validate();
  const int nb = static_cast<int>(network.buses.size());
  const int nl = static_cast<int>(network.lines.size());
  const int ng = static_cast<int>(network.generators.size());
  const int ns = static_cast<int>(network.stations.size());
  if (ng == 0) throw Error("assemble_model: network has no generators");
  if (mean_ref_mw.size() != ns || sigma_mw.rows() != ns || sigma_mw.cols() != ns)
    throw Error("assemble_model: station dimension mismatch");

  const bool robust = params.mode != Mode::deterministic;
  const double base = network.base_mva;

  ConicModel model;
  model.params = params;
  model.mean_ref_mw = mean_ref_mw;
  model.sigma_mw = robust ? sigma_mw : Eigen::MatrixXd::Zero(ns, ns);
  model.n_gen = ng;
  model.n_bus = nb;
  model.n_line = nl;
  model.n_station = ns;

  // Per-unit data.
  Eigen::VectorXd pev = mean_ref_mw / base;
  Eigen::MatrixXd sigma_pu = sigma_mw / (base * base);
  Eigen::MatrixXd sigma_sqrt = matrix_sqrt(sigma_pu);
  const double sigma_tot =
      std::sqrt(std::max(0.0, (Eigen::VectorXd::Ones(ns).transpose() * sigma_pu *
                               Eigen::VectorXd::Ones(ns))(0)));
  // In the zero-covariance limit every propagated deviation vanishes, so the
  // epigraph cones would be structurally degenerate; drop them.
  const bool robust_cones = robust && sigma_sqrt.cwiseAbs().maxCoeff() > 0.0;

  StationIndex si = station_columns(network, inc);
  auto gcols = generator_columns(network, inc);
  Eigen::MatrixXd wmat = voltage_sensitivity(network, inc, params.z);

  // Variable layout.
  int n = 0;
  model.off_pg = n; n += ng;
  model.off_qg = n; n += ng;
  model.off_v2 = n; n += nb;
  model.off_pf = n; n += nl;
  model.off_qf = n; n += nl;
  model.off_alpha = n; n += ng;
  if (robust_cones) {
    model.off_tl = n; n += nl;
    model.off_tv = n; n += nb - 1;
  }

  // Capacity diagnostic before any solve is attempted.
  double load_p = pev.sum();
  for (const auto& b : network.buses) load_p += b.p_load;
  double cap_p = 0.0;
  for (const auto& g : network.generators) cap_p += g.p_max;
  if (load_p > cap_p + 1e-9) {
    model.infeasible_at_assembly = true;
    model.diagnostic = "total generation capacity " +
                       csv::format_number(cap_p * base) +
                       " MW below predicted load " +
                       csv::format_number(load_p * base) + " MW";
  }

  // ----- equalities -----
  std::vector<Eigen::Triplet<double>> at;
  std::vector<double> bvals;
  auto eq_row = [&](const std::string& name) {
    model.eq_names.push_back(name);
    bvals.push_back(0.0);
    return static_cast<int>(bvals.size()) - 1;
  };

  {
    int r = eq_row("v2_root");
    at.emplace_back(r, model.off_v2 + network.root_index, 1.0);
    bvals[r] = params.v2_root;
  }
  for (int l = 0; l < nl; ++l) {
    int r = eq_row("vdrop:line" + std::to_string(l));
    int fi = network.bus_index(network.lines[l].from_bus);
    int ti = network.bus_index(network.lines[l].to_bus);
    at.emplace_back(r, model.off_v2 + fi, 1.0);
    at.emplace_back(r, model.off_v2 + ti, -1.0);
    at.emplace_back(r, model.off_pf + l, -2.0 * network.lines[l].r);
    at.emplace_back(r, model.off_qf + l, -2.0 * network.lines[l].x);
  }
  for (int i = 0; i < nb; ++i) {
    double pev_i = 0.0;
    for (int s = 0; s < ns; ++s)
      if (network.bus_index(network.stations[s].bus) == i) pev_i += pev(s);

    int rp = eq_row("balance_p:bus" + std::to_string(network.buses[i].id));
    int rq = eq_row("balance_q:bus" + std::to_string(network.buses[i].id));
    for (int g = 0; g < ng; ++g) {
      if (network.bus_index(network.generators[g].bus) != i) continue;
      at.emplace_back(rp, model.off_pg + g, 1.0);
      at.emplace_back(rq, model.off_qg + g, 1.0);
    }
    for (int l = 0; l < nl; ++l) {
      int fi = network.bus_index(network.lines[l].from_bus);
      int ti = network.bus_index(network.lines[l].to_bus);
      if (fi == i) {
        at.emplace_back(rp, model.off_pf + l, -1.0);
        at.emplace_back(rq, model.off_qf + l, -1.0);
      } else if (ti == i) {
        at.emplace_back(rp, model.off_pf + l, 1.0);
        at.emplace_back(rq, model.off_qf + l, 1.0);
      }
    }
    bvals[rp] = network.buses[i].p_load + pev_i;
    bvals[rq] = network.buses[i].q_load + params.z * pev_i;
  }
  if (robust) {
    int r = eq_row("alpha_sum");
    for (int g = 0; g < ng; ++g) at.emplace_back(r, model.off_alpha + g, 1.0);
    bvals[r] = 1.0;
  } else {
    for (int g = 0; g < ng; ++g) {
      int r = eq_row("alpha_fixed:g" + std::to_string(g));
      at.emplace_back(r, model.off_alpha + g, 1.0);
      bvals[r] = 1.0 / ng;
    }
  }

  // ----- inequalities: orthant rows, then SOC blocks -----
  std::vector<Eigen::Triplet<double>> gt;
  std::vector<double> hvals;
  auto ineq_row = [&](const std::string& name) {
    model.ineq_names.push_back(name);
    hvals.push_back(0.0);
    return static_cast<int>(hvals.size()) - 1;
  };

  const double eta = robust ? params.eta : 0.0;
  for (int g = 0; g < ng; ++g) {
    int r = ineq_row("alpha_nonneg:g" + std::to_string(g));
    gt.emplace_back(r, model.off_alpha + g, -1.0);

    const auto& gen = network.generators[g];
    r = ineq_row("gen_p_max:g" + std::to_string(g));
    gt.emplace_back(r, model.off_pg + g, 1.0);
    if (eta * sigma_tot > 0.0)
      gt.emplace_back(r, model.off_alpha + g, eta * sigma_tot);
    hvals[r] = gen.p_max;

    r = ineq_row("gen_p_min:g" + std::to_string(g));
    gt.emplace_back(r, model.off_pg + g, -1.0);
    if (eta * sigma_tot > 0.0)
      gt.emplace_back(r, model.off_alpha + g, eta * sigma_tot);
    hvals[r] = -gen.p_min;

    r = ineq_row("gen_q_max:g" + std::to_string(g));
    gt.emplace_back(r, model.off_qg + g, 1.0);
    if (eta * params.z * sigma_tot > 0.0)
      gt.emplace_back(r, model.off_alpha + g, eta * params.z * sigma_tot);
    hvals[r] = gen.q_max;

    r = ineq_row("gen_q_min:g" + std::to_string(g));
    gt.emplace_back(r, model.off_qg + g, -1.0);
    if (eta * params.z * sigma_tot > 0.0)
      gt.emplace_back(r, model.off_alpha + g, eta * params.z * sigma_tot);
    hvals[r] = -gen.q_min;
  }
  for (int i = 0; i < nb; ++i) {
    if (i == network.root_index) continue;
    int c = inc.column_of_bus[i];
    int r = ineq_row("v2_max:bus" + std::to_string(network.buses[i].id));
    gt.emplace_back(r, model.off_v2 + i, 1.0);
    if (robust_cones) gt.emplace_back(r, model.off_tv + c, eta);
    hvals[r] = network.buses[i].v2_max;

    r = ineq_row("v2_min:bus" + std::to_string(network.buses[i].id));
    gt.emplace_back(r, model.off_v2 + i, -1.0);
    if (robust_cones) gt.emplace_back(r, model.off_tv + c, eta);
    hvals[r] = -network.buses[i].v2_min;
  }
  auto edges = polygon_coefficients(params.polygon_edges);
  for (int l = 0; l < nl; ++l) {
    for (std::size_t c = 0; c < edges.size(); ++c) {
      int r = ineq_row("line_cap:line" + std::to_string(l) + ":edge" +
                       std::to_string(c));
      gt.emplace_back(r, model.off_pf + l, edges[c].b1);
      gt.emplace_back(r, model.off_qf + l, edges[c].b2);
      if (robust_cones) {
        double coef = eta * std::abs(edges[c].b1 + params.z * edges[c].b2);
        if (coef > 0.0) gt.emplace_back(r, model.off_tl + l, coef);
      }
      hvals[r] = edges[c].b3 * network.lines[l].s_max;
    }
  }
  const int n_orthant = static_cast<int>(hvals.size());

  std::vector<int> soc_dims;
  if (robust_cones) {
    // t_l >= |sigma_sqrt (L' a_l - (a_l' alpha_bus) 1)|, one cone per line.
    for (int l = 0; l < nl; ++l) {
      model.soc_names.push_back("sd_line:line" + std::to_string(l));
      soc_dims.push_back(1 + ns);
      int r0 = static_cast<int>(hvals.size());
      hvals.push_back(0.0);
      gt.emplace_back(r0, model.off_tl + l, -1.0);
      Eigen::VectorXd lifted(ns);
      for (int s = 0; s < ns; ++s) lifted(s) = inc.A(l, si.col[s]);
      Eigen::VectorXd g_const = sigma_sqrt * lifted;
      Eigen::VectorXd ones_col = sigma_sqrt * Eigen::VectorXd::Ones(ns);
      for (int s = 0; s < ns; ++s) {
        int r = static_cast<int>(hvals.size());
        hvals.push_back(-g_const(s));
        for (int g = 0; g < ng; ++g) {
          if (gcols[g] < 0) continue;
          double coef = -ones_col(s) * inc.A(l, gcols[g]);
          if (coef != 0.0) gt.emplace_back(r, model.off_alpha + g, coef);
        }
      }
    }
    // t_v >= |2 sigma_sqrt (L' w_i - (w_i' alpha_bus) 1)|, one cone per bus.
    for (int i = 0; i < nb; ++i) {
      int c = inc.column_of_bus[i];
      if (c < 0) continue;
      model.soc_names.push_back("sd_v2:bus" + std::to_string(network.buses[i].id));
      soc_dims.push_back(1 + ns);
      int r0 = static_cast<int>(hvals.size());
      hvals.push_back(0.0);
      gt.emplace_back(r0, model.off_tv + c, -1.0);
      Eigen::VectorXd lifted(ns);
      for (int s = 0; s < ns; ++s) lifted(s) = wmat(si.col[s], c);
      Eigen::VectorXd g_const = 2.0 * sigma_sqrt * lifted;
      Eigen::VectorXd ones_col = 2.0 * sigma_sqrt * Eigen::VectorXd::Ones(ns);
      for (int s = 0; s < ns; ++s) {
        int r = static_cast<int>(hvals.size());
        hvals.push_back(-g_const(s));
        for (int g = 0; g < ng; ++g) {
          if (gcols[g] < 0) continue;
          double coef = -ones_col(s) * wmat(gcols[g], c);
          if (coef != 0.0) gt.emplace_back(r, model.off_alpha + g, coef);
        }
      }
    }
  }

  // ----- objective -----
  const double sigma_tot_mw2 =
      (Eigen::VectorXd::Ones(ns).transpose() * model.sigma_mw *
       Eigen::VectorXd::Ones(ns))(0);
  double scale = 1.0;
  for (const auto& g : network.generators)
    scale = std::max(scale, std::abs(g.c1) * base);
  model.cost_scale = scale;

  std::vector<Eigen::Triplet<double>> pt;
  Eigen::VectorXd q = Eigen::VectorXd::Zero(n);
  double r0 = 0.0;
  for (int g = 0; g < ng; ++g) {
    const auto& gen = network.generators[g];
    pt.emplace_back(model.off_pg + g, model.off_pg + g, 2.0 * gen.c2 * base * base / scale);
    if (robust && sigma_tot_mw2 > 0.0)
      pt.emplace_back(model.off_alpha + g, model.off_alpha + g,
                      2.0 * gen.c2 * sigma_tot_mw2 / scale);
    q(model.off_pg + g) = gen.c1 * base / scale;
    r0 += gen.c0 / scale;
  }

  auto& prob = model.problem;
  prob.P.resize(n, n);
  prob.P.setFromTriplets(pt.begin(), pt.end());
  prob.q = q;
  prob.r0 = r0;
  prob.A.resize(static_cast<int>(bvals.size()), n);
  prob.A.setFromTriplets(at.begin(), at.end());
  prob.b = Eigen::Map<Eigen::VectorXd>(bvals.data(), bvals.size());
  prob.G.resize(static_cast<int>(hvals.size()), n);
  prob.G.setFromTriplets(gt.begin(), gt.end());
  prob.h = Eigen::Map<Eigen::VectorXd>(hvals.data(), hvals.size());
  prob.n_nonneg = n_orthant;
  prob.soc_dims = soc_dims;
  return model;
}

SolveReport solve(const ConicModel& model, const net::Network& network,
                  const socp::ConeSolver& solver) {
  SolveReport report;
  if (model.infeasible_at_assembly) {
    report.status = socp::Status::infeasible;
    report.message = model.diagnostic;
    return report;
  }

  socp::Solution sol = solver.solve(model.problem);
  report.status = sol.status;
  report.iterations = sol.iterations;
  report.message = sol.message;
  if (sol.status == socp::Status::infeasible && sol.z.size() > 0) {
    // Name the inequality carrying the largest dual weight in the certificate.
    int worst = 0;
    sol.z.head(model.problem.n_nonneg).cwiseAbs().maxCoeff(&worst);
    if (worst < static_cast<int>(model.ineq_names.size()))
      report.message += (report.message.empty() ? "" : "; ") +
                        std::string("dominant constraint: ") +
                        model.ineq_names[worst];
  }
  if (sol.status != socp::Status::optimal) return report;

  const double base = network.base_mva;
  const int ng = model.n_gen, nb = model.n_bus, nl = model.n_line;
  Dispatch& d = report.dispatch;
  d.mode = model.params.mode;
  d.eta = model.params.mode == Mode::deterministic ? 0.0 : model.params.eta;
  d.z = model.params.z;
  d.p_g = sol.x.segment(model.off_pg, ng) * base;
  d.q_g = sol.x.segment(model.off_qg, ng) * base;
  d.v2 = sol.x.segment(model.off_v2, nb);
  d.p_flow = sol.x.segment(model.off_pf, nl) * base;
  d.q_flow = sol.x.segment(model.off_qf, nl) * base;
  d.alpha = sol.x.segment(model.off_alpha, ng);
  d.predicted_p_ev = model.mean_ref_mw;
  d.objective_value = sol.objective * model.cost_scale;

  report.primal_residual = socp::primal_infeasibility(model.problem, sol.x);
  double recomputed =
      expected_cost(d, model.sigma_mw, network.generators, base);
  report.objective_check_error = std::abs(recomputed - d.objective_value) /
                                 std::max(1.0, std::abs(d.objective_value));
  return report;
}

double expected_cost(const Dispatch& d, const Eigen::MatrixXd& sigma_mw,
                     const std::vector<net::Generator>& gens, double base_mva) {
  const int ns = static_cast<int>(sigma_mw.rows());
  double sigma_tot_mw2 =
      ns > 0 ? (Eigen::VectorXd::Ones(ns).transpose() * sigma_mw *
                Eigen::VectorXd::Ones(ns))(0)
             : 0.0;
  double cost = 0.0;
  for (std::size_t g = 0; g < gens.size(); ++g) {
    double p = d.p_g(g);
    cost += gens[g].c2 * p * p + gens[g].c2 * sigma_tot_mw2 * d.alpha(g) * d.alpha(g) +
            gens[g].c1 * p + gens[g].c0;
  }
  return cost;
}

ChanceCheck chance_violation_frequencies(const net::Network& network,
                                         const net::IncidenceMap& inc,
                                         const Dispatch& dispatch,
                                         const Eigen::MatrixXd& sigma_mw,
                                         int samples, std::uint64_t seed) {
  const int nb = static_cast<int>(network.buses.size());
  const int nl = static_cast<int>(network.lines.size());
  const int ng = static_cast<int>(network.generators.size());
  const int ns = static_cast<int>(network.stations.size());
  const double base = network.base_mva;
  const double z = dispatch.z;

  StationIndex si = station_columns(network, inc);
  auto gcols = generator_columns(network, inc);
  Eigen::MatrixXd wmat = voltage_sensitivity(network, inc, z);
  Eigen::MatrixXd sigma_sqrt = matrix_sqrt(sigma_mw / (base * base));

  // Station-space coefficient of each line / bus deviation.
  Eigen::MatrixXd line_coef(nl, ns);
  Eigen::VectorXd line_alpha(nl);
  for (int l = 0; l < nl; ++l) {
    for (int s = 0; s < ns; ++s) line_coef(l, s) = inc.A(l, si.col[s]);
    double acc = 0.0;
    for (int g = 0; g < ng; ++g)
      if (gcols[g] >= 0) acc += dispatch.alpha(g) * inc.A(l, gcols[g]);
    line_alpha(l) = acc;
  }
  Eigen::MatrixXd bus_coef(nb, ns);
  Eigen::VectorXd bus_alpha(nb);
  bus_coef.setZero();
  bus_alpha.setZero();
  for (int i = 0; i < nb; ++i) {
    int c = inc.column_of_bus[i];
    if (c < 0) continue;
    for (int s = 0; s < ns; ++s) bus_coef(i, s) = wmat(si.col[s], c);
    double acc = 0.0;
    for (int g = 0; g < ng; ++g)
      if (gcols[g] >= 0) acc += dispatch.alpha(g) * wmat(gcols[g], c);
    bus_alpha(i) = acc;
  }

  auto edges = polygon_coefficients(12);
  Eigen::VectorXd pg = dispatch.p_g / base, qg = dispatch.q_g / base;
  Eigen::VectorXd pf = dispatch.p_flow / base, qf = dispatch.q_flow / base;

  Eigen::VectorXi viol_gp = Eigen::VectorXi::Zero(ng), viol_gq = Eigen::VectorXi::Zero(ng);
  Eigen::VectorXi viol_v = Eigen::VectorXi::Zero(nb);
  Eigen::MatrixXi viol_line = Eigen::MatrixXi::Zero(nl, static_cast<int>(edges.size()));

  auto eng = make_engine(seed, 0xCC5);
  const double tol = 1e-9;
  for (int it = 0; it < samples; ++it) {
    Eigen::VectorXd u(ns);
    for (int s = 0; s < ns; ++s) u(s) = normal(eng);
    Eigen::VectorXd omega = sigma_sqrt * u;
    double total = omega.sum();

    for (int g = 0; g < ng; ++g) {
      double p = pg(g) + dispatch.alpha(g) * total;
      if (p > network.generators[g].p_max + tol || p < network.generators[g].p_min - tol)
        viol_gp(g) += 1;
      double qv = qg(g) + z * dispatch.alpha(g) * total;
      if (qv > network.generators[g].q_max + tol ||
          qv < network.generators[g].q_min - tol)
        viol_gq(g) += 1;
    }
    Eigen::VectorXd dp = line_coef * omega - line_alpha * total;
    for (int l = 0; l < nl; ++l) {
      double p = pf(l) + dp(l), q = qf(l) + z * dp(l);
      for (std::size_t c = 0; c < edges.size(); ++c)
        if (edges[c].b1 * p + edges[c].b2 * q >
            edges[c].b3 * network.lines[l].s_max + tol)
          viol_line(l, static_cast<int>(c)) += 1;
    }
    Eigen::VectorXd dv = -2.0 * (bus_coef * omega - bus_alpha * total);
    for (int i = 0; i < nb; ++i) {
      if (i == network.root_index) continue;
      double v = dispatch.v2(i) + dv(i);
      if (v > network.buses[i].v2_max + tol || v < network.buses[i].v2_min - tol)
        viol_v(i) += 1;
    }
  }

  ChanceCheck out;
  double inv = 1.0 / samples;
  if (ng) out.gen_p = viol_gp.cast<double>().maxCoeff() * inv;
  if (ng) out.gen_q = viol_gq.cast<double>().maxCoeff() * inv;
  if (nb) out.voltage = viol_v.cast<double>().maxCoeff() * inv;
  if (nl) out.line = viol_line.cast<double>().maxCoeff() * inv;
  out.max_frequency = std::max({out.gen_p, out.gen_q, out.voltage, out.line});
  return out;
}

}  // namespace evdro::dopf
