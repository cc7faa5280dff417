#include <doctest.h>

#include <random>

#include "bundles.hpp"
#include "evdro/ambiguity.hpp"
#include "evdro/behavior.hpp"
#include "evdro/dopf.hpp"
#include "evdro/error.hpp"

using namespace evdro;
using namespace evdro::dopf;
using testutil::BundleBuilder;

namespace {

/// Station demand covariance from a short behavioral run on the bundle.
Eigen::MatrixXd sampled_sigma(const net::Network& network, Eigen::VectorXd* mean) {
  behavior::PopulationConfig cfg;
  cfg.arrival_rate.assign(network.stations.size(), 30.0);
  cfg.ch_avg_mw = 0.011;
  auto pop = behavior::sample_population(cfg, 7);
  auto scenarios = behavior::run_scenarios(pop, network.stations, cfg, 300, 7);
  std::vector<Eigen::VectorXd> p;
  for (const auto& sc : scenarios) p.push_back(sc.p_ev);
  auto m = ambiguity::empirical_moments(p);
  m = ambiguity::regularize_covariance(m, 1e-3);
  if (mean) *mean = m.mean;
  return m.cov;
}

DopfParams drcc_params(double eta_value) {
  DopfParams p;
  p.mode = Mode::drcc;
  p.eta = eta_value;
  return p;
}

}  // namespace

TEST_CASE("polygon coefficients: first edge and apothem behavior") {
  auto edges = polygon_coefficients(12);
  REQUIRE(edges.size() == 12);
  CHECK(edges[0].b1 == doctest::Approx(1.0));
  CHECK(edges[0].b2 == doctest::Approx(0.0));
  CHECK(edges[0].b3 == doctest::Approx(0.9659258263));

  const double s = 2.0;
  auto feasible = [&](double p, double q) {
    for (const auto& e : edges)
      if (e.b1 * p + e.b2 * q > e.b3 * s + 1e-12) return false;
    return true;
  };
  CHECK(feasible(edges[0].b3 * s, 0.0));  // apothem point
  CHECK_FALSE(feasible(s, 0.0));          // circle point cut off (conservatism)
}

TEST_CASE("polygon is an inner approximation of the disk") {
  auto edges = polygon_coefficients(12);
  const double s = 1.5;
  std::mt19937_64 eng(8);
  std::uniform_real_distribution<double> u(-1.8, 1.8);
  int checked = 0;
  for (int it = 0; it < 400000 && checked < 100000; ++it) {
    double p = u(eng), q = u(eng);
    bool ok = true;
    for (const auto& e : edges)
      if (e.b1 * p + e.b2 * q > e.b3 * s) {
        ok = false;
        break;
      }
    if (!ok) continue;
    ++checked;
    CHECK(p * p + q * q <= s * s * (1.0 + 1e-12));
  }
  CHECK(checked == 100000);
}

TEST_CASE("polygon rejects degenerate edge counts") {
  CHECK_THROWS_AS(polygon_coefficients(3), Error);
}

TEST_CASE("deviation stddevs vanish in the deterministic limit") {
  auto network = testutil::chain3().load("ds_zero");
  auto inc = net::downstream_matrix(network);
  Eigen::MatrixXd sigma = Eigen::MatrixXd::Zero(1, 1);
  Eigen::VectorXd alpha = Eigen::VectorXd::Ones(1);
  auto shift = deviation_stddevs(network, inc, sigma, alpha, 0.2);
  CHECK(shift.sd_line_p.cwiseAbs().maxCoeff() == 0.0);
  CHECK(shift.sd_v2.cwiseAbs().maxCoeff() == 0.0);
  CHECK(shift.sd_gen_p.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("deviation covariance matches the hand-computed 2-bus case") {
  // root + two load buses, stations on both, generators on both; alpha (.5,.5)
  BundleBuilder b;
  b.buses += "1,root,0,0,0.81,1.21\n2,load,1,0.5,0.81,1.21\n3,load,1,0.5,0.81,1.21\n";
  b.lines += "1,2,0.01,0.02,40\n1,3,0.01,0.02,40\n";
  b.gens += "2,0,20,-10,10,1,100,0\n3,0,20,-10,10,1,100,0\n";
  b.stations += "1,2,5,0.3,0.3\n2,3,5,0.3,0.3\n";
  auto network = b.load("ds_hand");
  auto inc = net::downstream_matrix(network);

  Eigen::MatrixXd sigma = Eigen::MatrixXd::Identity(2, 2);
  Eigen::VectorXd alpha = Eigen::VectorXd::Constant(2, 0.5);
  auto shift = deviation_stddevs(network, inc, sigma, alpha, 0.2);
  Eigen::MatrixXd expect(2, 2);
  expect << 0.5, -0.5, -0.5, 0.5;
  CHECK((shift.dev_cov - expect).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("response concentrated at the only uncertain node cancels deviations") {
  BundleBuilder b = testutil::chain3();
  b.gens += "3,0,20,-10,10,2,120,0\n";
  auto network = b.load("ds_cancel");
  auto inc = net::downstream_matrix(network);

  Eigen::MatrixXd sigma = Eigen::MatrixXd::Constant(1, 1, 0.25);
  Eigen::VectorXd alpha(2);
  alpha << 0.0, 1.0;  // all response at the station bus
  auto shift = deviation_stddevs(network, inc, sigma, alpha, 0.2);
  CHECK(shift.sd_line_p.cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(shift.sd_v2.cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(shift.sd_gen_p(1) == doctest::Approx(0.5));
}

TEST_CASE("deviation stddevs agree with a Monte-Carlo oracle") {
  auto network = net::load_network("data/ieee33");
  auto inc = net::downstream_matrix(network);
  const int ns = static_cast<int>(network.stations.size());

  Eigen::MatrixXd a(ns, ns);
  a.setZero();
  a.diagonal() << 0.06, 0.05, 0.07, 0.04;
  a(1, 0) = 0.02;
  a(2, 1) = -0.015;
  Eigen::MatrixXd sigma_pu = (a * a.transpose()) / (network.base_mva * network.base_mva);
  Eigen::VectorXd alpha(4);
  alpha << 0.4, 0.3, 0.2, 0.1;

  auto shift = deviation_stddevs(network, inc, sigma_pu, alpha, 0.2);

  // Sample omega, propagate through the tree directly, compare deviations.
  std::mt19937_64 eng(5150);
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::MatrixXd sqrt_sigma;
  {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sigma_pu);
    sqrt_sigma = es.eigenvectors() *
                 es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
                 es.eigenvectors().transpose();
  }
  const int nl = static_cast<int>(network.lines.size());
  Eigen::VectorXd rz(nl);
  for (int l = 0; l < nl; ++l) rz(l) = network.lines[l].r + 0.2 * network.lines[l].x;

  Eigen::VectorXd acc_line = Eigen::VectorXd::Zero(nl);
  Eigen::VectorXd acc_v = Eigen::VectorXd::Zero(network.buses.size());
  const int samples = 200000;
  for (int it = 0; it < samples; ++it) {
    Eigen::VectorXd u(ns);
    for (int s = 0; s < ns; ++s) u(s) = g(eng);
    Eigen::VectorXd omega = sqrt_sigma * u;
    Eigen::VectorXd delta = Eigen::VectorXd::Zero(network.buses.size() - 1);
    for (int s = 0; s < ns; ++s)
      delta(inc.column_of_bus[network.bus_index(network.stations[s].bus)]) += omega(s);
    double total = omega.sum();
    for (std::size_t gi = 0; gi < network.generators.size(); ++gi) {
      int c = inc.column_of_bus[network.bus_index(network.generators[gi].bus)];
      if (c >= 0) delta(c) -= alpha(gi) * total;
    }
    Eigen::VectorXd dline = inc.A * delta;
    acc_line += dline.cwiseProduct(dline);
    Eigen::VectorXd drop = rz.cwiseProduct(dline);
    for (std::size_t i = 0; i < network.buses.size(); ++i) {
      int c = inc.column_of_bus[i];
      if (c < 0) continue;
      double dv = -2.0 * inc.A.col(c).dot(drop);
      acc_v(i) += dv * dv;
    }
  }
  Eigen::VectorXd mc_line = (acc_line / samples).cwiseSqrt();
  Eigen::VectorXd mc_v = (acc_v / samples).cwiseSqrt();
  for (int l = 0; l < nl; ++l) {
    if (shift.sd_line_p(l) < 1e-8) {
      CHECK(mc_line(l) <= 1e-6);
    } else {
      CHECK(mc_line(l) == doctest::Approx(shift.sd_line_p(l)).epsilon(0.02));
    }
  }
  for (std::size_t i = 0; i < network.buses.size(); ++i) {
    if (shift.sd_v2(i) < 1e-10) continue;
    CHECK(mc_v(i) == doctest::Approx(shift.sd_v2(i)).epsilon(0.02));
  }
}

TEST_CASE("two-bus lossless balance dispatches exactly the load") {
  auto network = testutil::chain3(0.0, 1.0).load("bal");  // 1 MW at bus 3
  auto inc = net::downstream_matrix(network);
  Eigen::MatrixXd sigma = Eigen::MatrixXd::Zero(1, 1);
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(1);
  DopfParams params;
  params.mode = Mode::deterministic;
  auto model = assemble_model(network, inc, sigma, mean, params);
  auto report = dopf::solve(model, network, socp::InteriorPointSolver());
  REQUIRE(report.status == socp::Status::optimal);
  CHECK(report.dispatch.p_g(0) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(report.dispatch.alpha(0) == doctest::Approx(1.0));
  CHECK(report.primal_residual <= 1e-6);
}

TEST_CASE("single generator is forced to full participation") {
  auto network = testutil::chain3().load("alpha1");
  auto inc = net::downstream_matrix(network);
  Eigen::MatrixXd sigma = Eigen::MatrixXd::Constant(1, 1, 0.01);
  Eigen::VectorXd mean = Eigen::VectorXd::Constant(1, 0.4);
  auto model = assemble_model(network, inc, sigma, mean, drcc_params(2.0));
  auto report = dopf::solve(model, network, socp::InteriorPointSolver());
  REQUIRE(report.status == socp::Status::optimal);
  CHECK(report.dispatch.alpha(0) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("objective is nondecreasing in eta and matches deterministic at sigma zero") {
  auto network = net::load_network("data/ieee33");
  auto inc = net::downstream_matrix(network);
  Eigen::VectorXd mean;
  Eigen::MatrixXd sigma = sampled_sigma(network, &mean);

  socp::InteriorPointSolver solver;
  double prev = -1e30;
  for (double eta : {0.0, 1.0, 2.0, 3.16}) {
    auto model = assemble_model(network, inc, sigma, mean, drcc_params(eta));
    auto report = dopf::solve(model, network, solver);
    REQUIRE(report.status == socp::Status::optimal);
    CHECK(report.dispatch.objective_value >= prev - 1e-5);
    prev = report.dispatch.objective_value;
  }

  Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(4, 4);
  auto drcc_model = assemble_model(network, inc, zero, mean, drcc_params(3.16));
  auto drcc_rep = dopf::solve(drcc_model, network, solver);
  DopfParams det;
  det.mode = Mode::deterministic;
  auto det_model = assemble_model(network, inc, zero, mean, det);
  auto det_rep = dopf::solve(det_model, network, solver);
  REQUIRE(drcc_rep.status == socp::Status::optimal);
  REQUIRE(det_rep.status == socp::Status::optimal);
  CHECK(drcc_rep.dispatch.objective_value ==
        doctest::Approx(det_rep.dispatch.objective_value).epsilon(1e-6));
}

TEST_CASE("solved 33-bus dispatch satisfies the declared invariants") {
  auto network = net::load_network("data/ieee33");
  auto inc = net::downstream_matrix(network);
  Eigen::VectorXd mean;
  Eigen::MatrixXd sigma = sampled_sigma(network, &mean);
  auto model = assemble_model(network, inc, sigma, mean, drcc_params(3.1622776601));
  auto report = dopf::solve(model, network, socp::InteriorPointSolver());
  REQUIRE(report.status == socp::Status::optimal);
  const auto& d = report.dispatch;

  CHECK(std::abs(d.alpha.sum() - 1.0) <= 1e-9);
  CHECK((d.alpha.array() >= -1e-9).all());
  CHECK(report.primal_residual <= 1e-6);
  CHECK(report.objective_check_error <= 1e-6);

  // voltage-drop equalities hold at the solution
  for (std::size_t l = 0; l < network.lines.size(); ++l) {
    const auto& ln = network.lines[l];
    double vi = d.v2(network.bus_index(ln.from_bus));
    double vk = d.v2(network.bus_index(ln.to_bus));
    double resid = vi - vk -
                   2.0 * (ln.r * d.p_flow(l) + ln.x * d.q_flow(l)) / network.base_mva;
    CHECK(std::abs(resid) <= 1e-8);
  }

  for (std::size_t i = 0; i < network.buses.size(); ++i) {
    CHECK(d.v2(i) >= network.buses[i].v2_min - 1e-7);
    CHECK(d.v2(i) <= network.buses[i].v2_max + 1e-7);
  }

  // empirical chance-constraint validation
  auto check = chance_violation_frequencies(network, inc, d, sigma, 10000, 99);
  CHECK(check.max_frequency <= 0.1);
}

TEST_CASE("capacity shortfall is reported as an assembly diagnostic") {
  BundleBuilder b = testutil::chain3(4.0, 4.0);
  b.gens = "bus,p_min_mw,p_max_mw,q_min_mvar,q_max_mvar,c2,c1,c0\n"
           "1,0,5,-10,10,1,100,0\n";  // 5 MW cap for 8 MW of load
  auto network = b.load("cap");
  auto inc = net::downstream_matrix(network);
  Eigen::MatrixXd sigma = Eigen::MatrixXd::Zero(1, 1);
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(1);
  DopfParams params;
  params.mode = Mode::deterministic;
  auto model = assemble_model(network, inc, sigma, mean, params);
  CHECK(model.infeasible_at_assembly);
  auto report = dopf::solve(model, network, socp::InteriorPointSolver());
  CHECK(report.status == socp::Status::infeasible);
  CHECK(report.message.find("generation capacity") != std::string::npos);
}

TEST_CASE("expected cost formula on scalars") {
  Dispatch d;
  d.p_g = Eigen::VectorXd::Constant(1, 0.0);
  d.alpha = Eigen::VectorXd::Constant(1, 1.0);
  std::vector<net::Generator> gens(1);
  gens[0].c2 = 2.0;
  gens[0].c1 = 0.0;
  gens[0].c0 = 0.0;
  Eigen::MatrixXd sigma = Eigen::MatrixXd::Constant(1, 1, 4.0);
  CHECK(expected_cost(d, sigma, gens, 10.0) == doctest::Approx(8.0));

  // doubling sigma adds exactly c2 * (1'S1) * alpha^2
  double c1 = expected_cost(d, sigma, gens, 10.0);
  double c2 = expected_cost(d, 2.0 * sigma, gens, 10.0);
  CHECK(c2 - c1 == doctest::Approx(2.0 * 4.0 * 1.0));

  Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(1, 1);
  d.p_g(0) = 3.0;
  gens[0].c1 = 10.0;
  gens[0].c0 = 5.0;
  CHECK(expected_cost(d, zero, gens, 10.0) == doctest::Approx(2.0 * 9.0 + 30.0 + 5.0));
}
