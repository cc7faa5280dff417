#include "evdro/posteval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <sstream>
#include <thread>

#include "evdro/csv.hpp"
#include "evdro/rng.hpp"

namespace evdro::posteval {

namespace {

Eigen::MatrixXd matrix_sqrt(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (m + m.transpose()));
  Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace

std::vector<Realization> sample_realizations_gaussian(const Eigen::VectorXd& mean_mw,
                                                      const Eigen::MatrixXd& sigma_mw,
                                                      int count, std::uint64_t seed) {
  if (count < 1) throw Error("sample_realizations: count must be >= 1");
  Eigen::MatrixXd s = matrix_sqrt(sigma_mw);
  const int ns = static_cast<int>(mean_mw.size());
  std::vector<Realization> out(count);
  for (int k = 0; k < count; ++k) {
    auto eng = make_engine(seed, static_cast<std::uint64_t>(k));
    Eigen::VectorXd u(ns);
    for (int i = 0; i < ns; ++i) u(i) = normal(eng);
    out[k].p_ev_actual = (mean_mw + s * u).cwiseMax(0.0);
    out[k].source = RealizationSource::gaussian_moments;
  }
  return out;
}

std::vector<Realization> sample_realizations_behavioral(
    const behavior::PopulationConfig& cfg, const std::vector<net::Evcs>& stations,
    int count, std::uint64_t seed) {
  if (count < 1) throw Error("sample_realizations: count must be >= 1");
  const int ns = static_cast<int>(stations.size());
  std::vector<Realization> out(count);
  for (int k = 0; k < count; ++k) {
    std::uint64_t sk = mix_seed(seed, static_cast<std::uint64_t>(k) + 0xFEED);
    auto pop = behavior::sample_population(cfg, sk);
    auto scenarios = behavior::run_scenarios(pop, stations, cfg, 1, mix_seed(sk, 1));
    const auto& sc = scenarios.front();

    // Realized charge per owner is price sensitive: ch_avg - beta * dlambda.
    Eigen::VectorXd p = Eigen::VectorXd::Zero(ns);
    for (std::size_t k2 = 0; k2 < sc.owner.size(); ++k2) {
      int dest = sc.delta[k2];
      double dlambda =
          stations[dest].lambda_offered - stations[dest].lambda_nominal;
      double beta = pop.owners[sc.owner[k2]].beta;
      p(dest) += std::clamp(pop.ch_avg - beta * dlambda, 0.0, 2.0 * pop.ch_avg);
    }
    out[k].p_ev_actual = p;
    out[k].source = RealizationSource::behavioral_resim;
    out[k].vehicle_count = sc.n.sum();
  }
  return out;
}

RedispatchResult redispatch(const net::Network& network, const net::IncidenceMap& inc,
                            const dopf::Dispatch& dispatch,
                            const Realization& realization,
                            const Penalties& penalties) {
  const int nb = static_cast<int>(network.buses.size());
  const int nl = static_cast<int>(network.lines.size());
  const int ng = static_cast<int>(network.generators.size());
  const int ns = static_cast<int>(network.stations.size());
  const double base = network.base_mva;
  if (realization.p_ev_actual.size() != ns)
    throw Error("redispatch: realization dimension mismatch");

  RedispatchResult res;
  double omega_total = (realization.p_ev_actual - dispatch.predicted_p_ev).sum();

  // Generators follow their fixed participation factors; whatever the limits
  // cannot absorb becomes redispatch slack.
  res.slack_up = Eigen::VectorXd::Zero(ng);
  res.slack_down = Eigen::VectorXd::Zero(ng);
  Eigen::VectorXd target_p(ng), target_q(ng), delivered_p(ng);
  for (int g = 0; g < ng; ++g) {
    const auto& gen = network.generators[g];
    target_p(g) = dispatch.p_g(g) + dispatch.alpha(g) * omega_total;
    target_q(g) = dispatch.q_g(g) + dispatch.z * dispatch.alpha(g) * omega_total;
    res.slack_up(g) = std::max(0.0, target_p(g) - network.to_mw(gen.p_max));
    res.slack_down(g) = std::max(0.0, network.to_mw(gen.p_min) - target_p(g));
    delivered_p(g) = std::clamp(target_p(g), network.to_mw(gen.p_min),
                                network.to_mw(gen.p_max));
  }

  // Network state under the affine response (per-unit).
  Eigen::VectorXd inj_p = Eigen::VectorXd::Zero(nb - 1);
  Eigen::VectorXd inj_q = Eigen::VectorXd::Zero(nb - 1);
  for (int i = 0; i < nb; ++i) {
    int c = inc.column_of_bus[i];
    if (c < 0) continue;
    inj_p(c) = network.buses[i].p_load;
    inj_q(c) = network.buses[i].q_load;
  }
  for (int s = 0; s < ns; ++s) {
    int c = inc.column_of_bus[network.bus_index(network.stations[s].bus)];
    inj_p(c) += realization.p_ev_actual(s) / base;
    inj_q(c) += dispatch.z * realization.p_ev_actual(s) / base;
  }
  for (int g = 0; g < ng; ++g) {
    int c = inc.column_of_bus[network.bus_index(network.generators[g].bus)];
    if (c < 0) continue;
    inj_p(c) -= target_p(g) / base;
    inj_q(c) -= target_q(g) / base;
  }
  Eigen::VectorXd pf = inc.A * inj_p;
  Eigen::VectorXd qf = inc.A * inj_q;

  Eigen::VectorXd rvec(nl), xvec(nl);
  for (int l = 0; l < nl; ++l) {
    rvec(l) = network.lines[l].r;
    xvec(l) = network.lines[l].x;
  }
  Eigen::VectorXd drop = rvec.cwiseProduct(pf) + xvec.cwiseProduct(qf);

  res.voltage_slacks = Eigen::VectorXd::Zero(nb);
  for (int i = 0; i < nb; ++i) {
    int c = inc.column_of_bus[i];
    double v2 = 1.0;
    if (c >= 0) v2 = 1.0 - 2.0 * inc.A.col(c).dot(drop);
    res.voltage_slacks(i) = std::max(0.0, v2 - network.buses[i].v2_max) +
                            std::max(0.0, network.buses[i].v2_min - v2);
  }
  res.line_slacks = Eigen::VectorXd::Zero(nl);
  for (int l = 0; l < nl; ++l) {
    double s_pu = std::hypot(pf(l), qf(l));
    res.line_slacks(l) = std::max(0.0, (s_pu - network.lines[l].s_max) * base);
  }

  res.penalty_cost = penalties.balance_per_mw * (res.slack_up.sum() + res.slack_down.sum()) +
                     penalties.line_per_mva * res.line_slacks.sum() +
                     penalties.voltage_per_pu2 * res.voltage_slacks.sum();

  double gen_cost = 0.0;
  for (int g = 0; g < ng; ++g) {
    const auto& gen = network.generators[g];
    gen_cost += gen.c2 * delivered_p(g) * delivered_p(g) + gen.c1 * delivered_p(g) +
                gen.c0;
  }
  res.realized_cost = gen_cost + res.penalty_cost;

  double worst = std::max({res.slack_up.maxCoeff(), res.slack_down.maxCoeff(),
                           res.voltage_slacks.maxCoeff(), res.line_slacks.maxCoeff()});
  res.feasible_flag = worst <= 1e-6;
  return res;
}

ViolationStats violation_stats(const std::vector<RedispatchResult>& results,
                               double tol, double base_mva) {
  if (results.empty()) throw Error("violation_stats: empty input");
  int any = 0, bal = 0, volt = 0, line = 0, gen = 0;
  for (const auto& r : results) {
    bool g = (r.slack_up.maxCoeff() / base_mva > tol) ||
             (r.slack_down.maxCoeff() / base_mva > tol);
    bool b = std::abs(r.slack_up.sum() - r.slack_down.sum()) / base_mva > tol;
    bool v = r.voltage_slacks.maxCoeff() > tol;
    bool l = r.line_slacks.maxCoeff() / base_mva > tol;
    gen += g;
    bal += b;
    volt += v;
    line += l;
    any += (g || b || v || l);
  }
  double inv = 100.0 / static_cast<double>(results.size());
  return {any * inv, bal * inv, volt * inv, line * inv, gen * inv};
}

EvalSummary evaluate_dispatch(const net::Network& network, const net::IncidenceMap& inc,
                              const dopf::Dispatch& dispatch,
                              const std::vector<Realization>& realizations,
                              const Penalties& penalties, double tol,
                              std::uint64_t seed, int threads,
                              std::vector<RedispatchResult>* per_realization) {
  if (realizations.empty()) throw Error("evaluate_dispatch: no realizations");
  const int n = static_cast<int>(realizations.size());
  std::vector<RedispatchResult> results(n);

  auto run_one = [&](int k) {
    results[k] = redispatch(network, inc, dispatch, realizations[k], penalties);
  };
  threads = std::max(1, threads);
  if (threads == 1) {
    for (int k = 0; k < n; ++k) run_one(k);
  } else {
    std::atomic<int> next{0};
    auto worker = [&] {
      for (int k = next.fetch_add(1); k < n; k = next.fetch_add(1)) run_one(k);
    };
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  EvalSummary s;
  s.mode = dopf::mode_name(dispatch.mode);
  s.realizations = n;
  s.seed = seed;
  for (const auto& r : results) {
    s.mean_cost += r.realized_cost;
    s.d_bar += r.slack_up.sum();
    s.d_under += r.slack_down.sum();
  }
  s.mean_cost /= n;
  s.d_bar /= n;
  s.d_under /= n;
  s.violation_pct = violation_stats(results, tol, network.base_mva).violation_pct;
  if (per_realization) *per_realization = std::move(results);
  return s;
}

ComparisonReport compare(std::vector<EvalSummary> summaries) {
  if (summaries.size() < 2) throw Error("compare: need at least two modes");
  for (std::size_t i = 1; i < summaries.size(); ++i) {
    if (summaries[i].seed != summaries[0].seed ||
        summaries[i].realizations != summaries[0].realizations)
      throw Error("compare: summaries use mismatched realization sets");
  }
  double best = summaries[0].mean_cost;
  for (const auto& s : summaries) best = std::min(best, s.mean_cost);
  for (auto& s : summaries)
    s.cost_increase_pct = best > 0.0 ? 100.0 * (s.mean_cost / best - 1.0) : 0.0;

  std::ostringstream os;
  os << "Post-optimization comparison (" << summaries[0].realizations
     << " realizations, seed " << summaries[0].seed << ")\n";
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%-14s %16s %14s %12s %12s\n", "model",
                "avg cost ($)", "increase (%)", "D_bar (MW)", "violation (%)");
  os << buf;
  for (const auto& s : summaries) {
    std::snprintf(buf, sizeof(buf), "%-14s %16.2f %14.2f %12.4f %12.2f\n",
                  s.mode.c_str(), s.mean_cost, s.cost_increase_pct, s.d_bar,
                  s.violation_pct);
    os << buf;
  }

  ComparisonReport rep;
  rep.rows = std::move(summaries);
  rep.text = os.str();
  return rep;
}

}  // namespace evdro::posteval
