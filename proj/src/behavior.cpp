#include "evdro/behavior.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "evdro/csv.hpp"
#include "evdro/rng.hpp"

namespace evdro::behavior {

promethee::CriteriaSet owner_criteria() {
  using promethee::Direction;
  return {{{"price", Direction::minimize},
           {"congestion", Direction::minimize},
           {"bias", Direction::maximize}}};
}

namespace {

void check_range(const Range& r, const char* name, bool positive = false) {
  if (r.lo > r.hi) throw Error(std::string("population config: range '") + name +
                               "' has lo > hi");
  if (r.lo < 0.0) throw Error(std::string("population config: range '") + name +
                              "' must be nonnegative");
  if (positive && r.hi <= 0.0)
    throw Error(std::string("population config: range '") + name +
                "' must admit positive values");
}

double draw(std::mt19937_64& eng, const Range& r) {
  if (r.lo == r.hi) return r.lo;
  return uniform(eng, r.lo, r.hi);
}

promethee::PreferenceThresholds draw_thresholds(std::mt19937_64& eng, const Range& q,
                                                const Range& p_add) {
  promethee::PreferenceThresholds th;
  th.tau_q = draw(eng, q);
  double add = draw(eng, p_add);
  th.tau_p = th.tau_q + std::max(add, 1e-9);  // tau_q < tau_p by construction
  return th;
}

}  // namespace

void PopulationConfig::validate() const {
  if (arrival_rate.empty()) throw Error("population config: no stations configured");
  double total = 0.0;
  for (double r : arrival_rate) {
    if (r < 0.0) throw Error("population config: negative arrival rate");
    total += r;
  }
  if (total <= 0.0) throw Error("population config: empty population (all rates zero)");
  if (ch_avg_mw <= 0.0) throw Error("population config: ch_avg_mw must be positive");
  if (service_minutes <= 0.0)
    throw Error("population config: service_minutes must be positive");
  if (pool_factor < 1.0) throw Error("population config: pool_factor must be >= 1");
  check_range(beta, "beta");
  check_range(bias, "bias");
  check_range(tau_q_price, "tau_q_price");
  check_range(tau_p_add_price, "tau_p_add_price", true);
  check_range(tau_q_congestion, "tau_q_congestion");
  check_range(tau_p_add_congestion, "tau_p_add_congestion", true);
  check_range(tau_q_bias, "tau_q_bias");
  check_range(tau_p_add_bias, "tau_p_add_bias", true);
}

OwnerPopulation sample_population(const PopulationConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  const int ns = static_cast<int>(cfg.arrival_rate.size());

  OwnerPopulation pop;
  pop.ch_avg = cfg.ch_avg_mw;
  pop.by_station.resize(ns);

  auto eng = make_engine(seed, 0xB0B);
  int next_id = 0;
  for (int s = 0; s < ns; ++s) {
    int pool = static_cast<int>(std::ceil(cfg.arrival_rate[s] * cfg.pool_factor)) + 5;
    for (int k = 0; k < pool; ++k) {
      Owner o;
      o.id = next_id++;
      o.home_station = s;
      Eigen::VectorXd w(3);
      for (int j = 0; j < 3; ++j) w(j) = uniform(eng, 0.0, 1.0);
      o.weights.w = w / w.sum();
      o.thresholds = {draw_thresholds(eng, cfg.tau_q_price, cfg.tau_p_add_price),
                      draw_thresholds(eng, cfg.tau_q_congestion, cfg.tau_p_add_congestion),
                      draw_thresholds(eng, cfg.tau_q_bias, cfg.tau_p_add_bias)};
      o.bias_strength = draw(eng, cfg.bias);
      o.beta = draw(eng, cfg.beta);
      pop.by_station[s].push_back(static_cast<int>(pop.owners.size()));
      pop.owners.push_back(std::move(o));
    }
  }
  return pop;
}

promethee::PerformanceTable station_performance(const std::vector<StationState>& states,
                                                const Owner& owner) {
  promethee::PerformanceTable table;
  const int n = static_cast<int>(states.size());
  table.g.resize(n, 3);
  for (int i = 0; i < n; ++i) {
    table.g(i, 0) = states[i].price;
    table.g(i, 1) = states[i].congestion_minutes;
    table.g(i, 2) = states[i].station == owner.home_station ? owner.bias_strength : 0.0;
  }
  return table;
}

Scenario simulate_scenario(const OwnerPopulation& pop,
                           const std::vector<StationState>& states,
                           std::uint64_t seed) {
  const int ns = static_cast<int>(states.size());
  const auto criteria = owner_criteria();

  // Arrivals are the stations' initial occupancy; each arrived owner is drawn
  // from its home station's pool without replacement.
  auto eng = make_engine(seed, 0x5CE);
  std::vector<int> participants;
  for (int s = 0; s < ns; ++s) {
    int want = std::min<int>(states[s].occupancy,
                             static_cast<int>(pop.by_station[s].size()));
    std::vector<int> pool = pop.by_station[s];
    for (int k = 0; k < want; ++k) {
      std::uniform_int_distribution<int> pick(k, static_cast<int>(pool.size()) - 1);
      std::swap(pool[k], pool[pick(eng)]);
      participants.push_back(pool[k]);
    }
  }

  Scenario sc;
  sc.n = Eigen::VectorXi::Zero(ns);
  sc.owner = participants;
  sc.delta.reserve(participants.size());
  for (int idx : participants) {
    const Owner& o = pop.owners[idx];
    auto table = station_performance(states, o);
    auto pi = promethee::preference_matrix(table, criteria, o.thresholds, o.weights);
    auto flows = promethee::outranking_flows(pi);
    int dest = promethee::select_best(flows, o.home_station);
    sc.delta.push_back(dest);
    sc.n(dest) += 1;
  }
  sc.p_ev = sc.n.cast<double>() * pop.ch_avg;
  return sc;
}

std::vector<Scenario> run_scenarios(const OwnerPopulation& pop,
                                    const std::vector<net::Evcs>& stations,
                                    const PopulationConfig& cfg, int k_sc,
                                    std::uint64_t seed, int threads) {
  if (k_sc < 1) throw Error("run_scenarios: need at least one scenario");
  if (stations.size() != cfg.arrival_rate.size())
    throw Error("run_scenarios: station/arrival-rate count mismatch");
  const int ns = static_cast<int>(stations.size());

  auto run_one = [&](int k) {
    auto eng = make_engine(seed, static_cast<std::uint64_t>(k) * 2);
    std::vector<StationState> states(ns);
    for (int s = 0; s < ns; ++s) {
      states[s].station = s;
      states[s].price = stations[s].lambda_offered;
      states[s].occupancy = poisson(eng, cfg.arrival_rate[s]);
      states[s].congestion_minutes = static_cast<double>(states[s].occupancy) /
                                     stations[s].chargers * cfg.service_minutes;
    }
    return simulate_scenario(pop, states, mix_seed(seed, static_cast<std::uint64_t>(k) * 2 + 1));
  };

  std::vector<Scenario> out(k_sc);
  threads = std::max(1, threads);
  if (threads == 1) {
    for (int k = 0; k < k_sc; ++k) out[k] = run_one(k);
  } else {
    std::atomic<int> next{0};
    auto worker = [&] {
      for (int k = next.fetch_add(1); k < k_sc; k = next.fetch_add(1)) out[k] = run_one(k);
    };
    std::vector<std::thread> ts;
    for (int t = 0; t < threads; ++t) ts.emplace_back(worker);
    for (auto& t : ts) t.join();
  }
  return out;
}

Eigen::VectorXd price_adjusted_mean(const Eigen::VectorXd& n_bar,
                                    const std::vector<net::Evcs>& stations,
                                    double ch_avg, double beta_mean) {
  if (n_bar.size() != static_cast<Eigen::Index>(stations.size()))
    throw Error("price_adjusted_mean: dimension mismatch");
  if ((n_bar.array() < 0.0).any())
    throw Error("price_adjusted_mean: negative n_bar entry");
  Eigen::VectorXd out(n_bar.size());
  for (Eigen::Index i = 0; i < n_bar.size(); ++i) {
    double dlambda = stations[i].lambda_offered - stations[i].lambda_nominal;
    double per_vehicle = std::clamp(ch_avg - beta_mean * dlambda, 0.0, 2.0 * ch_avg);
    out(i) = n_bar(i) * per_vehicle;
  }
  return out;
}

Eigen::VectorXd mean_counts(const std::vector<Scenario>& scenarios) {
  if (scenarios.empty()) throw Error("mean_counts: no scenarios");
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(scenarios.front().n.size());
  for (const auto& sc : scenarios) acc += sc.n.cast<double>();
  return acc / static_cast<double>(scenarios.size());
}

double mean_beta(const OwnerPopulation& pop) {
  if (pop.owners.empty()) return 0.0;
  double s = 0.0;
  for (const auto& o : pop.owners) s += o.beta;
  return s / static_cast<double>(pop.owners.size());
}

}  // namespace evdro::behavior
