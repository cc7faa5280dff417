#include "evdro/pipeline.hpp"

#include <fstream>
#include <map>

#include "evdro/csv.hpp"

namespace evdro::pipeline {

namespace {

std::filesystem::path scenarios_path(const config::PipelineConfig& cfg) {
  return cfg.out_dir / "scenarios.csv";
}

void require_file(const std::filesystem::path& p, const std::string& hint) {
  if (!std::filesystem::exists(p))
    throw Error("missing " + p.filename().string() + " (" + hint + ")");
}

}  // namespace

void write_dispatch(const std::filesystem::path& path, const dopf::Dispatch& d,
                    const net::Network& network) {
  csv::Writer w(path);
  w.field("section").field("key").field("value_pu").field("value");
  w.end_row();
  auto meta = [&](const std::string& key, const std::string& value) {
    w.field("meta").field(key).field("").field(value);
    w.end_row();
  };
  meta("mode", dopf::mode_name(d.mode));
  meta("objective_usd", csv::format_number(d.objective_value));
  meta("eta", csv::format_number(d.eta));
  meta("z", csv::format_number(d.z));
  auto rows = [&](const std::string& section, const Eigen::VectorXd& phys,
                  double base) {
    for (Eigen::Index i = 0; i < phys.size(); ++i) {
      w.field(section).field(static_cast<long long>(i)).field(phys(i) / base)
          .field(phys(i));
      w.end_row();
    }
  };
  rows("gen_p_mw", d.p_g, network.base_mva);
  rows("gen_q_mvar", d.q_g, network.base_mva);
  rows("alpha", d.alpha, 1.0);
  rows("bus_v2", d.v2, 1.0);
  rows("line_p_mw", d.p_flow, network.base_mva);
  rows("line_q_mvar", d.q_flow, network.base_mva);
  rows("pev_pred_mw", d.predicted_p_ev, network.base_mva);
}

dopf::Dispatch read_dispatch(const std::filesystem::path& path) {
  auto t = csv::Table::read_file(path);
  dopf::Dispatch d;
  std::map<std::string, std::vector<double>> sections;
  for (std::size_t r = 0; r < t.rows(); ++r) {
    const std::string& section = t.cell(r, "section");
    if (section == "meta") {
      const std::string& key = t.cell(r, "key");
      const std::string& value = t.cell(r, "value");
      if (key == "mode") d.mode = dopf::mode_from_name(value);
      if (key == "objective_usd") d.objective_value = std::stod(value);
      if (key == "eta") d.eta = std::stod(value);
      if (key == "z") d.z = std::stod(value);
    } else {
      sections[section].push_back(t.number(r, "value"));
    }
  }
  auto vec = [&](const std::string& name) {
    const auto& v = sections[name];
    return Eigen::Map<const Eigen::VectorXd>(v.data(), v.size()).eval();
  };
  d.p_g = vec("gen_p_mw");
  d.q_g = vec("gen_q_mvar");
  d.alpha = vec("alpha");
  d.v2 = vec("bus_v2");
  d.p_flow = vec("line_p_mw");
  d.q_flow = vec("line_q_mvar");
  d.predicted_p_ev = vec("pev_pred_mw");
  return d;
}

MomentsFile read_moments(const std::filesystem::path& out_dir) {
  require_file(out_dir / "moments.csv", "run the moments stage first");
  require_file(out_dir / "cov.csv", "run the moments stage first");
  auto t = csv::Table::read_file(out_dir / "moments.csv");
  MomentsFile m;
  const int ns = static_cast<int>(t.rows());
  m.mean_mw.resize(ns);
  m.n_bar.resize(ns);
  m.pm_mean_mw.resize(ns);
  for (int r = 0; r < ns; ++r) {
    m.mean_mw(r) = t.number(r, "mean_p_ev_mw");
    m.n_bar(r) = t.number(r, "n_bar");
    m.pm_mean_mw(r) = t.number(r, "pm_mean_p_ev_mw");
    m.k_sc = static_cast<int>(t.integer(r, "k_sc"));
  }
  auto c = csv::Table::read_file(out_dir / "cov.csv");
  m.cov_mw.resize(ns, ns);
  for (int r = 0; r < ns; ++r)
    for (int j = 0; j < ns; ++j)
      m.cov_mw(r, j) = c.number(r, "s" + std::to_string(j));
  return m;
}

void stage_simulate(const config::PipelineConfig& cfg) {
  auto network = net::load_network(cfg.network_dir);
  if (network.stations.size() != cfg.population.arrival_rate.size())
    throw Error("config: population.arrival_rate length must match station count");
  auto pop = behavior::sample_population(cfg.population, cfg.scenario.seed);
  auto scenarios = behavior::run_scenarios(pop, network.stations, cfg.population,
                                           cfg.scenario.k_sc, cfg.scenario.seed,
                                           cfg.threads);
  csv::Writer w(scenarios_path(cfg));
  w.field("scenario_id").field("station_id").field("n").field("p_ev_mw");
  w.end_row();
  for (std::size_t k = 0; k < scenarios.size(); ++k) {
    for (Eigen::Index s = 0; s < scenarios[k].n.size(); ++s) {
      w.field(static_cast<long long>(k)).field(static_cast<long long>(network.stations[s].id));
      w.field(static_cast<long long>(scenarios[k].n(s))).field(scenarios[k].p_ev(s));
      w.end_row();
    }
  }
}

void stage_moments(const config::PipelineConfig& cfg) {
  auto network = net::load_network(cfg.network_dir);
  require_file(scenarios_path(cfg), "run the simulate stage first");
  auto t = csv::Table::read_file(scenarios_path(cfg));
  const int ns = static_cast<int>(network.stations.size());

  std::vector<Eigen::VectorXd> p_ev;
  std::vector<Eigen::VectorXd> counts;
  for (std::size_t r = 0; r < t.rows(); ++r) {
    auto k = static_cast<std::size_t>(t.integer(r, "scenario_id"));
    int s = network.station_index(static_cast<int>(t.integer(r, "station_id")));
    while (p_ev.size() <= k) {
      p_ev.emplace_back(Eigen::VectorXd::Zero(ns));
      counts.emplace_back(Eigen::VectorXd::Zero(ns));
    }
    p_ev[k](s) = t.number(r, "p_ev_mw");
    counts[k](s) = static_cast<double>(t.integer(r, "n"));
  }
  auto moments = ambiguity::empirical_moments(p_ev);
  Eigen::VectorXd n_bar = Eigen::VectorXd::Zero(ns);
  for (const auto& c : counts) n_bar += c;
  n_bar /= static_cast<double>(counts.size());

  // The price-adjusted mean needs the population's mean sensitivity, which is
  // reproducible from the scenario seed.
  auto pop = behavior::sample_population(cfg.population, cfg.scenario.seed);
  Eigen::VectorXd pm_mean = behavior::price_adjusted_mean(
      n_bar, network.stations, pop.ch_avg, behavior::mean_beta(pop));

  csv::Writer w(cfg.out_dir / "moments.csv");
  w.field("station_id").field("mean_p_ev_mw").field("n_bar").field("pm_mean_p_ev_mw")
      .field("k_sc");
  w.end_row();
  for (int s = 0; s < ns; ++s) {
    w.field(static_cast<long long>(network.stations[s].id)).field(moments.mean(s));
    w.field(n_bar(s)).field(pm_mean(s)).field(static_cast<long long>(moments.k_sc));
    w.end_row();
  }
  csv::Writer c(cfg.out_dir / "cov.csv");
  for (int s = 0; s < ns; ++s) c.field("s" + std::to_string(s));
  c.end_row();
  for (int r = 0; r < ns; ++r) {
    for (int s = 0; s < ns; ++s) c.field(moments.cov(r, s));
    c.end_row();
  }
}

void stage_solve(const config::PipelineConfig& cfg) {
  auto network = net::load_network(cfg.network_dir);
  auto inc = net::downstream_matrix(network);
  bool needs_moments = true;  // every mode forecasts from the simulated demand
  if (needs_moments && !std::filesystem::exists(cfg.out_dir / "moments.csv")) {
    if (!std::filesystem::exists(scenarios_path(cfg)))
      throw Error("missing scenarios.csv (run the simulate stage first)");
    throw Error("missing moments.csv (run the moments stage first)");
  }
  MomentsFile m = read_moments(cfg.out_dir);

  ambiguity::AmbiguityParams aparams{cfg.ambiguity.gamma1, cfg.ambiguity.gamma2,
                                     cfg.ambiguity.epsilon, ambiguity::SetMode::M1};
  ambiguity::Moments raw{m.mean_mw, m.cov_mw, m.k_sc};
  ambiguity::Moments reg = ambiguity::regularize_covariance(raw, cfg.ambiguity.ridge);

  socp::InteriorPointSolver solver;
  for (dopf::Mode mode : cfg.dopf.modes) {
    dopf::DopfParams params;
    params.epsilon = cfg.ambiguity.epsilon;
    params.z = cfg.dopf.z;
    params.polygon_edges = cfg.dopf.polygon_edges;
    params.mode = mode;
    params.eta = mode == dopf::Mode::deterministic ? 0.0 : ambiguity::eta(aparams);
    Eigen::VectorXd mean_ref =
        mode == dopf::Mode::drcc_pm ? m.pm_mean_mw : m.mean_mw;

    auto model = dopf::assemble_model(network, inc, reg.cov, mean_ref, params);
    auto report = dopf::solve(model, network, solver);
    if (report.status != socp::Status::optimal)
      throw Error(std::string("solve failed for mode ") + dopf::mode_name(mode) +
                  ": " + socp::status_name(report.status) +
                  (report.message.empty() ? "" : " (" + report.message + ")"));
    write_dispatch(cfg.out_dir / ("dispatch_" + std::string(dopf::mode_name(mode)) +
                                  ".csv"),
                   report.dispatch, network);
  }
}

void stage_evaluate(const config::PipelineConfig& cfg) {
  auto network = net::load_network(cfg.network_dir);
  auto inc = net::downstream_matrix(network);
  MomentsFile m = read_moments(cfg.out_dir);

  // Ground-truth realizations are price sensitive, so the Gaussian source is
  // centered on the price-adjusted mean.
  std::vector<posteval::Realization> realizations;
  if (cfg.eval.source == posteval::RealizationSource::gaussian_moments) {
    realizations = posteval::sample_realizations_gaussian(
        m.pm_mean_mw, m.cov_mw, cfg.eval.realizations, cfg.eval.seed);
  } else {
    realizations = posteval::sample_realizations_behavioral(
        cfg.population, network.stations, cfg.eval.realizations, cfg.eval.seed);
  }

  std::vector<posteval::EvalSummary> summaries;
  csv::Writer vw(cfg.out_dir / "violations.csv");
  vw.field("mode").field("realization").field("d_bar_mw").field("d_under_mw")
      .field("voltage_slack_pu2").field("line_slack_mva").field("violated")
      .field("cost_usd");
  vw.end_row();
  for (dopf::Mode mode : cfg.dopf.modes) {
    auto path =
        cfg.out_dir / ("dispatch_" + std::string(dopf::mode_name(mode)) + ".csv");
    require_file(path, "run the solve stage first");
    auto dispatch = read_dispatch(path);
    std::vector<posteval::RedispatchResult> per;
    auto summary = posteval::evaluate_dispatch(network, inc, dispatch, realizations,
                                               cfg.eval.penalties, cfg.eval.tol,
                                               cfg.eval.seed, cfg.threads, &per);
    for (std::size_t k = 0; k < per.size(); ++k) {
      bool violated = !per[k].feasible_flag;
      vw.field(dopf::mode_name(mode)).field(static_cast<long long>(k));
      vw.field(per[k].slack_up.sum()).field(per[k].slack_down.sum());
      vw.field(per[k].voltage_slacks.sum()).field(per[k].line_slacks.sum());
      vw.field(static_cast<long long>(violated)).field(per[k].realized_cost);
      vw.end_row();
    }
    summaries.push_back(summary);
  }

  auto report = posteval::compare(summaries);
  csv::Writer sw(cfg.out_dir / "eval_summary.csv");
  sw.field("mode").field("mean_cost_usd").field("cost_increase_pct").field("d_bar_mw")
      .field("d_under_mw").field("violation_pct").field("realizations").field("seed");
  sw.end_row();
  for (const auto& s : report.rows) {
    sw.field(s.mode).field(s.mean_cost).field(s.cost_increase_pct).field(s.d_bar)
        .field(s.d_under).field(s.violation_pct)
        .field(static_cast<long long>(s.realizations))
        .field(static_cast<long long>(s.seed));
    sw.end_row();
  }
  std::ofstream txt(cfg.out_dir / "comparison.txt", std::ios::binary);
  txt << report.text;
}

void run_pipeline(const config::PipelineConfig& cfg) {
  stage_simulate(cfg);
  stage_moments(cfg);
  stage_solve(cfg);
  stage_evaluate(cfg);
}

}  // namespace evdro::pipeline
