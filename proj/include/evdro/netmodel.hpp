#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <string>
#include <vector>

namespace evdro::net {

enum class BusKind { root, load };

struct Bus {
  int id = 0;
  BusKind kind = BusKind::load;
  double p_load = 0.0;  // per-unit on base_mva
  double q_load = 0.0;
  double v2_min = 0.81;  // per-unit voltage squared
  double v2_max = 1.21;
};

struct Line {
  int from_bus = 0;
  int to_bus = 0;
  double r = 0.0;      // per-unit
  double x = 0.0;
  double s_max = 0.0;  // per-unit apparent power
};

struct Generator {
  int bus = 0;
  double p_min = 0.0, p_max = 0.0;  // per-unit
  double q_min = 0.0, q_max = 0.0;
  double c2 = 0.0, c1 = 0.0, c0 = 0.0;  // $/MW^2, $/MW, $
};

struct Evcs {
  int id = 0;
  int bus = 0;
  int chargers = 1;
  double lambda_nominal = 0.0;  // $/kWh
  double lambda_offered = 0.0;
};

/// Radial feeder. Immutable after load_network; everything electrical is
/// stored per-unit on base_mva.
struct Network {
  double base_mva = 10.0;
  std::string name;
  std::vector<Bus> buses;
  std::vector<Line> lines;
  std::vector<Generator> generators;
  std::vector<Evcs> stations;

  int root_index = 0;

  int bus_index(int bus_id) const;        // throws on unknown id
  int station_index(int station_id) const;

  double to_mw(double pu) const { return pu * base_mva; }
  double to_pu(double mw) const { return mw / base_mva; }

  double total_p_load_mw() const;
  double total_q_load_mvar() const;
};

/// A[l, j] = 1 iff bus j (non-root column order) lies in the subtree fed by
/// line l. Rows follow Network::lines order.
struct IncidenceMap {
  Eigen::MatrixXd A;
  std::vector<int> column_bus;     // column -> index into Network::buses
  std::vector<int> column_of_bus;  // bus index -> column, -1 for root
};

/// Loads and validates a bundle directory (buses/lines/generators/stations
/// CSV files plus bundle.meta). Values arrive in physical units and are
/// converted to per-unit here.
Network load_network(const std::filesystem::path& bundle_dir);

IncidenceMap downstream_matrix(const Network& net);

struct LoadSummary {
  double total_mw = 0.0;
  double evcd_mw = 0.0;
  double penetration_pct = 0.0;
};

/// p_ev holds MW per station, in Network::stations order.
LoadSummary total_load(const Network& net, const Eigen::VectorXd& p_ev_mw);

}  // namespace evdro::net
