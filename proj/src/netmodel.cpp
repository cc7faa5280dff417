#include "evdro/netmodel.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "evdro/csv.hpp"

namespace evdro::net {

namespace {

struct Meta {
  double base_mva = 10.0;
  std::string name;
};

Meta read_meta(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("missing file: " + path.string());
  Meta m;
  std::string line;
  while (std::getline(in, line)) {
    auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    std::string key = line.substr(0, eq);
    std::string val = line.substr(eq + 1);
    if (key == "base_mva") m.base_mva = std::stod(val);
    if (key == "name") m.name = val;
  }
  if (m.base_mva <= 0.0) throw Error(path.string() + ": base_mva must be positive");
  return m;
}

}  // namespace

int Network::bus_index(int bus_id) const {
  for (std::size_t i = 0; i < buses.size(); ++i)
    if (buses[i].id == bus_id) return static_cast<int>(i);
  throw Error("unknown bus id " + std::to_string(bus_id));
}

int Network::station_index(int station_id) const {
  for (std::size_t i = 0; i < stations.size(); ++i)
    if (stations[i].id == station_id) return static_cast<int>(i);
  throw Error("unknown station id " + std::to_string(station_id));
}

double Network::total_p_load_mw() const {
  double s = 0.0;
  for (const auto& b : buses) s += b.p_load;
  return to_mw(s);
}

double Network::total_q_load_mvar() const {
  double s = 0.0;
  for (const auto& b : buses) s += b.q_load;
  return to_mw(s);
}

Network load_network(const std::filesystem::path& dir) {
  Network net;
  Meta meta = read_meta(dir / "bundle.meta");
  net.base_mva = meta.base_mva;
  net.name = meta.name;

  auto buses = csv::Table::read_file(dir / "buses.csv");
  auto lines = csv::Table::read_file(dir / "lines.csv");
  auto gens = csv::Table::read_file(dir / "generators.csv");
  auto stations = csv::Table::read_file(dir / "stations.csv");

  std::set<int> bus_ids;
  int roots = 0;
  for (std::size_t r = 0; r < buses.rows(); ++r) {
    Bus b;
    b.id = static_cast<int>(buses.integer(r, "id"));
    const std::string& kind = buses.cell(r, "kind");
    if (kind == "root") {
      b.kind = BusKind::root;
      ++roots;
    } else if (kind == "load") {
      b.kind = BusKind::load;
    } else {
      throw Error(buses.path() + ":" + std::to_string(buses.line_of(r)) +
                  ": column 'kind': expected root|load, got '" + kind + "'");
    }
    b.p_load = net.to_pu(buses.number(r, "p_load_mw"));
    b.q_load = net.to_pu(buses.number(r, "q_load_mvar"));
    b.v2_min = buses.number(r, "v2_min");
    b.v2_max = buses.number(r, "v2_max");
    if (!bus_ids.insert(b.id).second)
      throw Error(buses.path() + ":" + std::to_string(buses.line_of(r)) +
                  ": duplicate bus id " + std::to_string(b.id));
    if (b.v2_min >= b.v2_max)
      throw Error(buses.path() + ":" + std::to_string(buses.line_of(r)) +
                  ": v2_min must be below v2_max");
    if (b.kind == BusKind::load && (b.p_load < 0.0 || b.q_load < 0.0))
      throw Error(buses.path() + ":" + std::to_string(buses.line_of(r)) +
                  ": negative load");
    net.buses.push_back(b);
  }
  if (roots != 1)
    throw Error(buses.path() + ": exactly one root bus required, found " +
                std::to_string(roots));
  for (std::size_t i = 0; i < net.buses.size(); ++i)
    if (net.buses[i].kind == BusKind::root) net.root_index = static_cast<int>(i);

  for (std::size_t r = 0; r < lines.rows(); ++r) {
    Line l;
    l.from_bus = static_cast<int>(lines.integer(r, "from"));
    l.to_bus = static_cast<int>(lines.integer(r, "to"));
    l.r = lines.number(r, "r_pu");
    l.x = lines.number(r, "x_pu");
    l.s_max = net.to_pu(lines.number(r, "s_max_mva"));
    if (!bus_ids.count(l.from_bus) || !bus_ids.count(l.to_bus))
      throw Error(lines.path() + ":" + std::to_string(lines.line_of(r)) +
                  ": dangling bus reference");
    if (l.r < 0.0 || l.x < 0.0 || l.s_max <= 0.0)
      throw Error(lines.path() + ":" + std::to_string(lines.line_of(r)) +
                  ": require r >= 0, x >= 0, s_max > 0");
    net.lines.push_back(l);
  }

  for (std::size_t r = 0; r < gens.rows(); ++r) {
    Generator g;
    g.bus = static_cast<int>(gens.integer(r, "bus"));
    g.p_min = net.to_pu(gens.number(r, "p_min_mw"));
    g.p_max = net.to_pu(gens.number(r, "p_max_mw"));
    g.q_min = net.to_pu(gens.number(r, "q_min_mvar"));
    g.q_max = net.to_pu(gens.number(r, "q_max_mvar"));
    g.c2 = gens.number(r, "c2");
    g.c1 = gens.number(r, "c1");
    g.c0 = gens.number(r, "c0");
    if (!bus_ids.count(g.bus))
      throw Error(gens.path() + ":" + std::to_string(gens.line_of(r)) +
                  ": dangling bus reference");
    if (g.p_min > g.p_max || g.q_min > g.q_max || g.c2 < 0.0)
      throw Error(gens.path() + ":" + std::to_string(gens.line_of(r)) +
                  ": invalid generator limits or cost");
    net.generators.push_back(g);
  }

  std::set<int> station_ids;
  for (std::size_t r = 0; r < stations.rows(); ++r) {
    Evcs s;
    s.id = static_cast<int>(stations.integer(r, "id"));
    s.bus = static_cast<int>(stations.integer(r, "bus"));
    s.chargers = static_cast<int>(stations.integer(r, "chargers"));
    s.lambda_nominal = stations.number(r, "lambda_nominal");
    s.lambda_offered = stations.number(r, "lambda_offered");
    if (!station_ids.insert(s.id).second)
      throw Error(stations.path() + ":" + std::to_string(stations.line_of(r)) +
                  ": duplicate station id " + std::to_string(s.id));
    if (!bus_ids.count(s.bus))
      throw Error(stations.path() + ":" + std::to_string(stations.line_of(r)) +
                  ": dangling bus reference");
    if (s.chargers < 1 || s.lambda_nominal < 0.0 || s.lambda_offered < 0.0)
      throw Error(stations.path() + ":" + std::to_string(stations.line_of(r)) +
                  ": require chargers >= 1 and nonnegative prices");
    net.stations.push_back(s);
  }

  // Radiality: |lines| = |buses| - 1 and connected from the root without
  // revisiting a bus.
  if (net.lines.size() + 1 != net.buses.size())
    throw Error(meta.name + ": not radial (|lines| != |buses| - 1)");
  std::map<int, std::vector<int>> adj;
  for (const auto& l : net.lines) {
    adj[l.from_bus].push_back(l.to_bus);
    adj[l.to_bus].push_back(l.from_bus);
  }
  std::set<int> seen{net.buses[net.root_index].id};
  std::vector<std::pair<int, int>> stack{{net.buses[net.root_index].id, -1}};
  while (!stack.empty()) {
    auto [b, parent] = stack.back();
    stack.pop_back();
    for (int nb : adj[b]) {
      if (nb == parent) continue;
      if (!seen.insert(nb).second)
        throw Error(meta.name + ": not radial (cycle through bus " +
                    std::to_string(nb) + ")");
      stack.emplace_back(nb, b);
    }
  }
  if (seen.size() != net.buses.size())
    throw Error(meta.name + ": not connected (" +
                std::to_string(net.buses.size() - seen.size()) +
                " buses unreachable from root)");
  return net;
}

IncidenceMap downstream_matrix(const Network& net) {
  const int nb = static_cast<int>(net.buses.size());
  const int nl = static_cast<int>(net.lines.size());
  if (nl + 1 != nb) throw Error("downstream_matrix: not radial");

  IncidenceMap map;
  map.column_of_bus.assign(nb, -1);
  for (int i = 0; i < nb; ++i) {
    if (i == net.root_index) continue;
    map.column_of_bus[i] = static_cast<int>(map.column_bus.size());
    map.column_bus.push_back(i);
  }
  map.A = Eigen::MatrixXd::Zero(nl, nb - 1);

  // Orient each line away from the root, then walk each bus's root path.
  std::map<int, std::vector<std::pair<int, int>>> adj;  // bus id -> (nbr id, line idx)
  for (int l = 0; l < nl; ++l) {
    adj[net.lines[l].from_bus].emplace_back(net.lines[l].to_bus, l);
    adj[net.lines[l].to_bus].emplace_back(net.lines[l].from_bus, l);
  }
  std::map<int, std::pair<int, int>> up;  // bus id -> (parent id, line idx)
  std::vector<int> order;                 // bus ids in BFS order from root
  int root_id = net.buses[net.root_index].id;
  order.push_back(root_id);
  for (std::size_t q = 0; q < order.size(); ++q) {
    int b = order[q];
    for (auto [nb_id, l] : adj[b]) {
      if (nb_id == root_id || up.count(nb_id)) continue;
      up[nb_id] = {b, l};
      order.push_back(nb_id);
    }
  }
  for (int i = 0; i < nb; ++i) {
    if (i == net.root_index) continue;
    int col = map.column_of_bus[i];
    int b = net.buses[i].id;
    while (b != root_id) {
      auto [parent, l] = up.at(b);
      map.A(l, col) = 1.0;
      b = parent;
    }
  }
  return map;
}

LoadSummary total_load(const Network& net, const Eigen::VectorXd& p_ev_mw) {
  if (p_ev_mw.size() != static_cast<Eigen::Index>(net.stations.size()))
    throw Error("total_load: p_ev length must equal station count");
  if ((p_ev_mw.array() < 0.0).any())
    throw Error("total_load: negative entry in p_ev");
  LoadSummary s;
  s.evcd_mw = p_ev_mw.sum();
  double non_ev = net.total_p_load_mw();
  s.total_mw = non_ev + s.evcd_mw;
  s.penetration_pct = non_ev > 0.0 ? 100.0 * s.evcd_mw / non_ev : 0.0;
  return s;
}

}  // namespace evdro::net
