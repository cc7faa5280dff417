#pragma once

#include <filesystem>
#include <fstream>
#include <string>

#include "evdro/netmodel.hpp"

namespace evdro::testutil {

/// Writes a bundle to a temp directory and loads it.
struct BundleBuilder {
  std::string buses = "id,kind,p_load_mw,q_load_mvar,v2_min,v2_max\n";
  std::string lines = "from,to,r_pu,x_pu,s_max_mva\n";
  std::string gens = "bus,p_min_mw,p_max_mw,q_min_mvar,q_max_mvar,c2,c1,c0\n";
  std::string stations = "id,bus,chargers,lambda_nominal,lambda_offered\n";
  double base_mva = 10.0;

  net::Network load(const std::string& tag) const {
    auto dir = std::filesystem::temp_directory_path() / ("evdro_bundle_" + tag);
    std::filesystem::create_directories(dir);
    auto write = [&](const char* name, const std::string& text) {
      std::ofstream(dir / name) << text;
    };
    write("buses.csv", buses);
    write("lines.csv", lines);
    write("generators.csv", gens);
    write("stations.csv", stations);
    std::ofstream(dir / "bundle.meta")
        << "name=" << tag << "\nbase_mva=" << base_mva << "\n";
    return net::load_network(dir);
  }
};

/// root(1) -- 2 -- 3 with one generator at the root and a station at bus 3.
inline BundleBuilder chain3(double p2 = 1.0, double p3 = 2.0) {
  BundleBuilder b;
  b.buses += "1,root,0,0,0.81,1.21\n2,load," + std::to_string(p2) +
             ",0.5,0.81,1.21\n3,load," + std::to_string(p3) + ",1.0,0.81,1.21\n";
  b.lines += "1,2,0.01,0.02,40\n2,3,0.01,0.02,40\n";
  b.gens += "1,0,20,-10,10,1,100,0\n";
  b.stations += "1,3,5,0.3,0.3\n";
  return b;
}

}  // namespace evdro::testutil
