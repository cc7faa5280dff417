#pragma once

#include <cstdint>
#include <random>

namespace evdro {

/// splitmix64 mixing; used to derive independent substreams from a master
/// seed so that parallel and serial execution see identical draws.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t stream = 0) {
  return std::mt19937_64(mix_seed(seed, stream));
}

inline double uniform(std::mt19937_64& eng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(eng);
}

inline double normal(std::mt19937_64& eng) {
  return std::normal_distribution<double>(0.0, 1.0)(eng);
}

inline int poisson(std::mt19937_64& eng, double rate) {
  if (rate <= 0.0) return 0;
  return std::poisson_distribution<int>(rate)(eng);
}

}  // namespace evdro
