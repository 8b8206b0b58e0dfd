#pragma once

#include <complex>
#include <cstdint>
#include <random>

namespace cfmimo {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Counter-based substream: trial t of a run gets an RNG that depends only on
/// (master_seed, t), so trials can run in any order or in parallel.
inline std::mt19937_64 make_substream(std::uint64_t master_seed, std::uint64_t stream_id) {
  const std::uint64_t s = splitmix64(master_seed ^ splitmix64(stream_id));
  return std::mt19937_64(s);
}

/// One draw from CN(0, 1): independent real/imag parts with variance 1/2 each.
inline std::complex<double> sample_cn(std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);  // no cached state across streams
  const double scale = 0.7071067811865476;          // 1/sqrt(2)
  return {dist(rng) * scale, dist(rng) * scale};
}

}  // namespace cfmimo
