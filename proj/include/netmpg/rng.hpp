#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <stdexcept>
#include <vector>

#include "netmpg/types.hpp"

namespace netmpg {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Deterministic substream derivation: hash-chains the master seed with a path
// of tags (e.g. {iteration, agent, episode}).
inline std::uint64_t derive_seed(std::uint64_t master,
                                 std::initializer_list<std::uint64_t> path) {
  std::uint64_t s = splitmix64(master);
  for (std::uint64_t tag : path) s = splitmix64(s ^ splitmix64(tag));
  return s;
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  // Canonical 53-bit uniform in [0, 1).
  Real uniform01() {
    return static_cast<Real>(eng_() >> 11) * 0x1.0p-53;
  }

  Real uniform(Real lo, Real hi) { return lo + (hi - lo) * uniform01(); }

  int uniform_int(int n) {
    if (n <= 0) throw std::invalid_argument("uniform_int: n must be positive");
    int v = static_cast<int>(uniform01() * n);
    return v < n ? v : n - 1;
  }

  // Inverse-CDF draw from a probability vector (assumed normalized).
  int categorical(const Vector& p) {
    const Real u = uniform01();
    Real acc = 0.0;
    const Eigen::Index k = p.size();
    for (Eigen::Index i = 0; i + 1 < k; ++i) {
      acc += p[i];
      if (u < acc) return static_cast<int>(i);
    }
    return static_cast<int>(k - 1);
  }

 private:
  std::mt19937_64 eng_;
};

// One stream per agent so sampled trajectories do not depend on the order in
// which agent components are drawn.
class AgentStreams {
 public:
  AgentStreams(std::uint64_t master, int n_agents) {
    streams_.reserve(static_cast<std::size_t>(n_agents));
    for (int i = 0; i < n_agents; ++i)
      streams_.emplace_back(derive_seed(master, {0xA6E247ULL, static_cast<std::uint64_t>(i)}));
  }

  Rng& agent(int i) { return streams_.at(static_cast<std::size_t>(i)); }

 private:
  std::vector<Rng> streams_;
};

} // namespace netmpg
