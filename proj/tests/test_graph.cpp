#include <doctest.h>

#include <algorithm>

#include "netmpg/graph.hpp"
#include "netmpg/rng.hpp"

using namespace netmpg;

TEST_CASE("build_graph validates and collapses duplicates") {
  const AgentGraph line = build_graph(3, {{0, 1}, {1, 2}});
  CHECK(line.adjacency(0).size() == 1);
  CHECK(line.adjacency(1).size() == 2);
  CHECK(line.adjacency(2).size() == 1);

  const AgentGraph dup = build_graph(3, {{0, 1}, {1, 0}, {0, 1}});
  CHECK(dup.adjacency(0) == std::vector<int>{1});

  CHECK_THROWS_AS(build_graph(2, {{0, 0}}), std::invalid_argument);
  CHECK_THROWS_AS(build_graph(2, {{0, 2}}), std::invalid_argument);
  CHECK_THROWS_AS(build_graph(0, {}), std::invalid_argument);
}

TEST_CASE("ring of 20 has diameter 10") {
  const AgentGraph ring = AgentGraph::ring(20);
  for (int i = 0; i < 20; ++i) CHECK(ring.adjacency(i).size() == 2);
  CHECK(ring.diameter() == 10);
}

TEST_CASE("kappa neighborhoods on small graphs") {
  const AgentGraph ring5 = AgentGraph::ring(5);
  CHECK(ring5.kappa_neighborhood(0, 1).members == std::vector<int>{0, 1, 4});
  CHECK(ring5.kappa_neighborhood(0, 2).members == std::vector<int>{0, 1, 2, 3, 4});
  CHECK(ring5.diameter() == 2);

  const AgentGraph line3 = AgentGraph::line(3);
  CHECK(line3.kappa_neighborhood(0, 0).members == std::vector<int>{0});
  CHECK(line3.diameter() == 2);

  CHECK(AgentGraph::complete(4).diameter() == 1);

  CHECK_THROWS_AS(line3.kappa_neighborhood(3, 1), std::out_of_range);
  CHECK_THROWS_AS(line3.kappa_neighborhood(0, -1), std::invalid_argument);
}

TEST_CASE("diameter on a disconnected graph names an unreachable pair") {
  const AgentGraph g(4, {{0, 1}, {2, 3}});
  CHECK(!g.connected());
  CHECK_THROWS_WITH_AS(g.diameter(),
                       doctest::Contains("agents 0 and 2"), std::runtime_error);
}

TEST_CASE("neighborhood monotonicity, symmetry, saturation") {
  Rng rng(42);
  for (int trial = 0; trial < 25; ++trial) {
    const int n = 2 + rng.uniform_int(7);
    // random graph on a spanning path so it stays connected
    std::vector<std::pair<int, int>> edges;
    for (int i = 0; i + 1 < n; ++i) edges.emplace_back(i, i + 1);
    const int extra = rng.uniform_int(n);
    for (int e = 0; e < extra; ++e) {
      const int a = rng.uniform_int(n), b = rng.uniform_int(n);
      if (a != b) edges.emplace_back(a, b);
    }
    const AgentGraph g(n, edges);
    const int diam = g.diameter();
    for (int i = 0; i < n; ++i) {
      CHECK(g.kappa_neighborhood(i, 0).members == std::vector<int>{i});
      for (int kappa = 0; kappa < diam; ++kappa) {
        const auto a = g.kappa_neighborhood(i, kappa).members;
        const auto b = g.kappa_neighborhood(i, kappa + 1).members;
        CHECK(std::includes(b.begin(), b.end(), a.begin(), a.end()));
      }
      CHECK(static_cast<int>(g.kappa_neighborhood(i, diam).members.size()) == n);
      for (int j = 0; j < n; ++j) {
        for (int kappa = 0; kappa <= diam; ++kappa) {
          const auto& mi = g.kappa_neighborhood(i, kappa).members;
          const auto& mj = g.kappa_neighborhood(j, kappa).members;
          CHECK(std::binary_search(mi.begin(), mi.end(), j) ==
                std::binary_search(mj.begin(), mj.end(), i));
        }
      }
    }
  }
}
