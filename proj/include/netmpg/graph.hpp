#pragma once

#include <utility>
#include <vector>

#include "netmpg/types.hpp"

namespace netmpg {

// kappa-hop neighborhood of an agent: every agent at graph distance <= kappa
// from the center, the center included, ascending id order.
struct Neighborhood {
  int center = 0;
  int kappa = 0;
  std::vector<int> members;
};

// Undirected coupling graph over n agents. Immutable after construction;
// all-pairs distances are precomputed so queries are lock-free.
class AgentGraph {
 public:
  AgentGraph(int n, const std::vector<std::pair<int, int>>& edges);

  int num_agents() const { return n_; }
  // 1-hop neighbors excluding self, ascending.
  const std::vector<int>& adjacency(int i) const;
  // 1-hop neighbors including self (the reward/kernel scope), ascending.
  const std::vector<int>& closed_neighbors(int i) const;

  // Graph distance; -1 when unreachable.
  int distance(int i, int j) const;
  bool connected() const;

  Neighborhood kappa_neighborhood(int i, int kappa) const;
  // Max over pairs of shortest-path length. Throws on a disconnected graph,
  // naming an unreachable pair.
  int diameter() const;

  static AgentGraph ring(int n);
  static AgentGraph line(int n);
  static AgentGraph complete(int n);

 private:
  int n_;
  std::vector<std::vector<int>> adj_;
  std::vector<std::vector<int>> closed_;
  std::vector<std::vector<int>> dist_;
};

AgentGraph build_graph(int n, const std::vector<std::pair<int, int>>& edges);

} // namespace netmpg
