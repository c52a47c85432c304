#include "netmpg/graph.hpp"

#include <algorithm>
#include <deque>
#include <set>
#include <stdexcept>
#include <string>

namespace netmpg {

AgentGraph::AgentGraph(int n, const std::vector<std::pair<int, int>>& edges)
    : n_(n) {
  if (n <= 0) throw std::invalid_argument("AgentGraph: agent count must be positive");
  std::vector<std::set<int>> nb(static_cast<std::size_t>(n));
  for (const auto& [a, b] : edges) {
    if (a < 0 || a >= n || b < 0 || b >= n)
      throw std::invalid_argument("AgentGraph: edge endpoint out of range: (" +
                                  std::to_string(a) + "," + std::to_string(b) + ")");
    if (a == b)
      throw std::invalid_argument("AgentGraph: self-loop on agent " + std::to_string(a));
    nb[static_cast<std::size_t>(a)].insert(b);
    nb[static_cast<std::size_t>(b)].insert(a);
  }
  adj_.resize(static_cast<std::size_t>(n));
  closed_.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    adj_[i].assign(nb[i].begin(), nb[i].end());
    closed_[i] = adj_[i];
    closed_[i].insert(std::lower_bound(closed_[i].begin(), closed_[i].end(), i), i);
  }

  // All-pairs BFS.
  dist_.assign(static_cast<std::size_t>(n), std::vector<int>(static_cast<std::size_t>(n), -1));
  for (int src = 0; src < n; ++src) {
    auto& d = dist_[static_cast<std::size_t>(src)];
    d[static_cast<std::size_t>(src)] = 0;
    std::deque<int> queue{src};
    while (!queue.empty()) {
      const int u = queue.front();
      queue.pop_front();
      for (int v : adj_[static_cast<std::size_t>(u)]) {
        if (d[static_cast<std::size_t>(v)] < 0) {
          d[static_cast<std::size_t>(v)] = d[static_cast<std::size_t>(u)] + 1;
          queue.push_back(v);
        }
      }
    }
  }
}

const std::vector<int>& AgentGraph::adjacency(int i) const {
  if (i < 0 || i >= n_) throw std::out_of_range("AgentGraph::adjacency: agent out of range");
  return adj_[static_cast<std::size_t>(i)];
}

const std::vector<int>& AgentGraph::closed_neighbors(int i) const {
  if (i < 0 || i >= n_) throw std::out_of_range("AgentGraph::closed_neighbors: agent out of range");
  return closed_[static_cast<std::size_t>(i)];
}

int AgentGraph::distance(int i, int j) const {
  if (i < 0 || i >= n_ || j < 0 || j >= n_)
    throw std::out_of_range("AgentGraph::distance: agent out of range");
  return dist_[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
}

bool AgentGraph::connected() const {
  for (int j = 0; j < n_; ++j)
    if (dist_[0][static_cast<std::size_t>(j)] < 0) return false;
  return true;
}

Neighborhood AgentGraph::kappa_neighborhood(int i, int kappa) const {
  if (i < 0 || i >= n_)
    throw std::out_of_range("kappa_neighborhood: agent " + std::to_string(i) + " out of range");
  if (kappa < 0) throw std::invalid_argument("kappa_neighborhood: kappa must be non-negative");
  Neighborhood nb{i, kappa, {}};
  for (int j = 0; j < n_; ++j) {
    const int d = dist_[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    if (d >= 0 && d <= kappa) nb.members.push_back(j);
  }
  return nb;
}

int AgentGraph::diameter() const {
  int diam = 0;
  for (int i = 0; i < n_; ++i) {
    for (int j = i + 1; j < n_; ++j) {
      const int d = dist_[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      if (d < 0)
        throw std::runtime_error("AgentGraph::diameter: graph disconnected, agents " +
                                 std::to_string(i) + " and " + std::to_string(j) +
                                 " are unreachable");
      diam = std::max(diam, d);
    }
  }
  return diam;
}

AgentGraph AgentGraph::ring(int n) {
  std::vector<std::pair<int, int>> edges;
  if (n == 2) {
    edges.emplace_back(0, 1);
  } else if (n > 2) {
    for (int i = 0; i < n; ++i) edges.emplace_back(i, (i + 1) % n);
  }
  return AgentGraph(n, edges);
}

AgentGraph AgentGraph::line(int n) {
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i + 1 < n; ++i) edges.emplace_back(i, i + 1);
  return AgentGraph(n, edges);
}

AgentGraph AgentGraph::complete(int n) {
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) edges.emplace_back(i, j);
  return AgentGraph(n, edges);
}

AgentGraph build_graph(int n, const std::vector<std::pair<int, int>>& edges) {
  return AgentGraph(n, edges);
}

} // namespace netmpg
