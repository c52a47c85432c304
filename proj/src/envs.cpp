#include "netmpg/envs.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>
#include <string>

#include "netmpg/indexing.hpp"
#include "netmpg/rng.hpp"

namespace netmpg {

namespace {

int find_position(const std::vector<int>& sorted_ids, int id) {
  const auto it = std::lower_bound(sorted_ids.begin(), sorted_ids.end(), id);
  if (it == sorted_ids.end() || *it != id)
    throw std::logic_error("find_position: id not present");
  return static_cast<int>(it - sorted_ids.begin());
}

} // namespace

std::pair<JointState, bool> job_balancing_step(const AgentGraph& g, const JointState& s,
                                               const JointAction& a, int cap) {
  const int n = g.num_agents();
  JointState next(static_cast<std::size_t>(n));
  bool clamped = false;
  for (int i = 0; i < n; ++i) {
    const int si = s[static_cast<std::size_t>(i)];
    const int eff_i = g.adjacency(i).empty() ? 0 : std::min(a[static_cast<std::size_t>(i)], si);
    int incoming = 0;
    for (int j : g.adjacency(i)) {
      const auto& nbrs_j = g.adjacency(j);
      const int eff_j = std::min(a[static_cast<std::size_t>(j)], s[static_cast<std::size_t>(j)]);
      const int deg_j = static_cast<int>(nbrs_j.size());
      const int base = eff_j / deg_j;
      const int rem = eff_j % deg_j;
      incoming += base + (find_position(nbrs_j, i) < rem ? 1 : 0);
    }
    int v = si - eff_i + incoming;
    if (v < 0 || v > cap) {
      clamped = true;
      v = std::clamp(v, 0, cap);
    }
    next[static_cast<std::size_t>(i)] = v;
  }
  return {next, clamped};
}

GameModel job_balancing_model(const JobBalancingSpec& spec) {
  if (spec.n <= 0) throw std::invalid_argument("job_balancing_model: n must be positive");
  if (spec.total_jobs < 0)
    throw std::invalid_argument("job_balancing_model: total_jobs must be non-negative");
  if (spec.max_delegation <= 0)
    throw std::invalid_argument("job_balancing_model: max_delegation must be positive");
  const AgentGraph graph = spec.graph.value_or(AgentGraph::ring(spec.n));
  if (graph.num_agents() != spec.n)
    throw std::invalid_argument("job_balancing_model: graph size does not match n");
  const int cap = spec.max_jobs_per_node > 0 ? spec.max_jobs_per_node
                                             : std::max(1, 2 * spec.total_jobs / spec.n);
  if (spec.total_jobs > static_cast<long long>(spec.n) * cap)
    throw std::invalid_argument("job_balancing_model: total_jobs exceeds n * max_jobs_per_node");

  const int n = spec.n;
  std::vector<int> state_sizes(static_cast<std::size_t>(n), cap + 1);
  std::vector<int> action_sizes(static_cast<std::size_t>(n), spec.max_delegation + 1);

  // Static split-rule data per (receiver, sender in its neighborhood).
  struct SenderInfo {
    int degree;
    int rank;  // position of the receiver among the sender's neighbors
  };
  auto info = std::make_shared<std::vector<std::vector<SenderInfo>>>(static_cast<std::size_t>(n));
  auto nbhd = std::make_shared<std::vector<std::vector<int>>>(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    (*nbhd)[static_cast<std::size_t>(i)] = graph.closed_neighbors(i);
    for (int j : graph.adjacency(i)) {
      const auto& nbrs_j = graph.adjacency(j);
      (*info)[static_cast<std::size_t>(i)].push_back(
          {static_cast<int>(nbrs_j.size()), find_position(nbrs_j, i)});
    }
  }
  auto adjacency = std::make_shared<std::vector<std::vector<int>>>(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) (*adjacency)[static_cast<std::size_t>(i)] = graph.adjacency(i);

  TransitionKernel kernel = [n, cap, info, nbhd, adjacency](
                                int i, const std::vector<int>& ss,
                                const std::vector<int>& as) -> Vector {
    const auto& members = (*nbhd)[static_cast<std::size_t>(i)];
    const int self = find_position(members, i);
    const int si = ss[static_cast<std::size_t>(self)];
    const bool isolated = (*adjacency)[static_cast<std::size_t>(i)].empty();
    const int eff_i = isolated ? 0 : std::min(as[static_cast<std::size_t>(self)], si);
    int incoming = 0;
    int cursor = 0;
    for (std::size_t k = 0; k < members.size(); ++k) {
      if (static_cast<int>(k) == self) continue;
      const SenderInfo& sj = (*info)[static_cast<std::size_t>(i)][static_cast<std::size_t>(cursor++)];
      const int eff_j = std::min(as[k], ss[k]);
      incoming += eff_j / sj.degree + (sj.rank < eff_j % sj.degree ? 1 : 0);
    }
    const int v = std::clamp(si - eff_i + incoming, 0, cap);
    Vector row = Vector::Zero(cap + 1);
    row[v] = 1.0;
    return row;
  };

  RewardFn reward = [nbhd](int i, const std::vector<int>& ss,
                           const std::vector<int>& as) -> Real {
    (void)as;
    const auto& members = (*nbhd)[static_cast<std::size_t>(i)];
    const int self = find_position(members, i);
    long long sum = 0;
    for (int v : ss) sum += v;
    const long long m = static_cast<long long>(members.size());
    // deviation = s_i - sum/m, compared exactly via m*s_i - sum
    const long long dev_num = m * ss[static_cast<std::size_t>(self)] - sum;
    if (dev_num == 0) return 1.0;
    return std::min(1.0, static_cast<Real>(m) / static_cast<Real>(std::llabs(dev_num)));
  };

  return GameModel(graph, std::move(state_sizes), std::move(action_sizes),
                   std::move(kernel), std::move(reward), spec.gamma, /*r_max=*/1.0);
}

int sensor_move(int cell, int action, int grid_side) {
  const int row = cell / grid_side;
  const int col = cell % grid_side;
  switch (action) {
    case 0: return col + 1 < grid_side ? cell + 1 : cell;          // right
    case 1: return col - 1 >= 0 ? cell - 1 : cell;                 // left
    case 2: return row - 1 >= 0 ? cell - grid_side : cell;         // up
    case 3: return row + 1 < grid_side ? cell + grid_side : cell;  // down
    default: throw std::invalid_argument("sensor_move: unknown action");
  }
}

GameModel sensor_coverage_model(const SensorCoverageSpec& spec) {
  if (spec.n < 2) throw std::invalid_argument("sensor_coverage_model: need at least 2 agents");
  if (spec.grid_side <= 0)
    throw std::invalid_argument("sensor_coverage_model: grid_side must be positive");
  if (!(spec.detect_prob > 0.0 && spec.detect_prob <= 1.0))
    throw std::invalid_argument("sensor_coverage_model: detect_prob must lie in (0,1]");
  const AgentGraph graph = AgentGraph::ring(spec.n);
  const int n = spec.n;
  const int cells = spec.grid_side * spec.grid_side;
  const int side = spec.grid_side;
  const Real p = spec.detect_prob;

  std::vector<int> state_sizes(static_cast<std::size_t>(n), cells);
  std::vector<int> action_sizes(static_cast<std::size_t>(n), 4);

  auto nbhd = std::make_shared<std::vector<std::vector<int>>>(static_cast<std::size_t>(n));
  std::size_t max_nb = 0;
  for (int i = 0; i < n; ++i) {
    (*nbhd)[static_cast<std::size_t>(i)] = graph.closed_neighbors(i);
    max_nb = std::max(max_nb, (*nbhd)[static_cast<std::size_t>(i)].size());
  }

  TransitionKernel kernel = [cells, side, nbhd](int i, const std::vector<int>& ss,
                                                const std::vector<int>& as) -> Vector {
    const auto& members = (*nbhd)[static_cast<std::size_t>(i)];
    const int self = find_position(members, i);
    const int cell = ss[static_cast<std::size_t>(self)];
    const int intended = as[static_cast<std::size_t>(self)];
    Vector row = Vector::Zero(cells);
    for (int d = 0; d < 4; ++d)
      row[sensor_move(cell, d, side)] += (d == intended) ? 0.85 : 0.05;
    return row;
  };

  RewardFn reward = [p, nbhd](int i, const std::vector<int>& ss,
                              const std::vector<int>& as) -> Real {
    (void)as;
    const auto& members = (*nbhd)[static_cast<std::size_t>(i)];
    const int self = find_position(members, i);
    const int cell = ss[static_cast<std::size_t>(self)];
    Real overlap = 1.0;
    for (std::size_t k = 0; k < members.size(); ++k) {
      if (static_cast<int>(k) == self) continue;
      if (ss[k] == cell) overlap *= (1.0 - p);
    }
    return p * static_cast<Real>(members.size()) * overlap;
  };

  const Real r_max = p * static_cast<Real>(max_nb);
  return GameModel(graph, std::move(state_sizes), std::move(action_sizes),
                   std::move(kernel), std::move(reward), spec.gamma, r_max);
}

GameModel random_networked_mpg(const RandomMpgSpec& spec) {
  const AgentGraph& graph = spec.graph;
  const int n = graph.num_agents();
  if (static_cast<int>(spec.state_sizes.size()) != n ||
      static_cast<int>(spec.action_sizes.size()) != n)
    throw std::invalid_argument("random_networked_mpg: size vectors must match agent count");

  struct Scope {
    std::vector<int> members;
    MixedRadix s_rad, a_rad;
  };
  auto scopes = std::make_shared<std::vector<Scope>>();
  scopes->reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const auto& members = graph.closed_neighbors(i);
    std::vector<int> ss, as;
    for (int j : members) {
      ss.push_back(spec.state_sizes[static_cast<std::size_t>(j)]);
      as.push_back(spec.action_sizes[static_cast<std::size_t>(j)]);
    }
    scopes->push_back({members, MixedRadix(ss), MixedRadix(as)});
  }

  // Pre-sampled kernel rows: flat-Dirichlet rows per (agent, local state, local action).
  auto kernels = std::make_shared<std::vector<Matrix>>();
  Rng rng(derive_seed(spec.seed, {0x3A11DULL}));
  for (int i = 0; i < n; ++i) {
    const Scope& sc = (*scopes)[static_cast<std::size_t>(i)];
    const Index rows = sc.s_rad.size() * sc.a_rad.size();
    Matrix table(rows, spec.state_sizes[static_cast<std::size_t>(i)]);
    for (Index r = 0; r < rows; ++r) {
      Real total = 0.0;
      for (int v = 0; v < table.cols(); ++v) {
        const Real e = -std::log(1.0 - rng.uniform01());
        table(r, v) = e;
        total += e;
      }
      table.row(r) /= total;
    }
    kernels->push_back(std::move(table));
  }

  TransitionKernel kernel = [scopes, kernels](int i, const std::vector<int>& ss,
                                              const std::vector<int>& as) -> Vector {
    const Scope& sc = (*scopes)[static_cast<std::size_t>(i)];
    const Index row = sc.s_rad.encode(ss) * sc.a_rad.size() + sc.a_rad.encode(as);
    return (*kernels)[static_cast<std::size_t>(i)].row(row).transpose();
  };

  const bool complete =
      static_cast<int>(graph.closed_neighbors(0).size()) == n && graph.connected();

  RewardFn reward;
  Real r_max = 1.0;
  bool rewards_local = true;
  if (!spec.identical_interest) {
    auto tables = std::make_shared<std::vector<Vector>>();
    for (int i = 0; i < n; ++i) {
      const Scope& sc = (*scopes)[static_cast<std::size_t>(i)];
      Vector t(sc.s_rad.size() * sc.a_rad.size());
      for (Index r = 0; r < t.size(); ++r) t[r] = rng.uniform01();
      tables->push_back(std::move(t));
    }
    reward = [scopes, tables](int i, const std::vector<int>& ss,
                              const std::vector<int>& as) -> Real {
      const Scope& sc = (*scopes)[static_cast<std::size_t>(i)];
      return (*tables)[static_cast<std::size_t>(i)]
          [sc.s_rad.encode(ss) * sc.a_rad.size() + sc.a_rad.encode(as)];
    };
  } else if (complete) {
    // Every neighborhood is the full agent set; one shared table.
    const Scope& sc = (*scopes)[0];
    auto shared = std::make_shared<Vector>(sc.s_rad.size() * sc.a_rad.size());
    for (Index r = 0; r < shared->size(); ++r) (*shared)[r] = rng.uniform01();
    reward = [scopes, shared](int i, const std::vector<int>& ss,
                              const std::vector<int>& as) -> Real {
      const Scope& sc = (*scopes)[static_cast<std::size_t>(i)];
      return (*shared)[sc.s_rad.encode(ss) * sc.a_rad.size() + sc.a_rad.encode(as)];
    };
  } else {
    // Shared reward = sum of local terms; every agent receives the full sum.
    // Non-local by construction, oracle-only.
    auto terms = std::make_shared<std::vector<Vector>>();
    for (int i = 0; i < n; ++i) {
      const Scope& sc = (*scopes)[static_cast<std::size_t>(i)];
      Vector t(sc.s_rad.size() * sc.a_rad.size());
      for (Index r = 0; r < t.size(); ++r) t[r] = rng.uniform01() / static_cast<Real>(n);
      terms->push_back(std::move(t));
    }
    rewards_local = false;
    reward = [scopes, terms, n](int, const std::vector<int>& s,
                                const std::vector<int>& a) -> Real {
      Real sum = 0.0;
      std::vector<int> ss, as;
      for (int j = 0; j < n; ++j) {
        const Scope& sc = (*scopes)[static_cast<std::size_t>(j)];
        ss.clear();
        as.clear();
        for (int m : sc.members) {
          ss.push_back(s[static_cast<std::size_t>(m)]);
          as.push_back(a[static_cast<std::size_t>(m)]);
        }
        sum += (*terms)[static_cast<std::size_t>(j)]
            [sc.s_rad.encode(ss) * sc.a_rad.size() + sc.a_rad.encode(as)];
      }
      return sum;
    };
  }

  return GameModel(graph, spec.state_sizes, spec.action_sizes, std::move(kernel),
                   std::move(reward), spec.gamma, r_max,
                   InitialDistribution::uniform(), rewards_local);
}

} // namespace netmpg
