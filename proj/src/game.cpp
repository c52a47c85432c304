#include "netmpg/game.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "netmpg/policy.hpp"

namespace netmpg {

InitialDistribution InitialDistribution::point_mass(JointState s) {
  InitialDistribution mu;
  mu.kind = Kind::Point;
  mu.point = std::move(s);
  return mu;
}

InitialDistribution InitialDistribution::product(std::vector<Vector> marginals) {
  InitialDistribution mu;
  mu.kind = Kind::Product;
  mu.marginals = std::move(marginals);
  return mu;
}

GameModel::GameModel(AgentGraph graph, std::vector<int> state_sizes,
                     std::vector<int> action_sizes, TransitionKernel kernel,
                     RewardFn reward, Real gamma, Real r_max,
                     InitialDistribution mu, bool rewards_local)
    : graph_(std::move(graph)),
      state_sizes_(std::move(state_sizes)),
      action_sizes_(std::move(action_sizes)),
      kernel_(std::move(kernel)),
      reward_(std::move(reward)),
      gamma_(gamma),
      r_max_(r_max),
      mu_(std::move(mu)),
      rewards_local_(rewards_local) {
  const int n = graph_.num_agents();
  if (static_cast<int>(state_sizes_.size()) != n ||
      static_cast<int>(action_sizes_.size()) != n)
    throw std::invalid_argument("GameModel: size vectors must have one entry per agent");
  if (!(gamma_ > 0.0 && gamma_ < 1.0))
    throw std::invalid_argument("GameModel: gamma must lie in (0,1)");
  if (!(r_max_ > 0.0)) throw std::invalid_argument("GameModel: r_max must be positive");
  state_radix_ = MixedRadix(state_sizes_);
  action_radix_ = MixedRadix(action_sizes_);

  if (mu_.kind == InitialDistribution::Kind::Point) {
    if (static_cast<int>(mu_.point.size()) != n)
      throw std::invalid_argument("GameModel: point-mass initial state has wrong arity");
    state_radix_.encode(mu_.point); // range check
  } else if (mu_.kind == InitialDistribution::Kind::Product) {
    if (static_cast<int>(mu_.marginals.size()) != n)
      throw std::invalid_argument("GameModel: product mu needs one marginal per agent");
    for (int i = 0; i < n; ++i) {
      const Vector& m = mu_.marginals[static_cast<std::size_t>(i)];
      if (m.size() != state_sizes_[static_cast<std::size_t>(i)])
        throw std::invalid_argument("GameModel: mu marginal length mismatch for agent " +
                                    std::to_string(i));
      if (m.minCoeff() < 0.0 || std::abs(m.sum() - 1.0) > 1e-12)
        throw std::invalid_argument("GameModel: mu marginal for agent " +
                                    std::to_string(i) + " is not a distribution");
    }
  }

  validate_kernel_and_rewards();
}

namespace {

void slice_components(const std::vector<int>& values, const std::vector<int>& ids,
                      std::vector<int>& out) {
  out.resize(ids.size());
  for (std::size_t k = 0; k < ids.size(); ++k)
    out[k] = values[static_cast<std::size_t>(ids[k])];
}

// Hot-path scratch; thread_local keeps const methods reentrant across threads.
thread_local std::vector<int> t_states, t_actions;

} // namespace

void GameModel::validate_kernel_and_rewards() const {
  const int n = num_agents();
  // Count conditional rows across agents; enumerate exhaustively when small,
  // otherwise spot-check a fixed-seed sample.
  Index total_rows = 0;
  bool huge = false;
  std::vector<MixedRadix> scope_s, scope_a;
  scope_s.reserve(static_cast<std::size_t>(n));
  scope_a.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const auto& nb = graph_.closed_neighbors(i);
    std::vector<int> ss, as;
    for (int j : nb) {
      ss.push_back(state_sizes_[static_cast<std::size_t>(j)]);
      as.push_back(action_sizes_[static_cast<std::size_t>(j)]);
    }
    scope_s.emplace_back(ss);
    scope_a.emplace_back(as);
    if (scope_s.back().saturated() || scope_a.back().saturated() ||
        scope_s.back().size() > (Index{1} << 40) / scope_a.back().size())
      huge = true;
    else
      total_rows += scope_s.back().size() * scope_a.back().size();
  }

  auto check_row = [&](int i, const std::vector<int>& ss, const std::vector<int>& as) {
    const Vector row = kernel_(i, ss, as);
    if (row.size() != state_sizes_[static_cast<std::size_t>(i)])
      throw std::invalid_argument("GameModel: kernel row for agent " + std::to_string(i) +
                                  " has wrong length");
    if (row.minCoeff() < -1e-15)
      throw std::invalid_argument("GameModel: kernel row for agent " + std::to_string(i) +
                                  " has a negative entry");
    if (std::abs(row.sum() - 1.0) > 1e-12)
      throw std::invalid_argument("GameModel: kernel row for agent " + std::to_string(i) +
                                  " does not sum to 1 (got " + std::to_string(row.sum()) + ")");
    if (rewards_local_) {
      const Real r = reward_(i, ss, as);
      if (r < -1e-12 || r > r_max_ + 1e-12)
        throw std::invalid_argument("GameModel: reward for agent " + std::to_string(i) +
                                    " outside [0, r_max]");
    }
  };

  constexpr Index kExhaustiveRowCap = 1'000'000;
  if (!huge && total_rows <= kExhaustiveRowCap) {
    std::vector<int> ss, as;
    for (int i = 0; i < n; ++i) {
      const Index ns = scope_s[static_cast<std::size_t>(i)].size();
      const Index na = scope_a[static_cast<std::size_t>(i)].size();
      for (Index si = 0; si < ns; ++si) {
        scope_s[static_cast<std::size_t>(i)].decode(si, ss);
        for (Index ai = 0; ai < na; ++ai) {
          scope_a[static_cast<std::size_t>(i)].decode(ai, as);
          check_row(i, ss, as);
        }
      }
    }
  } else {
    Rng rng(0x5eedcafeULL);
    for (int trial = 0; trial < 10'000; ++trial) {
      const int i = rng.uniform_int(n);
      const auto& sizes_s = scope_s[static_cast<std::size_t>(i)].sizes();
      const auto& sizes_a = scope_a[static_cast<std::size_t>(i)].sizes();
      std::vector<int> ss(sizes_s.size()), as(sizes_a.size());
      for (std::size_t k = 0; k < sizes_s.size(); ++k) ss[k] = rng.uniform_int(sizes_s[k]);
      for (std::size_t k = 0; k < sizes_a.size(); ++k) as[k] = rng.uniform_int(sizes_a[k]);
      check_row(i, ss, as);
    }
  }
}

Vector GameModel::transition_row(int i, const JointState& s, const JointAction& a) const {
  const auto& nb = graph_.closed_neighbors(i);
  slice_components(s, nb, t_states);
  slice_components(a, nb, t_actions);
  return kernel_(i, t_states, t_actions);
}

Real GameModel::reward(int i, const JointState& s, const JointAction& a) const {
  if (rewards_local_) {
    const auto& nb = graph_.closed_neighbors(i);
    slice_components(s, nb, t_states);
    slice_components(a, nb, t_actions);
    return reward_(i, t_states, t_actions);
  }
  return reward_(i, s, a);
}

Vector GameModel::reward_vector(const JointState& s, const JointAction& a) const {
  const int n = num_agents();
  Vector r(n);
  for (int i = 0; i < n; ++i) r[i] = reward(i, s, a);
  return r;
}

JointState GameModel::sample_initial(AgentStreams& streams) const {
  const int n = num_agents();
  JointState s(static_cast<std::size_t>(n));
  switch (mu_.kind) {
    case InitialDistribution::Kind::Uniform:
      for (int i = 0; i < n; ++i)
        s[static_cast<std::size_t>(i)] =
            streams.agent(i).uniform_int(state_sizes_[static_cast<std::size_t>(i)]);
      break;
    case InitialDistribution::Kind::Point:
      s = mu_.point;
      break;
    case InitialDistribution::Kind::Product:
      for (int i = 0; i < n; ++i)
        s[static_cast<std::size_t>(i)] =
            streams.agent(i).categorical(mu_.marginals[static_cast<std::size_t>(i)]);
      break;
  }
  return s;
}

JointState GameModel::sample_transition(const JointState& s, const JointAction& a,
                                        AgentStreams& streams) const {
  const int n = num_agents();
  JointState next(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const Vector row = transition_row(i, s, a);
    next[static_cast<std::size_t>(i)] = streams.agent(i).categorical(row);
  }
  return next;
}

GameModel GameModel::with_initial(InitialDistribution mu) const {
  GameModel copy = *this;
  copy.mu_ = std::move(mu);
  if (copy.mu_.kind == InitialDistribution::Kind::Point)
    copy.state_radix_.encode(copy.mu_.point);
  return copy;
}

LocalObservation project_local(const JointState& s, const Neighborhood& nb) {
  LocalObservation obs{nb.center, nb.kappa, {}};
  obs.values.resize(nb.members.size());
  for (std::size_t k = 0; k < nb.members.size(); ++k)
    obs.values[k] = s[static_cast<std::size_t>(nb.members[k])];
  return obs;
}

Index local_obs_index(const LocalObservation& obs, const GameModel& model) {
  const Neighborhood nb = model.graph().kappa_neighborhood(obs.center, obs.kappa);
  std::vector<int> sizes;
  sizes.reserve(nb.members.size());
  for (int j : nb.members) sizes.push_back(model.state_sizes()[static_cast<std::size_t>(j)]);
  return MixedRadix(sizes).encode(obs.values);
}

JointState sample_transition(const GameModel& model, const JointState& s,
                             const JointAction& a, std::uint64_t seed) {
  AgentStreams streams(seed, model.num_agents());
  return model.sample_transition(s, a, streams);
}

Trajectory sample_trajectory(const GameModel& model, const JointPolicy& policy,
                             int horizon, std::uint64_t seed) {
  if (horizon <= 0) throw std::invalid_argument("sample_trajectory: horizon must be positive");
  const int n = model.num_agents();
  AgentStreams streams(seed, n);
  Trajectory traj;
  traj.states.reserve(static_cast<std::size_t>(horizon));
  traj.actions.reserve(static_cast<std::size_t>(horizon));
  traj.rewards.resize(horizon, n);

  JointState s = model.sample_initial(streams);
  for (int t = 0; t < horizon; ++t) {
    JointAction a(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      const PolicyTable& table = policy.table(i);
      a[static_cast<std::size_t>(i)] =
          table.sample_action(table.observation_index(s), streams.agent(i));
    }
    for (int i = 0; i < n; ++i) traj.rewards(t, i) = model.reward(i, s, a);
    traj.states.push_back(s);
    traj.actions.push_back(a);
    if (t + 1 < horizon) s = model.sample_transition(s, a, streams);
  }
  return traj;
}

Real discounted_return(const Vector& rewards, Real gamma) {
  if (!(gamma > 0.0 && gamma < 1.0))
    throw std::invalid_argument("discounted_return: gamma must lie in (0,1)");
  Real acc = 0.0;
  for (Eigen::Index t = rewards.size() - 1; t >= 0; --t) acc = rewards[t] + gamma * acc;
  return acc;
}

int effective_horizon(Real gamma, Real r_max, Real tol) {
  if (!(gamma > 0.0 && gamma < 1.0) || r_max <= 0.0 || tol <= 0.0)
    throw std::invalid_argument("effective_horizon: invalid parameters");
  const Real t = std::log(tol * (1.0 - gamma) / r_max) / std::log(gamma);
  return std::max(1, static_cast<int>(std::ceil(t)));
}

} // namespace netmpg
