#pragma once

// Small fixture models shared across the test suites.

#include <vector>

#include "netmpg/envs.hpp"
#include "netmpg/game.hpp"
#include "netmpg/policy.hpp"

namespace netmpg::testing {

// Single agent, `num_states` chain, deterministic move right, absorbing at the
// end; reward 1 in state 0 only. Closed-form values are finite sums.
inline GameModel chain_model(int num_states = 3, Real gamma = 0.9) {
  AgentGraph g(1, {});
  TransitionKernel kernel = [num_states](int, const std::vector<int>& ss,
                                         const std::vector<int>&) {
    Vector row = Vector::Zero(num_states);
    row[std::min(ss[0] + 1, num_states - 1)] = 1.0;
    return row;
  };
  RewardFn reward = [](int, const std::vector<int>& ss, const std::vector<int>&) {
    return ss[0] == 0 ? 1.0 : 0.0;
  };
  return GameModel(g, {num_states}, {2}, kernel, reward, gamma, 1.0,
                   InitialDistribution::point_mass({0}));
}

// Single agent, single state, two arms paying 1 and 0.
inline GameModel bandit_model(Real gamma = 0.9) {
  AgentGraph g(1, {});
  TransitionKernel kernel = [](int, const std::vector<int>&, const std::vector<int>&) {
    Vector row(1);
    row[0] = 1.0;
    return row;
  };
  RewardFn reward = [](int, const std::vector<int>&, const std::vector<int>& as) {
    return as[0] == 0 ? 1.0 : 0.0;
  };
  return GameModel(g, {1}, {2}, kernel, reward, gamma, 1.0);
}

inline GameModel constant_reward_model(Real value, Real gamma = 0.9) {
  AgentGraph g(1, {});
  TransitionKernel kernel = [](int, const std::vector<int>&, const std::vector<int>&) {
    Vector row(1);
    row[0] = 1.0;
    return row;
  };
  RewardFn reward = [value](int, const std::vector<int>&, const std::vector<int>&) {
    return value;
  };
  return GameModel(g, {1}, {2}, kernel, reward, gamma, std::max(value, 1.0));
}

inline GameModel line3_random_mpg(std::uint64_t seed, Real gamma = 0.9) {
  RandomMpgSpec spec;
  spec.graph = AgentGraph::line(3);
  spec.state_sizes = {2, 2, 2};
  spec.action_sizes = {2, 2, 2};
  spec.seed = seed;
  spec.gamma = gamma;
  return random_networked_mpg(spec);
}

inline GameModel two_agent_identical(std::uint64_t seed, int states = 3, int actions = 2,
                                     Real gamma = 0.9) {
  RandomMpgSpec spec;
  spec.graph = AgentGraph::complete(2);
  spec.state_sizes = {states, states};
  spec.action_sizes = {actions, actions};
  spec.seed = seed;
  spec.identical_interest = true;
  spec.gamma = gamma;
  return random_networked_mpg(spec);
}

// Point-mass policy: enormous logits on the chosen action per observation.
inline JointPolicy point_policy(const GameModel& model, int kappa,
                                const std::vector<std::vector<int>>& choice) {
  JointPolicy policy = JointPolicy::uniform(model, kappa);
  for (int i = 0; i < policy.num_agents(); ++i) {
    Matrix& theta = policy.table(i).theta();
    for (Eigen::Index obs = 0; obs < theta.rows(); ++obs)
      theta(obs, choice[static_cast<std::size_t>(i)][static_cast<std::size_t>(obs)]) = 500.0;
  }
  return policy;
}

} // namespace netmpg::testing
