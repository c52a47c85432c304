#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "netmpg/graph.hpp"
#include "netmpg/indexing.hpp"
#include "netmpg/rng.hpp"
#include "netmpg/types.hpp"

namespace netmpg {

class JointPolicy; // policy.hpp

// State components of a kappa-hop neighborhood, in member (ascending id) order.
struct LocalObservation {
  int center = 0;
  int kappa = 0;
  std::vector<int> values;
};

// Per-agent conditional successor distribution: given the states and actions
// of the closed 1-hop neighborhood of `agent` (ascending id order, agent
// included), returns a probability vector over that agent's own states.
using TransitionKernel =
    std::function<Vector(int agent, const std::vector<int>& nbhd_states,
                         const std::vector<int>& nbhd_actions)>;

// Per-agent reward on the same scope. For models flagged non-local the scope
// is the full joint state/action instead.
using RewardFn =
    std::function<Real(int agent, const std::vector<int>& scope_states,
                       const std::vector<int>& scope_actions)>;

struct InitialDistribution {
  enum class Kind { Uniform, Point, Product };
  Kind kind = Kind::Uniform;
  JointState point;               // Kind::Point
  std::vector<Vector> marginals;  // Kind::Product, one per agent

  static InitialDistribution uniform() { return {}; }
  static InitialDistribution point_mass(JointState s);
  static InitialDistribution product(std::vector<Vector> marginals);
};

struct Trajectory {
  std::vector<JointState> states;    // length = horizon
  std::vector<JointAction> actions;  // length = horizon
  Matrix rewards;                    // horizon x n
};

// Finite networked Markov game with a product-factored kernel and 1-hop-local
// rewards. Immutable and shareable after construction; kernel rows are
// validated (non-negative, sum to 1 within 1e-12) at construction.
class GameModel {
 public:
  GameModel(AgentGraph graph, std::vector<int> state_sizes,
            std::vector<int> action_sizes, TransitionKernel kernel,
            RewardFn reward, Real gamma, Real r_max,
            InitialDistribution mu = InitialDistribution::uniform(),
            bool rewards_local = true);

  const AgentGraph& graph() const { return graph_; }
  int num_agents() const { return graph_.num_agents(); }
  const std::vector<int>& state_sizes() const { return state_sizes_; }
  const std::vector<int>& action_sizes() const { return action_sizes_; }
  Real gamma() const { return gamma_; }
  Real r_max() const { return r_max_; }
  const InitialDistribution& mu() const { return mu_; }
  bool rewards_local() const { return rewards_local_; }

  Index joint_state_count() const { return state_radix_.size(); }
  Index joint_action_count() const { return action_radix_.size(); }
  const MixedRadix& state_radix() const { return state_radix_; }
  const MixedRadix& action_radix() const { return action_radix_; }

  // Conditional successor distribution for agent i given the joint (s, a).
  Vector transition_row(int i, const JointState& s, const JointAction& a) const;
  Real reward(int i, const JointState& s, const JointAction& a) const;
  // All per-agent rewards at (s, a) in one pass.
  Vector reward_vector(const JointState& s, const JointAction& a) const;

  JointState sample_initial(AgentStreams& streams) const;
  JointState sample_transition(const JointState& s, const JointAction& a,
                               AgentStreams& streams) const;

  // Same model with a replaced initial distribution (everything else shared).
  GameModel with_initial(InitialDistribution mu) const;

 private:
  void validate_kernel_and_rewards() const;

  AgentGraph graph_;
  std::vector<int> state_sizes_, action_sizes_;
  TransitionKernel kernel_;
  RewardFn reward_;
  Real gamma_, r_max_;
  InitialDistribution mu_;
  bool rewards_local_;
  MixedRadix state_radix_, action_radix_;
};

// --- Operations ------------------------------------------------------------

LocalObservation project_local(const JointState& s, const Neighborhood& nb);

// Mixed-radix index of an observation over the member state sizes.
Index local_obs_index(const LocalObservation& obs, const GameModel& model);

JointState sample_transition(const GameModel& model, const JointState& s,
                             const JointAction& a, std::uint64_t seed);

Trajectory sample_trajectory(const GameModel& model, const JointPolicy& policy,
                             int horizon, std::uint64_t seed);

Real discounted_return(const Vector& rewards, Real gamma);

// Horizon making the geometric truncation tail r_max * gamma^T / (1-gamma)
// no larger than tol.
int effective_horizon(Real gamma, Real r_max, Real tol = 1e-6);

} // namespace netmpg
