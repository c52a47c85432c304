#pragma once

#include <vector>

#include "netmpg/game.hpp"
#include "netmpg/graph.hpp"
#include "netmpg/indexing.hpp"
#include "netmpg/types.hpp"

namespace netmpg {

// Sparse advantage estimate over (observation, own action) entries. Entries
// absent from the list carry no evidence and leave theta unchanged.
struct AdvantageEstimate {
  int agent = 0;
  int kappa = 0;
  struct Entry {
    Index obs;
    int action;
    Real value;
  };
  std::vector<Entry> entries;
};

// Tabular soft-max policy of one agent over its kappa-hop observations.
// theta rows are observation indices, columns own actions.
class PolicyTable {
 public:
  PolicyTable(int agent, int kappa, std::vector<int> members,
              std::vector<int> obs_sizes, int num_actions);

  static PolicyTable zeros(const GameModel& model, int agent, int kappa);

  int agent() const { return agent_; }
  int kappa() const { return kappa_; }
  const std::vector<int>& members() const { return members_; }
  Index num_observations() const { return obs_radix_.size(); }
  int num_actions() const { return num_actions_; }
  const Matrix& theta() const { return theta_; }
  Matrix& theta() { return theta_; }

  Index observation_index(const JointState& s) const;

  // Numerically stabilized soft-max of a theta row; sums to 1 within 1e-12.
  Vector distribution(Index obs_index) const;
  Vector distribution(const LocalObservation& obs) const;

  Real probability(Index obs_index, int action) const;

  // Allocation-free draw from the soft-max row (hot sampling path).
  int sample_action(Index obs_index, Rng& rng) const;

  // Writes the soft-max row into out[0..num_actions); no allocation.
  void distribution_into(Index obs_index, Real* out) const;

  // In-place streamlined natural-gradient step theta += eta/(1-gamma) * A on
  // the listed entries only. Throws on a non-finite advantage, naming the entry.
  void apply_update(const AdvantageEstimate& advantage, Real eta, Real gamma);

 private:
  int agent_, kappa_, num_actions_;
  std::vector<int> members_;
  MixedRadix obs_radix_;
  Matrix theta_;
};

// Value-semantics update: returns the stepped copy.
PolicyTable npg_update(const PolicyTable& table, const AdvantageEstimate& advantage,
                       Real eta, Real gamma);

// One PolicyTable per agent, all sharing the same kappa.
class JointPolicy {
 public:
  JointPolicy(int kappa, std::vector<PolicyTable> tables);

  static JointPolicy uniform(const GameModel& model, int kappa);

  int kappa() const { return kappa_; }
  int num_agents() const { return static_cast<int>(tables_.size()); }
  const PolicyTable& table(int i) const { return tables_.at(static_cast<std::size_t>(i)); }
  PolicyTable& table(int i) { return tables_.at(static_cast<std::size_t>(i)); }

  // pi_i(.|s_{N_i^kappa}) for the full joint state s.
  Vector action_distribution(int i, const JointState& s) const;

 private:
  int kappa_;
  std::vector<PolicyTable> tables_;
};

// Random kappa-truncated policy: theta entries uniform in [-2, 2].
JointPolicy random_joint_policy(const GameModel& model, int kappa, std::uint64_t seed);

} // namespace netmpg
