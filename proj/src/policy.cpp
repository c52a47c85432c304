#include "netmpg/policy.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace netmpg {

PolicyTable::PolicyTable(int agent, int kappa, std::vector<int> members,
                         std::vector<int> obs_sizes, int num_actions)
    : agent_(agent),
      kappa_(kappa),
      num_actions_(num_actions),
      members_(std::move(members)),
      obs_radix_(std::move(obs_sizes)) {
  if (num_actions_ <= 0)
    throw std::invalid_argument("PolicyTable: action count must be positive");
  if (static_cast<int>(members_.size()) != obs_radix_.digits())
    throw std::invalid_argument("PolicyTable: members/obs_sizes arity mismatch");
  constexpr Index kMaxEntries = Index{1} << 27;
  if (obs_radix_.saturated() || obs_radix_.size() > kMaxEntries / num_actions_)
    throw std::invalid_argument(
        "PolicyTable: observation space too large for a tabular policy "
        "(agent " + std::to_string(agent_) + ", kappa " + std::to_string(kappa_) + ")");
  theta_ = Matrix::Zero(obs_radix_.size(), num_actions_);
}

PolicyTable PolicyTable::zeros(const GameModel& model, int agent, int kappa) {
  const Neighborhood nb = model.graph().kappa_neighborhood(agent, kappa);
  std::vector<int> obs_sizes;
  obs_sizes.reserve(nb.members.size());
  for (int j : nb.members)
    obs_sizes.push_back(model.state_sizes()[static_cast<std::size_t>(j)]);
  return PolicyTable(agent, kappa, nb.members, std::move(obs_sizes),
                     model.action_sizes()[static_cast<std::size_t>(agent)]);
}

Index PolicyTable::observation_index(const JointState& s) const {
  static thread_local std::vector<int> vals;
  vals.resize(members_.size());
  for (std::size_t k = 0; k < members_.size(); ++k)
    vals[k] = s[static_cast<std::size_t>(members_[k])];
  return obs_radix_.encode(vals);
}

Vector PolicyTable::distribution(Index obs_index) const {
  if (obs_index < 0 || obs_index >= theta_.rows())
    throw std::out_of_range("PolicyTable::distribution: observation index out of range");
  Vector row(num_actions_);
  distribution_into(obs_index, row.data());
  return row;
}

void PolicyTable::distribution_into(Index obs_index, Real* out) const {
  Real m = theta_(obs_index, 0);
  for (int a = 1; a < num_actions_; ++a) m = std::max(m, theta_(obs_index, a));
  Real total = 0.0;
  for (int a = 0; a < num_actions_; ++a) {
    out[a] = std::exp(theta_(obs_index, a) - m);
    total += out[a];
  }
  for (int a = 0; a < num_actions_; ++a) out[a] /= total;
}

Vector PolicyTable::distribution(const LocalObservation& obs) const {
  if (obs.center != agent_ || obs.kappa != kappa_ ||
      static_cast<int>(obs.values.size()) != obs_radix_.digits())
    throw std::invalid_argument("PolicyTable::distribution: observation does not match table");
  return distribution(obs_radix_.encode(obs.values));
}

Real PolicyTable::probability(Index obs_index, int action) const {
  return distribution(obs_index)[action];
}

int PolicyTable::sample_action(Index obs_index, Rng& rng) const {
  static thread_local std::vector<Real> w;
  w.resize(static_cast<std::size_t>(num_actions_));
  Real m = theta_(obs_index, 0);
  for (int a = 1; a < num_actions_; ++a) m = std::max(m, theta_(obs_index, a));
  Real total = 0.0;
  for (int a = 0; a < num_actions_; ++a) {
    w[static_cast<std::size_t>(a)] = std::exp(theta_(obs_index, a) - m);
    total += w[static_cast<std::size_t>(a)];
  }
  const Real u = rng.uniform01() * total;
  Real acc = 0.0;
  for (int a = 0; a + 1 < num_actions_; ++a) {
    acc += w[static_cast<std::size_t>(a)];
    if (u < acc) return a;
  }
  return num_actions_ - 1;
}

void PolicyTable::apply_update(const AdvantageEstimate& advantage, Real eta, Real gamma) {
  if (!(eta > 0.0)) throw std::invalid_argument("apply_update: eta must be positive");
  if (!(gamma > 0.0 && gamma < 1.0))
    throw std::invalid_argument("apply_update: gamma must lie in (0,1)");
  const Real coeff = eta / (1.0 - gamma);
  for (const auto& e : advantage.entries) {
    if (!std::isfinite(e.value))
      throw std::runtime_error("apply_update: non-finite advantage at agent " +
                               std::to_string(agent_) + " obs " + std::to_string(e.obs) +
                               " action " + std::to_string(e.action));
    if (e.obs < 0 || e.obs >= theta_.rows() || e.action < 0 || e.action >= num_actions_)
      throw std::out_of_range("apply_update: advantage entry out of range");
    theta_(e.obs, e.action) += coeff * e.value;
  }
}

PolicyTable npg_update(const PolicyTable& table, const AdvantageEstimate& advantage,
                       Real eta, Real gamma) {
  PolicyTable updated = table;
  updated.apply_update(advantage, eta, gamma);
  return updated;
}

JointPolicy::JointPolicy(int kappa, std::vector<PolicyTable> tables)
    : kappa_(kappa), tables_(std::move(tables)) {
  for (std::size_t i = 0; i < tables_.size(); ++i) {
    if (tables_[i].kappa() != kappa_)
      throw std::invalid_argument("JointPolicy: table kappa mismatch for agent " +
                                  std::to_string(i));
    if (tables_[i].agent() != static_cast<int>(i))
      throw std::invalid_argument("JointPolicy: tables must be ordered by agent id");
  }
}

JointPolicy JointPolicy::uniform(const GameModel& model, int kappa) {
  std::vector<PolicyTable> tables;
  tables.reserve(static_cast<std::size_t>(model.num_agents()));
  for (int i = 0; i < model.num_agents(); ++i)
    tables.push_back(PolicyTable::zeros(model, i, kappa));
  return JointPolicy(kappa, std::move(tables));
}

Vector JointPolicy::action_distribution(int i, const JointState& s) const {
  const PolicyTable& t = table(i);
  return t.distribution(t.observation_index(s));
}

JointPolicy random_joint_policy(const GameModel& model, int kappa, std::uint64_t seed) {
  JointPolicy policy = JointPolicy::uniform(model, kappa);
  for (int i = 0; i < policy.num_agents(); ++i) {
    Rng rng(derive_seed(seed, {0x7011CULL, static_cast<std::uint64_t>(i)}));
    Matrix& theta = policy.table(i).theta();
    for (Eigen::Index r = 0; r < theta.rows(); ++r)
      for (Eigen::Index c = 0; c < theta.cols(); ++c) theta(r, c) = rng.uniform(-2.0, 2.0);
  }
  return policy;
}

} // namespace netmpg
