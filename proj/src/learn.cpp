#include "netmpg/learn.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>
#include <unordered_map>

namespace netmpg {

Real epsilon_for_kappa(Real r_max, Real gamma, int kappa) {
  return decay_bound(r_max, gamma, kappa);
}

namespace {

// Per-agent (observation, own action) return accumulator. Dense storage with a
// touched list below kDenseCap entries, hash map above.
class ReturnAccumulator {
 public:
  static constexpr Index kDenseCap = Index{1} << 23;

  ReturnAccumulator(Index num_obs, int num_actions)
      : num_actions_(num_actions), dense_(num_obs * num_actions <= kDenseCap) {
    if (dense_) {
      sums_.assign(static_cast<std::size_t>(num_obs * num_actions), 0.0);
      counts_.assign(static_cast<std::size_t>(num_obs * num_actions), 0);
    }
  }

  void add(Index obs, int action, Real value) { add_sum(obs, action, value, 1); }

  void add_sum(Index obs, int action, Real sum, long count) {
    const Index key = obs * num_actions_ + action;
    if (dense_) {
      if (counts_[static_cast<std::size_t>(key)] == 0) touched_.push_back(key);
      sums_[static_cast<std::size_t>(key)] += sum;
      counts_[static_cast<std::size_t>(key)] += count;
    } else {
      auto& slot = map_[key];
      if (slot.second == 0) touched_.push_back(key);
      slot.first += sum;
      slot.second += count;
    }
  }

  // Visited (obs, action, mean) triples in first-touch order.
  template <typename Fn>
  void for_each(Fn&& fn) const {
    for (Index key : touched_) {
      Real sum;
      long cnt;
      if (dense_) {
        sum = sums_[static_cast<std::size_t>(key)];
        cnt = counts_[static_cast<std::size_t>(key)];
      } else {
        const auto& slot = map_.at(key);
        sum = slot.first;
        cnt = slot.second;
      }
      fn(key / num_actions_, static_cast<int>(key % num_actions_), sum, cnt);
    }
  }

  void clear() {
    for (Index key : touched_) {
      if (dense_) {
        sums_[static_cast<std::size_t>(key)] = 0.0;
        counts_[static_cast<std::size_t>(key)] = 0;
      }
    }
    if (!dense_) map_.clear();
    touched_.clear();
  }

 private:
  Index num_actions_;
  bool dense_;
  std::vector<Real> sums_;
  std::vector<long> counts_;
  std::unordered_map<Index, std::pair<Real, long>> map_;
  std::vector<Index> touched_;
};

AdvantageEstimate entries_from_accumulator(const ReturnAccumulator& acc, int agent,
                                           int kappa) {
  // Baseline per observation: empirical mean return over all visits.
  std::unordered_map<Index, std::pair<Real, long>> per_obs;
  acc.for_each([&](Index obs, int, Real sum, long cnt) {
    auto& slot = per_obs[obs];
    slot.first += sum;
    slot.second += cnt;
  });
  AdvantageEstimate est{agent, kappa, {}};
  acc.for_each([&](Index obs, int action, Real sum, long cnt) {
    const auto& base = per_obs.at(obs);
    const Real qhat = sum / static_cast<Real>(cnt);
    const Real vhat = base.first / static_cast<Real>(base.second);
    est.entries.push_back({obs, action, qhat - vhat});
  });
  return est;
}

} // namespace

AdvantageEstimate estimate_advantages(const GameModel& model, const JointPolicy& policy,
                                      int agent, int kappa, int episodes, int horizon,
                                      std::uint64_t seed) {
  const McLocalQ mc = mc_local_q(model, policy, agent, kappa, episodes, horizon, seed);
  // Marginalize the local action profile down to the own action by visit counts.
  const Neighborhood nb = model.graph().kappa_neighborhood(agent, kappa);
  const int pos = static_cast<int>(
      std::lower_bound(nb.members.begin(), nb.members.end(), agent) - nb.members.begin());
  std::vector<int> a_sizes;
  for (int j : nb.members) a_sizes.push_back(model.action_sizes()[static_cast<std::size_t>(j)]);
  const MixedRadix a_rad(a_sizes);

  ReturnAccumulator acc(mc.num_local_states,
                        model.action_sizes()[static_cast<std::size_t>(agent)]);
  std::vector<int> adig;
  // Deterministic order: iterate keys ascending.
  std::vector<Index> keys;
  keys.reserve(mc.acc.size());
  for (const auto& [key, _] : mc.acc) keys.push_back(key);
  std::sort(keys.begin(), keys.end());
  for (Index key : keys) {
    const auto& slot = mc.acc.at(key);
    const Index s_loc = key / mc.num_local_actions;
    const Index a_loc = key % mc.num_local_actions;
    a_rad.decode(a_loc, adig);
    acc.add_sum(s_loc, adig[static_cast<std::size_t>(pos)], slot.first, slot.second);
  }
  return entries_from_accumulator(acc, agent, kappa);
}

TrainResult train(const GameModel& model, const TrainOptions& opts) {
  if (opts.iterations < 1) throw std::invalid_argument("train: iterations must be >= 1");
  if (!(opts.eta > 0.0)) throw std::invalid_argument("train: eta must be positive");
  if (opts.kappa < 0) throw std::invalid_argument("train: kappa must be non-negative");
  if (!opts.exact_advantages) {
    if (opts.episodes < 1) throw std::invalid_argument("train: episodes must be >= 1");
    if (opts.horizon < 1) throw std::invalid_argument("train: horizon must be >= 1");
  }

  const int kappa = std::min(opts.kappa, model.graph().diameter());
  const int n = model.num_agents();
  const Real gamma = model.gamma();
  JointPolicy policy = JointPolicy::uniform(model, kappa);

  std::optional<JointOracle> oracle;
  const Index S = model.joint_state_count();
  const Index A = model.joint_action_count();
  const bool feasible = S > 0 && A > 0 && S <= opts.oracle_cap / A;
  if (opts.exact_advantages) {
    if (!feasible)
      throw std::runtime_error(
          "train: exact advantages requested but the oracle is infeasible for this model");
    oracle.emplace(model, opts.oracle_cap);
  } else if (feasible && opts.gap_tracking != TrainOptions::GapTracking::Off) {
    oracle.emplace(model, opts.oracle_cap);
  }

  bool gap_every = false, gap_final = false;
  if (oracle.has_value()) {
    switch (opts.gap_tracking) {
      case TrainOptions::GapTracking::Auto:
        gap_every = S * A <= 4096;
        gap_final = !gap_every;
        break;
      case TrainOptions::GapTracking::EveryIteration:
        gap_every = true;
        break;
      case TrainOptions::GapTracking::Final:
        gap_final = true;
        break;
      case TrainOptions::GapTracking::Off:
        break;
    }
  }

  std::vector<ReturnAccumulator> accs;
  if (!opts.exact_advantages) {
    accs.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
      accs.emplace_back(policy.table(i).num_observations(), policy.table(i).num_actions());
  }

  LearningRecord record;
  record.rows.reserve(static_cast<std::size_t>(opts.iterations));
  record.stop_reason = "iteration budget exhausted";
  Matrix warm;
  int streak = 0;
  const auto t0 = std::chrono::steady_clock::now();

  for (int iter = 0; iter < opts.iterations; ++iter) {
    std::vector<AdvantageEstimate> advs;
    LearningRecordRow row;
    row.iteration = iter;
    row.eta = opts.eta;

    if (opts.exact_advantages) {
      EvalOptions eopts;
      if (warm.size() > 0) eopts.warm_start = &warm;
      ExactAdvantages ea = oracle->exact_advantages(policy, eopts);
      warm = ea.tables.V;
      const Vector mu = oracle->initial_distribution();
      row.mean_return = (mu.transpose() * ea.tables.V).mean();
      if (opts.identical_interest) row.potential = mu.dot(ea.tables.V.col(0));
      if (gap_every || (gap_final && iter + 1 == opts.iterations))
        row.nash_gap = oracle->nash_gap(policy, &ea.tables);
      if (opts.observer) opts.observer(iter, policy, &ea.tables);
      advs = std::move(ea.per_agent);
    } else {
      for (auto& a : accs) a.clear();
      Real return_sum = 0.0;
      for (int e = 0; e < opts.episodes; ++e) {
        const std::uint64_t ep_seed = derive_seed(
            opts.seed, {0x17E2ULL, static_cast<std::uint64_t>(iter), static_cast<std::uint64_t>(e)});
        const Trajectory traj = sample_trajectory(model, policy, opts.horizon, ep_seed);
        const int usable = std::max(1, opts.horizon - mc_tail_window(gamma));
        for (int i = 0; i < n; ++i) {
          const PolicyTable& table = policy.table(i);
          Real g = 0.0;
          // suffix scan; record visits below the tail window
          static thread_local std::vector<Real> gbuf;
          gbuf.resize(static_cast<std::size_t>(opts.horizon));
          for (int t = opts.horizon - 1; t >= 0; --t) {
            g = traj.rewards(t, i) + gamma * g;
            gbuf[static_cast<std::size_t>(t)] = g;
          }
          return_sum += gbuf[0];
          auto& acc = accs[static_cast<std::size_t>(i)];
          for (int t = 0; t < usable; ++t) {
            const Index obs = table.observation_index(traj.states[static_cast<std::size_t>(t)]);
            const int ai = traj.actions[static_cast<std::size_t>(t)][static_cast<std::size_t>(i)];
            acc.add(obs, ai, gbuf[static_cast<std::size_t>(t)]);
          }
        }
      }
      row.mean_return = return_sum / (static_cast<Real>(opts.episodes) * n);
      if (gap_final && iter + 1 == opts.iterations && oracle.has_value())
        row.nash_gap = oracle->nash_gap(policy);
      if (opts.observer) opts.observer(iter, policy, nullptr);
      advs.reserve(static_cast<std::size_t>(n));
      for (int i = 0; i < n; ++i)
        advs.push_back(entries_from_accumulator(accs[static_cast<std::size_t>(i)], i, kappa));
    }

    // Simultaneous update; measure theta- and policy-space step sizes.
    Real max_dtheta = 0.0, max_dpi = 0.0, max_abs_theta = 0.0;
    std::vector<Index> touched;
    std::vector<Real> old_theta, old_pi, new_pi;
    for (int i = 0; i < n; ++i) {
      PolicyTable& table = policy.table(i);
      const int na = table.num_actions();
      touched.clear();
      touched.reserve(advs[static_cast<std::size_t>(i)].entries.size());
      for (const auto& e : advs[static_cast<std::size_t>(i)].entries) touched.push_back(e.obs);
      std::sort(touched.begin(), touched.end());
      touched.erase(std::unique(touched.begin(), touched.end()), touched.end());

      old_theta.resize(touched.size() * static_cast<std::size_t>(na));
      old_pi.resize(touched.size() * static_cast<std::size_t>(na));
      new_pi.resize(static_cast<std::size_t>(na));
      for (std::size_t k = 0; k < touched.size(); ++k) {
        for (int a = 0; a < na; ++a)
          old_theta[k * static_cast<std::size_t>(na) + static_cast<std::size_t>(a)] =
              table.theta()(touched[k], a);
        table.distribution_into(touched[k], old_pi.data() + k * static_cast<std::size_t>(na));
      }
      table.apply_update(advs[static_cast<std::size_t>(i)], opts.eta, gamma);
      for (std::size_t k = 0; k < touched.size(); ++k) {
        table.distribution_into(touched[k], new_pi.data());
        for (int a = 0; a < na; ++a) {
          const Real th = table.theta()(touched[k], a);
          max_dtheta = std::max(
              max_dtheta,
              std::abs(th - old_theta[k * static_cast<std::size_t>(na) +
                                      static_cast<std::size_t>(a)]));
          max_dpi = std::max(
              max_dpi, std::abs(new_pi[static_cast<std::size_t>(a)] -
                                old_pi[k * static_cast<std::size_t>(na) +
                                       static_cast<std::size_t>(a)]));
          max_abs_theta = std::max(max_abs_theta, std::abs(th));
        }
      }
    }
    if (max_abs_theta > opts.divergence_theta)
      throw std::runtime_error("train: divergence detected at iteration " +
                               std::to_string(iter) + " (|theta| > " +
                               std::to_string(opts.divergence_theta) +
                               "); reduce the step size");

    row.max_theta_delta = max_dtheta;
    row.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    record.rows.push_back(row);

    if (row.nash_gap.has_value() && opts.stop_at_nash_gap.has_value() &&
        *row.nash_gap <= *opts.stop_at_nash_gap) {
      record.converged = true;
      record.stop_reason = "nash gap target reached";
      break;
    }
    streak = (max_dpi < opts.convergence_tol) ? streak + 1 : 0;
    if (streak >= opts.convergence_patience) {
      record.converged = true;
      record.stop_reason = "converged";
      break;
    }
  }
  return {std::move(policy), std::move(record)};
}

AdvantageEstimate estimate_advantages_exact(const GameModel& model,
                                            const JointPolicy& policy, int agent,
                                            int kappa, Index oracle_cap) {
  if (kappa != policy.kappa())
    throw std::invalid_argument("estimate_advantages_exact: kappa/policy mismatch");
  const JointOracle oracle(model, oracle_cap);
  ExactAdvantages ea = oracle.exact_advantages(policy);
  return std::move(ea.per_agent.at(static_cast<std::size_t>(agent)));
}

} // namespace netmpg
