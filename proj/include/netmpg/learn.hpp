#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "netmpg/evaluate.hpp"
#include "netmpg/game.hpp"
#include "netmpg/policy.hpp"
#include "netmpg/types.hpp"

namespace netmpg {

// Theorem-form equilibrium radius for a given truncation; same expression as
// decay_bound, exposed at the learning surface for reports.
Real epsilon_for_kappa(Real r_max, Real gamma, int kappa);

struct LearningRecordRow {
  int iteration = 0;
  Real mean_return = 0.0;
  Real max_theta_delta = 0.0;
  std::optional<Real> nash_gap;
  std::optional<Real> potential;
  Real eta = 0.0;
  double wall_seconds = 0.0;
};

struct LearningRecord {
  std::vector<LearningRecordRow> rows;
  bool converged = false;
  std::string stop_reason;
};

struct TrainOptions {
  int kappa = 0;  // clamped to the graph diameter
  Real eta = 0.1;
  int iterations = 500;
  int episodes = 50;  // Monte-Carlo mode
  int horizon = 150;  // Monte-Carlo mode
  std::uint64_t seed = 0;
  bool exact_advantages = false;
  Index oracle_cap = JointOracle::kDefaultCap;
  // Potential tracking is only meaningful for identical-interest games
  // (potential = common value); requires the exact-advantage oracle.
  bool identical_interest = false;

  enum class GapTracking { Auto, Off, Final, EveryIteration };
  GapTracking gap_tracking = GapTracking::Auto;
  // Stop once the tracked Nash gap falls to this level (drivers only).
  std::optional<Real> stop_at_nash_gap;

  // Convergence: max policy change below tol for `patience` consecutive
  // iterations. (theta itself drifts forever at pure-strategy fixed points.)
  Real convergence_tol = 1e-6;
  int convergence_patience = 10;
  Real divergence_theta = 1e8;

  // Called once per iteration with the pre-update policy; tables non-null in
  // exact mode.
  std::function<void(int, const JointPolicy&, const ExactTables*)> observer;
};

struct TrainResult {
  JointPolicy policy;
  LearningRecord record;
};

// Synchronous independent natural policy gradient over kappa-hop soft-max
// tables; all agents update simultaneously from a frozen snapshot.
TrainResult train(const GameModel& model, const TrainOptions& opts);

// Monte-Carlo advantage estimate for one agent via mc_local_q and its
// own-action marginal; deterministic given the seed.
AdvantageEstimate estimate_advantages(const GameModel& model, const JointPolicy& policy,
                                      int agent, int kappa, int episodes, int horizon,
                                      std::uint64_t seed);

// Oracle-backed advantage estimate (visitation-weighted truncated Q minus its
// policy average).
AdvantageEstimate estimate_advantages_exact(const GameModel& model,
                                            const JointPolicy& policy, int agent,
                                            int kappa,
                                            Index oracle_cap = JointOracle::kDefaultCap);

} // namespace netmpg
