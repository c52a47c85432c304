#pragma once

#include <Eigen/Sparse>

#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "netmpg/game.hpp"
#include "netmpg/indexing.hpp"
#include "netmpg/policy.hpp"
#include "netmpg/types.hpp"

namespace netmpg {

// Total variation distance between two finite distributions (half L1).
Real tv_distance(const Vector& p, const Vector& q);

// Theorem-form decay bound (r_max / (1-gamma)) * gamma^(kappa+1).
Real decay_bound(Real r_max, Real gamma, int kappa);

struct ExactTables {
  Matrix V;               // S x n
  std::vector<Matrix> Q;  // per agent, S x A
  std::vector<Matrix> A;  // per agent, S x A
  Real bellman_residual = 0.0;
};

struct EvalOptions {
  enum class Method { Auto, ValueIteration, LinearSolve };
  Method method = Method::Auto;
  Real tol = 1e-10;
  const Matrix* warm_start = nullptr;  // optional initial V (S x n)
};

// Normalized weights over exterior (state, action) configurations, one row per
// local configuration. Row index = s_local * num_local_actions + a_local,
// column index = s_ext * num_ext_actions + a_ext.
struct TruncationWeights {
  int agent = 0;
  int kappa = 0;
  Index num_local_states = 1, num_local_actions = 1;
  Index num_ext_states = 1, num_ext_actions = 1;
  Matrix w;
};

// Same but over states only (rows s_local, columns s_ext); used for the
// truncated value table in the gradient-gap certificate.
struct StateWeights {
  int agent = 0;
  int kappa = 0;
  Matrix w;
};

struct LocalQTable {
  int agent = 0;
  int kappa = 0;
  Matrix q;  // num_local_states x num_local_actions
};

struct DecayCertificate {
  int agent = 0;
  int kappa = 0;
  Real max_gap = 0.0;
  Real bound = 0.0;
  bool pass = false;
};

struct TruncationCertificate {
  int agent = 0;
  int kappa = 0;
  std::string weight_kind;
  Real max_deviation = 0.0;
  Real bound = 0.0;
  bool pass = false;
};

struct GradientGapCertificate {
  int agent = 0;
  int kappa = 0;
  std::string weight_kind;
  Real max_advantage_deviation = 0.0;
  Real advantage_bound = 0.0;      // 2 k gamma^(kappa+1)
  Real max_step_gap = 0.0;         // advantage deviation / (1-gamma)
  Real step_bound_proof = 0.0;     // 2 k gamma^(kappa+1) / (1-gamma)
  Real step_bound_statement = 0.0; // 2 r_max / (1-gamma)^2
  bool pass = false;
};

// Monte-Carlo estimate of the truncated Q-function, keyed by local
// (state, action) configuration; unvisited entries have count 0.
struct McLocalQ {
  int agent = 0;
  int kappa = 0;
  Index num_local_states = 1, num_local_actions = 1;
  std::unordered_map<Index, std::pair<Real, long>> acc;  // sum, count

  Index key(Index s_local, Index a_local) const {
    return s_local * num_local_actions + a_local;
  }
  long count(Index k) const {
    auto it = acc.find(k);
    return it == acc.end() ? 0 : it->second.second;
  }
  Real estimate(Index k) const;
};

// Number of trailing steps excluded from return-to-go sampling so that the
// truncation tail is at most 2% of r_max/(1-gamma).
int mc_tail_window(Real gamma);

struct ExactAdvantages {
  ExactTables tables;
  Vector visitation;  // d over joint states, sums to 1
  std::vector<AdvantageEstimate> per_agent;
};

// Dense enumeration workspace over the joint state-action space. Everything
// here is a pure function of immutable inputs; methods may be called
// concurrently on one instance.
class JointOracle {
 public:
  JointOracle(const GameModel& model, Index cap = kDefaultCap);

  static constexpr Index kDefaultCap = 10'000'000;

  const GameModel& model() const { return *model_; }
  Index num_states() const { return S_; }
  Index num_actions() const { return A_; }
  Vector initial_distribution() const;

  ExactTables evaluate(const JointPolicy& policy, const EvalOptions& opts = {}) const;
  // Discounted state visitation d = (1-gamma) * sum_t gamma^t P(s_t = .).
  Vector state_visitation(const JointPolicy& policy) const;

  TruncationWeights visitation_weights(const JointPolicy& policy, int agent,
                                       int kappa) const;
  TruncationWeights uniform_weights(int agent, int kappa) const;
  StateWeights visitation_state_weights(const JointPolicy& policy, int agent,
                                        int kappa) const;
  StateWeights uniform_state_weights(int agent, int kappa) const;

  LocalQTable truncated_q(const ExactTables& tables, const TruncationWeights& weights) const;
  Vector truncated_v(const ExactTables& tables, const StateWeights& weights) const;

  DecayCertificate certify_decay(const ExactTables& tables, int agent, int kappa) const;
  TruncationCertificate certify_truncation(const ExactTables& tables,
                                           const TruncationWeights& weights,
                                           const LocalQTable& qhat) const;
  GradientGapCertificate certify_gradient_gap(const ExactTables& tables,
                                              const LocalQTable& qhat,
                                              const Vector& vhat,
                                              const TruncationWeights& weights) const;

  Real nash_gap(const JointPolicy& policy, const ExactTables* tables = nullptr) const;

  ExactAdvantages exact_advantages(const JointPolicy& policy,
                                   const EvalOptions& opts = {}) const;

  // Local (s, a) split for one agent/kappa; row/col convention as in
  // TruncationWeights.
  std::pair<Index, Index> local_split_dims(int agent, int kappa) const;

 private:
  struct PolicyContext {
    std::vector<Matrix> agent_rows;  // per agent S x |A_i|
    Matrix joint_prob;               // S x A
  };
  PolicyContext make_context(const JointPolicy& policy) const;
  Eigen::SparseMatrix<Real, Eigen::RowMajor> policy_kernel(const PolicyContext& ctx) const;
  Matrix solve_values(const PolicyContext& ctx, const EvalOptions& opts,
                      Real* residual_out) const;

  const GameModel* model_;
  Index cap_, S_, A_;
  int n_;
  std::vector<std::vector<int>> state_digits_, action_digits_;
  std::vector<Matrix> rewards_;  // per agent S x A
  // Joint successor distributions per (s, a), keyed s * A + a.
  std::vector<std::vector<std::pair<Index, Real>>> rows_;
};

// --- Free-function surface ---------------------------------------------------

ExactTables exact_evaluate(const GameModel& model, const JointPolicy& policy,
                           Index oracle_cap = JointOracle::kDefaultCap,
                           const EvalOptions& opts = {});

TruncationWeights visitation_weights(const GameModel& model, const JointPolicy& policy,
                                     int agent, int kappa,
                                     Index oracle_cap = JointOracle::kDefaultCap);

LocalQTable truncated_q(const GameModel& model, const ExactTables& tables,
                        const TruncationWeights& weights,
                        Index oracle_cap = JointOracle::kDefaultCap);

DecayCertificate certify_decay(const GameModel& model, const JointPolicy& policy,
                               int agent, int kappa,
                               Index oracle_cap = JointOracle::kDefaultCap);

Real nash_gap(const GameModel& model, const JointPolicy& policy,
              Index oracle_cap = JointOracle::kDefaultCap);

McLocalQ mc_local_q(const GameModel& model, const JointPolicy& policy, int agent,
                    int kappa, int episodes, int horizon, std::uint64_t seed);

} // namespace netmpg
