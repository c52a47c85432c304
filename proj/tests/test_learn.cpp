#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>

#include "netmpg/learn.hpp"
#include "test_models.hpp"

using namespace netmpg;
using namespace netmpg::testing;

TEST_CASE("epsilon_for_kappa follows the theorem closed form") {
  CHECK(epsilon_for_kappa(1.0, 0.9, 0) == doctest::Approx(9.0).epsilon(1e-12));
  // 10 * 0.9^11
  CHECK(epsilon_for_kappa(1.0, 0.9, 10) == doctest::Approx(3.1381059609).epsilon(1e-9));
  for (int kappa = 0; kappa < 8; ++kappa) {
    CHECK(epsilon_for_kappa(1.0, 0.9, kappa) == decay_bound(1.0, 0.9, kappa));
    CHECK(epsilon_for_kappa(1.0, 0.9, kappa + 1) / epsilon_for_kappa(1.0, 0.9, kappa) ==
          doctest::Approx(0.9).epsilon(1e-12));
  }
}

TEST_CASE("exact advantages equal the truncated-Q reconstruction") {
  const GameModel model = line3_random_mpg(7);
  const JointOracle oracle(model);
  const int kappa = 1;
  const JointPolicy policy = random_joint_policy(model, kappa, 19);

  const ExactTables tables = oracle.evaluate(policy);
  const Vector d = oracle.state_visitation(policy);

  for (int agent = 0; agent < 3; ++agent) {
    const AdvantageEstimate est = estimate_advantages_exact(model, policy, agent, kappa);
    CHECK(!est.entries.empty());

    // Reconstruction via the evaluation-module surface: visitation-weighted
    // truncated Q, marginalized to the own action by local visitation mass,
    // then centered by the policy average.
    const TruncationWeights w = oracle.visitation_weights(policy, agent, kappa);
    const LocalQTable qhat = oracle.truncated_q(tables, w);

    const Neighborhood nb = model.graph().kappa_neighborhood(agent, kappa);
    std::vector<int> a_sizes;
    for (int j : nb.members)
      a_sizes.push_back(model.action_sizes()[static_cast<std::size_t>(j)]);
    const SubsetSplit ssplit(model.state_sizes(), nb.members);
    const SubsetSplit asplit(model.action_sizes(), nb.members);
    const MixedRadix a_rad(a_sizes);
    const int pos = static_cast<int>(
        std::lower_bound(nb.members.begin(), nb.members.end(), agent) - nb.members.begin());
    const Index SL = ssplit.local().size(), AL = asplit.local().size();
    const int Ai = model.action_sizes()[static_cast<std::size_t>(agent)];

    Matrix mass = Matrix::Zero(SL, AL);
    for (Index s = 0; s < oracle.num_states(); ++s) {
      const auto sd = model.state_radix().decode(s);
      const Index sl = ssplit.split(s).first;
      for (Index a = 0; a < oracle.num_actions(); ++a) {
        const auto ad = model.action_radix().decode(a);
        Real prob = 1.0;
        for (int j = 0; j < 3; ++j)
          prob *= policy.table(j).distribution(policy.table(j).observation_index(sd))[ad[j]];
        mass(sl, asplit.split(a).first) += d[s] * prob;
      }
    }

    auto marginal = [&](Index obs, int ai) {
      Real num = 0.0, den = 0.0;
      std::vector<int> adig;
      for (Index al = 0; al < AL; ++al) {
        a_rad.decode(al, adig);
        if (adig[static_cast<std::size_t>(pos)] != ai) continue;
        num += mass(obs, al) * qhat.q(obs, al);
        den += mass(obs, al);
      }
      return std::pair<Real, Real>(num, den);
    };

    for (const auto& entry : est.entries) {
      const auto [num, den] = marginal(entry.obs, entry.action);
      REQUIRE(den > 0.0);
      const Real qtilde = num / den;
      const Vector pi = policy.table(agent).distribution(entry.obs);
      Real vhat = 0.0, pmass = 0.0;
      for (int ai = 0; ai < Ai; ++ai) {
        const auto [num_a, den_a] = marginal(entry.obs, ai);
        if (den_a > 0.0) {
          vhat += pi[ai] * num_a / den_a;
          pmass += pi[ai];
        }
      }
      vhat /= pmass;
      CHECK(entry.value == doctest::Approx(qtilde - vhat).epsilon(1e-9));
    }
  }
}

TEST_CASE("exact advantages are centered under the policy") {
  const GameModel model = two_agent_identical(3);
  const JointPolicy policy = random_joint_policy(model, 1, 23);
  for (int agent = 0; agent < 2; ++agent) {
    const AdvantageEstimate est = estimate_advantages_exact(model, policy, agent, 1);
    std::map<Index, Real> weighted;
    for (const auto& e : est.entries) {
      const Vector pi = policy.table(agent).distribution(e.obs);
      weighted[e.obs] += pi[e.action] * e.value;
    }
    CHECK(!weighted.empty());
    for (const auto& [obs, sum] : weighted) CHECK(std::abs(sum) < 1e-9);
  }
}

TEST_CASE("zero rewards give zero advantages") {
  const GameModel model = constant_reward_model(0.0);
  const JointPolicy policy = JointPolicy::uniform(model, 0);
  const AdvantageEstimate exact = estimate_advantages_exact(model, policy, 0, 0);
  CHECK(!exact.entries.empty());
  for (const auto& e : exact.entries) CHECK(std::abs(e.value) < 1e-12);
  const AdvantageEstimate mc = estimate_advantages(model, policy, 0, 0, 10, 50, 3);
  CHECK(!mc.entries.empty());
  for (const auto& e : mc.entries) CHECK(std::abs(e.value) < 1e-12);
}

TEST_CASE("bandit training matches the closed-form recursion and finds the arm") {
  const GameModel model = bandit_model();

  // Closed-form oracle: with one state, A(a) = r(a) - E[r], so the logit gap
  // grows by exactly eta/(1-gamma) * (r_0 - r_1) = 1 per iteration.
  Real th0 = 0.0, th1 = 0.0;
  int oracle_hit = -1;
  for (int t = 0; t < 500; ++t) {
    const Real p0 = std::exp(th0) / (std::exp(th0) + std::exp(th1));
    th0 += 1.0 - p0;
    th1 += 0.0 - p0;
    if (oracle_hit < 0 && std::exp(th0) / (std::exp(th0) + std::exp(th1)) > 0.99)
      oracle_hit = t;
  }
  REQUIRE(oracle_hit >= 0);

  TrainOptions opts;
  opts.kappa = 0;
  opts.eta = 0.1;
  opts.iterations = 500;
  opts.exact_advantages = true;
  opts.gap_tracking = TrainOptions::GapTracking::Off;
  const TrainResult result = train(model, opts);
  const Vector p = result.policy.table(0).distribution(Index{0});
  CHECK(p[0] > 0.99);

  // The logit gap after t iterations is exactly t.
  TrainOptions short_opts = opts;
  short_opts.iterations = 10;
  short_opts.convergence_patience = 1000;
  const TrainResult short_run = train(model, short_opts);
  const Real gap =
      short_run.policy.table(0).theta()(0, 0) - short_run.policy.table(0).theta()(0, 1);
  CHECK(gap == doctest::Approx(10.0).epsilon(1e-9));
}

TEST_CASE("potential is monotone for identical-interest games with exact advantages") {
  const GameModel model = two_agent_identical(0);
  TrainOptions opts;
  opts.kappa = 1;
  opts.eta = 0.1;
  opts.iterations = 200;
  opts.exact_advantages = true;
  opts.identical_interest = true;
  opts.gap_tracking = TrainOptions::GapTracking::Off;
  opts.convergence_patience = 1000000;
  const TrainResult result = train(model, opts);
  REQUIRE(result.record.rows.size() > 10);
  for (std::size_t t = 1; t < result.record.rows.size(); ++t) {
    REQUIRE(result.record.rows[t].potential.has_value());
    CHECK(*result.record.rows[t].potential >=
          *result.record.rows[t - 1].potential - 1e-10);
  }
}

TEST_CASE("training is deterministic") {
  const GameModel model = line3_random_mpg(9);
  TrainOptions opts;
  opts.kappa = 1;
  opts.eta = 0.1;
  opts.iterations = 20;
  opts.episodes = 8;
  opts.horizon = 50;
  opts.seed = 1234;
  opts.gap_tracking = TrainOptions::GapTracking::Off;
  const TrainResult a = train(model, opts);
  const TrainResult b = train(model, opts);
  REQUIRE(a.record.rows.size() == b.record.rows.size());
  for (std::size_t t = 0; t < a.record.rows.size(); ++t) {
    CHECK(a.record.rows[t].mean_return == b.record.rows[t].mean_return);
    CHECK(a.record.rows[t].max_theta_delta == b.record.rows[t].max_theta_delta);
  }
  for (int i = 0; i < 3; ++i)
    CHECK((a.policy.table(i).theta() - b.policy.table(i).theta()).cwiseAbs().maxCoeff() ==
          0.0);
}

TEST_CASE("kappa = diameter training reproduces full-information updates") {
  const GameModel model = two_agent_identical(8, 2, 2);
  const JointOracle oracle(model);
  const int diam = model.graph().diameter();
  const Real eta = 0.1, gamma = model.gamma();

  // Reference: textbook independent natural policy gradient on the full state,
  // theta(s, a_i) += eta/(1-gamma) * E_{a_-i ~ pi_-i}[A_i(s, a)].
  std::vector<Matrix> ref_theta(2, Matrix::Zero(oracle.num_states(), 2));
  auto ref_policy = [&](int agent, Index s) {
    Vector row = ref_theta[static_cast<std::size_t>(agent)].row(s).transpose();
    row = (row.array() - row.maxCoeff()).exp();
    return Vector(row / row.sum());
  };
  const int iterations = 25;
  for (int t = 0; t < iterations; ++t) {
    JointPolicy mirror = JointPolicy::uniform(model, diam);
    for (int i = 0; i < 2; ++i)
      mirror.table(i).theta() = ref_theta[static_cast<std::size_t>(i)];
    const ExactTables tables = oracle.evaluate(mirror);
    std::vector<Matrix> steps(2, Matrix::Zero(oracle.num_states(), 2));
    for (int i = 0; i < 2; ++i) {
      for (Index s = 0; s < oracle.num_states(); ++s) {
        for (int ai = 0; ai < 2; ++ai) {
          Real abar = 0.0;
          for (int aj = 0; aj < 2; ++aj) {
            const std::vector<int> ad =
                i == 0 ? std::vector<int>{ai, aj} : std::vector<int>{aj, ai};
            const Index a = model.action_radix().encode(ad);
            abar += ref_policy(1 - i, s)[aj] * tables.A[static_cast<std::size_t>(i)](s, a);
          }
          steps[static_cast<std::size_t>(i)](s, ai) = eta / (1.0 - gamma) * abar;
        }
      }
    }
    for (int i = 0; i < 2; ++i)
      ref_theta[static_cast<std::size_t>(i)] += steps[static_cast<std::size_t>(i)];
  }

  TrainOptions opts;
  opts.kappa = diam;
  opts.eta = eta;
  opts.iterations = iterations;
  opts.exact_advantages = true;
  opts.gap_tracking = TrainOptions::GapTracking::Off;
  opts.convergence_patience = 1000000;
  const TrainResult result = train(model, opts);
  // both sides solve values to 1e-10; the step coefficient amplifies that
  // drift over the 25 iterations
  for (int i = 0; i < 2; ++i)
    CHECK((result.policy.table(i).theta() - ref_theta[static_cast<std::size_t>(i)])
              .cwiseAbs()
              .maxCoeff() < 1e-7);
}

TEST_CASE("divergent steps abort with a diagnostic") {
  const GameModel model = bandit_model();
  TrainOptions opts;
  opts.kappa = 0;
  opts.eta = 1e9;  // pushes |theta| past the guard immediately
  opts.iterations = 50;
  opts.exact_advantages = true;
  opts.gap_tracking = TrainOptions::GapTracking::Off;
  CHECK_THROWS_WITH_AS(train(model, opts), doctest::Contains("divergence"),
                       std::runtime_error);
}

TEST_CASE("train validates options") {
  const GameModel model = bandit_model();
  TrainOptions opts;
  opts.iterations = 0;
  CHECK_THROWS_AS(train(model, opts), std::invalid_argument);
  opts.iterations = 10;
  opts.eta = -1.0;
  CHECK_THROWS_AS(train(model, opts), std::invalid_argument);
  opts.eta = 0.1;
  opts.episodes = 0;
  CHECK_THROWS_AS(train(model, opts), std::invalid_argument);
}
