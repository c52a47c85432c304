#include <doctest.h>

#include <cmath>

#include "netmpg/envs.hpp"
#include "netmpg/evaluate.hpp"
#include "test_models.hpp"

using namespace netmpg;
using namespace netmpg::testing;

namespace {

JobBalancingSpec small_job_spec(int n, int total, int cap, int deleg) {
  JobBalancingSpec spec;
  spec.n = n;
  spec.total_jobs = total;
  spec.graph = AgentGraph::ring(n);
  spec.max_jobs_per_node = cap;
  spec.max_delegation = deleg;
  return spec;
}

} // namespace

TEST_CASE("job balancing rewards follow the deviation rule") {
  const GameModel model = job_balancing_model(small_job_spec(4, 8, 8, 2));
  // agent 0 on a 4-ring has closed neighborhood {0, 1, 3}
  const JointAction a{0, 0, 0, 0};
  CHECK(model.reward(0, {2, 2, 5, 2}, a) == 1.0);        // s_0 equals the mean
  CHECK(model.reward(0, {6, 3, 0, 3}, a) == doctest::Approx(0.5).epsilon(1e-15));  // dev 2
  // fractional deviation below 1 caps at r_max = 1
  CHECK(model.reward(0, {4, 3, 0, 4}, a) == 1.0);        // mean 11/3, dev 1/3
  // all rewards within (0, 1]
  for (int s0 = 0; s0 < 3; ++s0)
    for (int s1 = 0; s1 < 3; ++s1)
      for (int s3 = 0; s3 < 3; ++s3) {
        const Real r = model.reward(0, {s0, s1, 0, s3}, a);
        CHECK(r > 0.0);
        CHECK(r <= 1.0);
      }
}

TEST_CASE("job balancing transitions match the pure step rule exhaustively") {
  const AgentGraph ring = AgentGraph::ring(4);
  const GameModel model = job_balancing_model(small_job_spec(4, 8, 8, 2));
  MixedRadix states({9, 9, 9, 9});
  MixedRadix actions({3, 3, 3, 3});
  std::vector<int> sd, ad;
  for (Index s = 0; s < states.size(); s += 7) {
    states.decode(s, sd);
    for (Index a = 0; a < actions.size(); ++a) {
      actions.decode(a, ad);
      const auto [expected, clamped] = job_balancing_step(ring, sd, ad, 8);
      const JointState got = sample_transition(model, sd, ad, 1);
      CHECK(got == expected);
      (void)clamped;
    }
  }
}

TEST_CASE("job balancing conserves jobs when no clamp triggers") {
  const AgentGraph ring = AgentGraph::ring(4);
  // exhaustive over all states with total 8 and all actions
  MixedRadix states({9, 9, 9, 9});
  MixedRadix actions({3, 3, 3, 3});
  std::vector<int> sd, ad;
  int checked = 0;
  for (Index s = 0; s < states.size(); ++s) {
    states.decode(s, sd);
    if (sd[0] + sd[1] + sd[2] + sd[3] != 8) continue;
    for (Index a = 0; a < actions.size(); ++a) {
      actions.decode(a, ad);
      const auto [next, clamped] = job_balancing_step(ring, sd, ad, 8);
      CHECK(!clamped);
      CHECK(next[0] + next[1] + next[2] + next[3] == 8);
      ++checked;
    }
  }
  CHECK(checked > 1000);
}

TEST_CASE("job balancing validates its spec") {
  JobBalancingSpec bad = small_job_spec(4, 100, 8, 2);
  CHECK_THROWS_AS(job_balancing_model(bad), std::invalid_argument);
  JobBalancingSpec neg = small_job_spec(4, 8, 8, 0);
  CHECK_THROWS_AS(job_balancing_model(neg), std::invalid_argument);
}

TEST_CASE("sensor coverage interior rows are exactly 0.85/0.05") {
  SensorCoverageSpec spec;
  spec.n = 4;
  spec.grid_side = 5;
  const GameModel model = sensor_coverage_model(spec);
  JointState s{12, 0, 0, 0};  // center cell of the 5x5 grid
  for (int action = 0; action < 4; ++action) {
    JointAction a{action, 0, 0, 0};
    const Vector row = model.transition_row(0, s, a);
    CHECK(row.sum() == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(row[sensor_move(12, action, 5)] == 0.85);
    for (int other = 0; other < 4; ++other)
      if (other != action) CHECK(row[sensor_move(12, other, 5)] == 0.05);
  }
}

TEST_CASE("sensor coverage boundary mass stays in place") {
  SensorCoverageSpec spec;
  spec.n = 4;
  spec.grid_side = 5;
  const GameModel model = sensor_coverage_model(spec);
  // corner cell 0, action left (off grid): stay absorbs 0.85 + 0.05 (up)
  const Vector row = model.transition_row(0, {0, 0, 0, 0}, {1, 0, 0, 0});
  CHECK(row[0] == doctest::Approx(0.9).epsilon(1e-15));
  CHECK(row.sum() == doctest::Approx(1.0).epsilon(1e-15));
  // all 25 x 4 rows sum to 1
  for (int cell = 0; cell < 25; ++cell)
    for (int action = 0; action < 4; ++action) {
      const Vector r = model.transition_row(0, {cell, 0, 0, 0}, {action, 0, 0, 0});
      CHECK(std::abs(r.sum() - 1.0) < 1e-12);
    }
}

TEST_CASE("sensor coverage reward counts unshared cells") {
  SensorCoverageSpec spec;
  spec.n = 6;
  spec.grid_side = 5;
  const GameModel model = sensor_coverage_model(spec);
  // ring of 6: closed neighborhood of agent 0 is {0, 1, 5}
  CHECK(model.reward(0, {3, 7, 0, 0, 0, 9}, {0, 0, 0, 0, 0, 0}) ==
        doctest::Approx(0.7 * 3.0).epsilon(1e-15));
  // one neighbor shares the cell
  CHECK(model.reward(0, {3, 3, 0, 0, 0, 9}, {0, 0, 0, 0, 0, 0}) ==
        doctest::Approx(0.7 * 3.0 * 0.3).epsilon(1e-15));
  // reward ignores agents outside the neighborhood
  for (int far = 0; far < 25; ++far)
    CHECK(model.reward(0, {3, 7, far, far, far, 9}, {0, 0, 0, 0, 0, 0}) ==
          model.reward(0, {3, 7, 0, 0, 0, 9}, {0, 0, 0, 0, 0, 0}));
  CHECK(model.r_max() == doctest::Approx(2.1).epsilon(1e-15));
}

TEST_CASE("sensor coverage empirical move frequency matches 0.85") {
  SensorCoverageSpec spec;
  spec.n = 2;
  spec.grid_side = 5;
  const GameModel model = sensor_coverage_model(spec);
  const JointState s{12, 0};
  const JointAction a{0, 0};  // right from the center cell
  const int target = sensor_move(12, 0, 5);
  int hits = 0;
  constexpr int kSamples = 100'000;
  for (int e = 0; e < kSamples; ++e) {
    const JointState next =
        sample_transition(model, s, a, derive_seed(7, {static_cast<std::uint64_t>(e)}));
    if (next[0] == target) ++hits;
  }
  const Real freq = static_cast<Real>(hits) / kSamples;
  CHECK(std::abs(freq - 0.85) < 0.01);
}

TEST_CASE("random mpg models are seed-deterministic and stochastic") {
  RandomMpgSpec spec;
  spec.graph = AgentGraph::line(3);
  spec.state_sizes = {2, 3, 2};
  spec.action_sizes = {2, 2, 2};
  spec.seed = 77;
  const GameModel a = random_networked_mpg(spec);
  const GameModel b = random_networked_mpg(spec);
  spec.seed = 78;
  const GameModel c = random_networked_mpg(spec);

  bool differs = false;
  for (int s0 = 0; s0 < 2; ++s0)
    for (int s1 = 0; s1 < 3; ++s1)
      for (int s2 = 0; s2 < 2; ++s2)
        for (int a0 = 0; a0 < 2; ++a0) {
          const JointState s{s0, s1, s2};
          const JointAction act{a0, 0, 1};
          for (int i = 0; i < 3; ++i) {
            const Vector ra = a.transition_row(i, s, act);
            CHECK((ra - b.transition_row(i, s, act)).cwiseAbs().maxCoeff() == 0.0);
            CHECK(std::abs(ra.sum() - 1.0) < 1e-12);
            if ((ra - c.transition_row(i, s, act)).cwiseAbs().maxCoeff() > 0.0)
              differs = true;
            CHECK(a.reward(i, s, act) == b.reward(i, s, act));
          }
        }
  CHECK(differs);
}

TEST_CASE("identical-interest mode gives every agent the same value function") {
  const GameModel model = two_agent_identical(5);
  for (const std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
    const JointPolicy policy = random_joint_policy(model, 1, seed);
    const ExactTables t = exact_evaluate(model, policy);
    CHECK((t.V.col(0) - t.V.col(1)).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("identical-interest sum mode on a non-complete graph is flagged non-local") {
  RandomMpgSpec spec;
  spec.graph = AgentGraph::line(3);
  spec.state_sizes = {2, 2, 2};
  spec.action_sizes = {2, 2, 2};
  spec.seed = 9;
  spec.identical_interest = true;
  const GameModel model = random_networked_mpg(spec);
  CHECK(!model.rewards_local());
  // every agent still sees the same (full) reward
  const JointState s{1, 0, 1};
  const JointAction a{0, 1, 0};
  CHECK(model.reward(0, s, a) == model.reward(1, s, a));
  CHECK(model.reward(1, s, a) == model.reward(2, s, a));
  // and values coincide across agents
  const JointPolicy policy = random_joint_policy(model, 1, 4);
  const ExactTables t = exact_evaluate(model, policy);
  CHECK((t.V.col(0) - t.V.col(2)).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("downscaled environments pass the decay certificate at every kappa") {
  {
    const GameModel model = job_balancing_model(small_job_spec(4, 4, 2, 1));
    const JointOracle oracle(model);
    const int diam = model.graph().diameter();
    for (int kappa = 0; kappa <= diam; ++kappa) {
      const JointPolicy policy = random_joint_policy(model, kappa, 50 + kappa);
      const ExactTables t = oracle.evaluate(policy);
      for (int i = 0; i < model.num_agents(); ++i)
        CHECK(oracle.certify_decay(t, i, kappa).pass);
    }
  }
  {
    SensorCoverageSpec spec;
    spec.n = 2;
    spec.grid_side = 2;
    const GameModel model = sensor_coverage_model(spec);
    const JointOracle oracle(model);
    const int diam = model.graph().diameter();
    for (int kappa = 0; kappa <= diam; ++kappa) {
      const JointPolicy policy = random_joint_policy(model, kappa, 60 + kappa);
      const ExactTables t = oracle.evaluate(policy);
      for (int i = 0; i < model.num_agents(); ++i)
        CHECK(oracle.certify_decay(t, i, kappa).pass);
    }
  }
}
