#pragma once

#include <optional>
#include <utility>

#include "netmpg/game.hpp"
#include "netmpg/graph.hpp"
#include "netmpg/types.hpp"

namespace netmpg {

struct JobBalancingSpec {
  int n = 30;
  int total_jobs = 60;
  std::optional<AgentGraph> graph;  // default: ring over n agents
  int max_jobs_per_node = 0;        // 0 -> default 2 * total_jobs / n
  int max_delegation = 2;
  Real gamma = 0.9;
};

GameModel job_balancing_model(const JobBalancingSpec& spec);

// One deterministic step of the job-balancing dynamics: each agent delegates
// min(a_i, s_i) jobs, split equally across its neighbors with the remainder
// going to the lowest ids, then states clamp to [0, cap]. Returns the next
// state and whether any clamp triggered.
std::pair<JointState, bool> job_balancing_step(const AgentGraph& g, const JointState& s,
                                               const JointAction& a, int cap);

struct SensorCoverageSpec {
  int n = 20;
  int grid_side = 5;
  Real detect_prob = 0.7;
  Real gamma = 0.9;
};

GameModel sensor_coverage_model(const SensorCoverageSpec& spec);

// Grid kinematics shared with tests: destination cell for a move, boundary
// moves stay in place. Actions: 0 right, 1 left, 2 up, 3 down.
int sensor_move(int cell, int action, int grid_side);

struct RandomMpgSpec {
  AgentGraph graph = AgentGraph::line(2);
  std::vector<int> state_sizes;
  std::vector<int> action_sizes;
  std::uint64_t seed = 0;
  bool identical_interest = false;
  Real gamma = 0.9;
};

GameModel random_networked_mpg(const RandomMpgSpec& spec);

} // namespace netmpg
