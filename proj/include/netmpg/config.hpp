#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "netmpg/game.hpp"
#include "netmpg/graph.hpp"
#include "netmpg/types.hpp"

namespace netmpg {

struct GraphSpec {
  enum class Kind { Ring, Line, Edges };
  Kind kind = Kind::Ring;
  int n = 0;
  std::vector<std::pair<int, int>> edges;
};

struct EnvironmentConfig {
  std::string name;  // job_balancing | sensor_coverage | random_mpg
  Real gamma = 0.9;
  std::optional<GraphSpec> graph;

  // job_balancing
  int n = 0;
  int total_jobs = 60;
  int max_jobs_per_node = 0;  // 0 -> 2 * total_jobs / n
  int max_delegation = 2;

  // sensor_coverage
  int grid_side = 5;
  Real detect_prob = 0.7;

  // random_mpg
  std::vector<int> state_sizes, action_sizes;
  std::uint64_t model_seed = 12345;
  bool identical_interest = false;
};

struct ExperimentConfig {
  EnvironmentConfig environment;
  std::vector<int> kappa = {0};
  bool kappa_is_list = false;  // a JSON array enables sweep mode
  Real eta = 0.1;
  int iterations = 500;
  int episodes = 50;
  int horizon = 150;
  int eval_episodes = 200;
  std::uint64_t seed = 0;
  int num_seeds = 1;
  bool exact_advantages = false;
  std::string output_dir = "out";
  Index oracle_cap = 10'000'000;
  int threads = 1;
  int verify_policies = 5;
  int verify_train_iterations = 30'000;
};

// Parses and fully validates a config; unknown keys are rejected and parse
// errors carry line context.
ExperimentConfig load_config(const std::string& path);
ExperimentConfig parse_config(const std::string& text, const std::string& origin);

// Canonical snapshot with every default resolved; parsing it back reproduces
// the identical config.
std::string config_to_json(const ExperimentConfig& cfg);

AgentGraph build_graph_spec(const GraphSpec& spec);
GameModel build_environment(const EnvironmentConfig& env);

} // namespace netmpg
