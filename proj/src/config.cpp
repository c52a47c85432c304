#include "netmpg/config.hpp"

#include <json.hpp>

#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "netmpg/envs.hpp"

namespace netmpg {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& origin, const std::string& msg) {
  throw std::runtime_error(origin + ": " + msg);
}

int line_of_byte(const std::string& text, std::size_t byte) {
  int line = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i)
    if (text[i] == '\n') ++line;
  return line;
}

void reject_unknown_keys(const json& obj, const std::set<std::string>& known,
                         const std::string& origin, const std::string& where) {
  for (const auto& [key, _] : obj.items())
    if (!known.contains(key))
      fail(origin, "unknown key \"" + key + "\" in " + where);
}

GraphSpec parse_graph(const json& j, const std::string& origin) {
  if (!j.is_object()) fail(origin, "graph must be an object");
  GraphSpec g;
  reject_unknown_keys(j, {"ring", "line", "edges", "n"}, origin, "graph");
  const int forms = static_cast<int>(j.contains("ring")) +
                    static_cast<int>(j.contains("line")) +
                    static_cast<int>(j.contains("edges"));
  if (forms != 1) fail(origin, "graph needs exactly one of ring/line/edges");
  if (j.contains("ring")) {
    g.kind = GraphSpec::Kind::Ring;
    g.n = j.at("ring").get<int>();
  } else if (j.contains("line")) {
    g.kind = GraphSpec::Kind::Line;
    g.n = j.at("line").get<int>();
  } else {
    g.kind = GraphSpec::Kind::Edges;
    if (!j.contains("n")) fail(origin, "edge-list graph needs n");
    g.n = j.at("n").get<int>();
    for (const auto& e : j.at("edges")) {
      if (!e.is_array() || e.size() != 2) fail(origin, "edges entries must be pairs");
      g.edges.emplace_back(e.at(0).get<int>(), e.at(1).get<int>());
    }
  }
  if (g.n <= 0) fail(origin, "graph agent count must be positive");
  return g;
}

json graph_to_json(const GraphSpec& g) {
  json j;
  switch (g.kind) {
    case GraphSpec::Kind::Ring: j["ring"] = g.n; break;
    case GraphSpec::Kind::Line: j["line"] = g.n; break;
    case GraphSpec::Kind::Edges: {
      j["n"] = g.n;
      json edges = json::array();
      for (const auto& [a, b] : g.edges) edges.push_back({a, b});
      j["edges"] = edges;
      break;
    }
  }
  return j;
}

std::vector<int> parse_sizes(const json& j, int n, const std::string& origin,
                             const std::string& key) {
  std::vector<int> sizes;
  if (j.is_number_integer()) {
    sizes.assign(static_cast<std::size_t>(n), j.get<int>());
  } else if (j.is_array()) {
    for (const auto& v : j) sizes.push_back(v.get<int>());
    if (static_cast<int>(sizes.size()) != n)
      fail(origin, key + " must have one entry per agent");
  } else {
    fail(origin, key + " must be an integer or an array");
  }
  for (int s : sizes)
    if (s <= 0) fail(origin, key + " entries must be positive");
  return sizes;
}

EnvironmentConfig parse_environment(const json& j, const std::string& origin) {
  if (!j.is_object()) fail(origin, "environment must be an object");
  if (!j.contains("name")) fail(origin, "environment needs a name");
  EnvironmentConfig env;
  env.name = j.at("name").get<std::string>();

  if (env.name == "job_balancing") {
    reject_unknown_keys(j,
                        {"name", "n", "total_jobs", "max_jobs_per_node", "max_delegation",
                         "gamma", "graph"},
                        origin, "environment");
    env.n = j.value("n", 30);
    env.total_jobs = j.value("total_jobs", 60);
    env.max_jobs_per_node = j.value("max_jobs_per_node", 0);
    env.max_delegation = j.value("max_delegation", 2);
    env.gamma = j.value("gamma", 0.9);
    if (j.contains("graph")) env.graph = parse_graph(j.at("graph"), origin);
  } else if (env.name == "sensor_coverage") {
    reject_unknown_keys(j, {"name", "n", "grid_side", "detect_prob", "gamma"}, origin,
                        "environment");
    env.n = j.value("n", 20);
    env.grid_side = j.value("grid_side", 5);
    env.detect_prob = j.value("detect_prob", 0.7);
    env.gamma = j.value("gamma", 0.9);
  } else if (env.name == "random_mpg") {
    reject_unknown_keys(j,
                        {"name", "n", "graph", "state_sizes", "action_sizes", "model_seed",
                         "identical_interest", "gamma"},
                        origin, "environment");
    if (!j.contains("n")) fail(origin, "random_mpg environment needs n");
    env.n = j.at("n").get<int>();
    env.state_sizes = j.contains("state_sizes")
                          ? parse_sizes(j.at("state_sizes"), env.n, origin, "state_sizes")
                          : std::vector<int>(static_cast<std::size_t>(env.n), 2);
    env.action_sizes = j.contains("action_sizes")
                           ? parse_sizes(j.at("action_sizes"), env.n, origin, "action_sizes")
                           : std::vector<int>(static_cast<std::size_t>(env.n), 2);
    env.model_seed = j.value("model_seed", std::uint64_t{12345});
    env.identical_interest = j.value("identical_interest", false);
    env.gamma = j.value("gamma", 0.9);
    if (j.contains("graph")) env.graph = parse_graph(j.at("graph"), origin);
  } else {
    fail(origin, "unknown environment \"" + env.name + "\"");
  }
  if (env.n <= 0) fail(origin, "environment n must be positive");
  if (!(env.gamma > 0.0 && env.gamma < 1.0)) fail(origin, "gamma must lie in (0,1)");
  return env;
}

json environment_to_json(const EnvironmentConfig& env) {
  json j;
  j["name"] = env.name;
  j["gamma"] = env.gamma;
  if (env.name == "job_balancing") {
    j["n"] = env.n;
    j["total_jobs"] = env.total_jobs;
    j["max_jobs_per_node"] = env.max_jobs_per_node;
    j["max_delegation"] = env.max_delegation;
    j["graph"] = graph_to_json(env.graph.value_or(GraphSpec{GraphSpec::Kind::Ring, env.n, {}}));
  } else if (env.name == "sensor_coverage") {
    j["n"] = env.n;
    j["grid_side"] = env.grid_side;
    j["detect_prob"] = env.detect_prob;
  } else {
    j["n"] = env.n;
    j["state_sizes"] = env.state_sizes;
    j["action_sizes"] = env.action_sizes;
    j["model_seed"] = env.model_seed;
    j["identical_interest"] = env.identical_interest;
    j["graph"] = graph_to_json(env.graph.value_or(GraphSpec{GraphSpec::Kind::Ring, env.n, {}}));
  }
  return j;
}

} // namespace

ExperimentConfig parse_config(const std::string& text, const std::string& origin) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(origin, "parse error at line " + std::to_string(line_of_byte(text, e.byte)) + ": " +
                     e.what());
  }
  if (!j.is_object()) fail(origin, "config root must be an object");
  reject_unknown_keys(j,
                      {"environment", "kappa", "eta", "iterations", "episodes", "horizon",
                       "eval_episodes", "seed", "num_seeds", "exact_advantages", "output_dir",
                       "oracle_cap", "threads", "verify_policies", "verify_train_iterations"},
                      origin, "config");
  if (!j.contains("environment")) fail(origin, "config needs an environment block");
  if (!j.contains("seed")) fail(origin, "config needs a seed");

  ExperimentConfig cfg;
  cfg.environment = parse_environment(j.at("environment"), origin);
  cfg.seed = j.at("seed").get<std::uint64_t>();

  if (j.contains("kappa")) {
    const json& k = j.at("kappa");
    if (k.is_array()) {
      cfg.kappa_is_list = true;
      cfg.kappa.clear();
      for (const auto& v : k) cfg.kappa.push_back(v.get<int>());
      if (cfg.kappa.empty()) fail(origin, "kappa list must be non-empty");
    } else if (k.is_number_integer()) {
      cfg.kappa = {k.get<int>()};
      cfg.kappa_is_list = false;
    } else {
      fail(origin, "kappa must be an integer or an array");
    }
  }
  for (int k : cfg.kappa)
    if (k < 0) fail(origin, "kappa entries must be non-negative");

  cfg.eta = j.value("eta", 0.1);
  cfg.iterations = j.value("iterations", 500);
  cfg.episodes = j.value("episodes", 50);
  cfg.horizon = j.value("horizon", 150);
  cfg.eval_episodes = j.value("eval_episodes", 200);
  cfg.num_seeds = j.value("num_seeds", 1);
  cfg.exact_advantages = j.value("exact_advantages", false);
  cfg.output_dir = j.value("output_dir", std::string("out"));
  cfg.oracle_cap = j.value("oracle_cap", Index{10'000'000});
  cfg.threads = j.value("threads", 1);
  cfg.verify_policies = j.value("verify_policies", 5);
  cfg.verify_train_iterations = j.value("verify_train_iterations", 30'000);

  if (!(cfg.eta > 0.0)) fail(origin, "eta must be positive");
  if (cfg.iterations <= 0) fail(origin, "iterations must be positive");
  if (cfg.episodes <= 0) fail(origin, "episodes must be positive");
  if (cfg.horizon <= 0) fail(origin, "horizon must be positive");
  if (cfg.eval_episodes <= 0) fail(origin, "eval_episodes must be positive");
  if (cfg.num_seeds <= 0) fail(origin, "num_seeds must be positive");
  if (cfg.oracle_cap <= 0) fail(origin, "oracle_cap must be positive");
  if (cfg.threads <= 0) fail(origin, "threads must be positive");
  if (cfg.verify_policies <= 0) fail(origin, "verify_policies must be positive");
  if (cfg.verify_train_iterations <= 0)
    fail(origin, "verify_train_iterations must be positive");
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_config: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

std::string config_to_json(const ExperimentConfig& cfg) {
  json j;
  j["environment"] = environment_to_json(cfg.environment);
  if (cfg.kappa_is_list)
    j["kappa"] = cfg.kappa;
  else
    j["kappa"] = cfg.kappa.at(0);
  j["eta"] = cfg.eta;
  j["iterations"] = cfg.iterations;
  j["episodes"] = cfg.episodes;
  j["horizon"] = cfg.horizon;
  j["eval_episodes"] = cfg.eval_episodes;
  j["seed"] = cfg.seed;
  j["num_seeds"] = cfg.num_seeds;
  j["exact_advantages"] = cfg.exact_advantages;
  j["output_dir"] = cfg.output_dir;
  j["oracle_cap"] = cfg.oracle_cap;
  j["threads"] = cfg.threads;
  j["verify_policies"] = cfg.verify_policies;
  j["verify_train_iterations"] = cfg.verify_train_iterations;
  return j.dump(2) + "\n";
}

AgentGraph build_graph_spec(const GraphSpec& spec) {
  switch (spec.kind) {
    case GraphSpec::Kind::Ring: return AgentGraph::ring(spec.n);
    case GraphSpec::Kind::Line: return AgentGraph::line(spec.n);
    case GraphSpec::Kind::Edges: return AgentGraph(spec.n, spec.edges);
  }
  throw std::logic_error("build_graph_spec: unreachable");
}

GameModel build_environment(const EnvironmentConfig& env) {
  if (env.name == "job_balancing") {
    JobBalancingSpec spec;
    spec.n = env.n;
    spec.total_jobs = env.total_jobs;
    spec.max_jobs_per_node = env.max_jobs_per_node;
    spec.max_delegation = env.max_delegation;
    spec.gamma = env.gamma;
    if (env.graph.has_value()) spec.graph = build_graph_spec(*env.graph);
    GameModel model = job_balancing_model(spec);
    if (!model.graph().connected())
      throw std::runtime_error("build_environment: experiment graphs must be connected");
    return model;
  }
  if (env.name == "sensor_coverage") {
    SensorCoverageSpec spec;
    spec.n = env.n;
    spec.grid_side = env.grid_side;
    spec.detect_prob = env.detect_prob;
    spec.gamma = env.gamma;
    return sensor_coverage_model(spec);
  }
  if (env.name == "random_mpg") {
    RandomMpgSpec spec;
    spec.graph = env.graph.has_value() ? build_graph_spec(*env.graph)
                                       : AgentGraph::ring(env.n);
    spec.state_sizes = env.state_sizes;
    spec.action_sizes = env.action_sizes;
    spec.seed = env.model_seed;
    spec.identical_interest = env.identical_interest;
    spec.gamma = env.gamma;
    GameModel model = random_networked_mpg(spec);
    if (!model.graph().connected())
      throw std::runtime_error("build_environment: experiment graphs must be connected");
    return model;
  }
  throw std::runtime_error("build_environment: unknown environment " + env.name);
}

} // namespace netmpg
