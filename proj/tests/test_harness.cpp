#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "netmpg/csv.hpp"
#include "netmpg/harness.hpp"
#include "netmpg/svgplot.hpp"
#include "test_models.hpp"

using namespace netmpg;
namespace fs = std::filesystem;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string tmp_dir(const std::string& tag) {
  const fs::path dir = fs::temp_directory_path() / ("netmpg_test_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir.string();
}

const char* kTinyIdentical = R"({
  "environment": {
    "name": "random_mpg",
    "n": 2,
    "graph": {"edges": [[0, 1]], "n": 2},
    "state_sizes": 2,
    "action_sizes": 2,
    "model_seed": 3,
    "identical_interest": true,
    "gamma": 0.9
  },
  "kappa": 1,
  "eta": 0.1,
  "iterations": 60,
  "exact_advantages": true,
  "seed": 5
})";

} // namespace

TEST_CASE("load_config applies defaults to a minimal config") {
  const ExperimentConfig cfg =
      parse_config(R"({"environment": {"name": "sensor_coverage"}, "seed": 7})", "test");
  CHECK(cfg.environment.gamma == 0.9);
  CHECK(cfg.eta == 0.1);
  CHECK(cfg.environment.n == 20);
  CHECK(cfg.environment.grid_side == 5);
  CHECK(cfg.seed == 7);
  CHECK(!cfg.kappa_is_list);
}

TEST_CASE("kappa list enables sweep mode") {
  const ExperimentConfig cfg = parse_config(
      R"({"environment": {"name": "sensor_coverage"}, "seed": 1, "kappa": [0, 1, 2, 3]})",
      "test");
  CHECK(cfg.kappa_is_list);
  CHECK(cfg.kappa == std::vector<int>{0, 1, 2, 3});
}

TEST_CASE("config validation errors") {
  CHECK_THROWS_WITH_AS(
      parse_config(R"({"environment": {"name": "sensor_coverage"}, "seed": 1,
                       "iterations": -5})", "test"),
      doctest::Contains("iterations"), std::runtime_error);
  CHECK_THROWS_WITH_AS(
      parse_config(R"({"environment": {"name": "sensor_coverage"}, "seed": 1,
                       "bogus_key": 1})", "test"),
      doctest::Contains("bogus_key"), std::runtime_error);
  CHECK_THROWS_WITH_AS(
      parse_config(R"({"environment": {"name": "sensor_coverage", "grid": 4}, "seed": 1})",
                   "test"),
      doctest::Contains("grid"), std::runtime_error);
  CHECK_THROWS_WITH_AS(parse_config(R"({"environment": {"name": "sensor_coverage"}})", "test"),
                       doctest::Contains("seed"), std::runtime_error);
}

TEST_CASE("parse errors carry line context") {
  const std::string broken = "{\n  \"environment\": {\"name\": \"sensor_coverage\"},\n  oops\n}";
  CHECK_THROWS_WITH_AS(parse_config(broken, "test"), doctest::Contains("line 3"),
                       std::runtime_error);
}

TEST_CASE("config snapshot round-trips to the identical resolved config") {
  const ExperimentConfig cfg = parse_config(kTinyIdentical, "test");
  const std::string snap = config_to_json(cfg);
  const ExperimentConfig reparsed = parse_config(snap, "snapshot");
  CHECK(config_to_json(reparsed) == snap);
}

TEST_CASE("run_experiment writes a monotone potential for identical-interest games") {
  ExperimentConfig cfg = parse_config(kTinyIdentical, "test");
  cfg.output_dir = tmp_dir("run_potential");
  const RunArtifacts artifacts = run_experiment(cfg);

  const CsvTable t = read_csv(artifacts.convergence_csv);
  CHECK(t.header == std::vector<std::string>{"iteration", "mean_return_per_agent",
                                             "max_theta_delta", "nash_gap",
                                             "potential_estimate"});
  REQUIRE(t.rows.size() > 10);
  const int cp = t.column("potential_estimate");
  const int cg = t.column("nash_gap");
  Real prev = -1e100;
  for (const auto& row : t.rows) {
    REQUIRE(!row[static_cast<std::size_t>(cp)].empty());
    const Real p = std::stod(row[static_cast<std::size_t>(cp)]);
    CHECK(p >= prev - 1e-10);
    prev = p;
    CHECK(!row[static_cast<std::size_t>(cg)].empty());  // oracle-feasible: gap filled
  }
  CHECK(fs::exists(artifacts.config_snapshot));
}

TEST_CASE("run_experiment is byte-identical across reruns") {
  ExperimentConfig cfg = parse_config(kTinyIdentical, "test");
  cfg.iterations = 25;
  cfg.output_dir = tmp_dir("run_det_a");
  const RunArtifacts a = run_experiment(cfg);
  const std::string bytes_a = slurp(a.convergence_csv);
  cfg.output_dir = tmp_dir("run_det_b");
  const RunArtifacts b = run_experiment(cfg);
  CHECK(bytes_a == slurp(b.convergence_csv));
}

TEST_CASE("oracle-infeasible runs leave nash_gap empty and still succeed") {
  ExperimentConfig cfg = parse_config(R"({
    "environment": {"name": "sensor_coverage", "n": 6, "grid_side": 3},
    "kappa": 1,
    "iterations": 3,
    "episodes": 4,
    "horizon": 45,
    "seed": 2
  })", "test");
  cfg.output_dir = tmp_dir("run_infeasible");
  const RunArtifacts artifacts = run_experiment(cfg);
  const CsvTable t = read_csv(artifacts.convergence_csv);
  REQUIRE(t.rows.size() == 3);
  const int cg = t.column("nash_gap");
  for (const auto& row : t.rows) CHECK(row[static_cast<std::size_t>(cg)].empty());
}

TEST_CASE("sweep produces the pinned columns and a zero reference row") {
  ExperimentConfig cfg = parse_config(kTinyIdentical, "test");
  cfg.kappa = {0, 1};
  cfg.kappa_is_list = true;
  cfg.iterations = 40;
  cfg.num_seeds = 2;
  cfg.eval_episodes = 20;
  cfg.output_dir = tmp_dir("sweep_tiny");
  const RunArtifacts artifacts = sweep_kappa(cfg);

  const CsvTable t = read_csv(artifacts.epsilon_vs_kappa_csv);
  CHECK(t.header ==
        std::vector<std::string>{"kappa", "relative_error_pct", "theoretical_bound"});
  REQUIRE(t.rows.size() == 2);
  CHECK(std::stod(t.rows[1][1]) == 0.0);  // kappa_max row
  const Real b0 = std::stod(t.rows[0][2]);
  const Real b1 = std::stod(t.rows[1][2]);
  CHECK(b1 / b0 == doctest::Approx(0.9).epsilon(1e-12));

  const CsvTable ps = read_csv(artifacts.per_seed_csv);
  CHECK(ps.header == std::vector<std::string>{"kappa", "seed", "relative_error_pct"});
  CHECK(ps.rows.size() == 4);
}

TEST_CASE("sweep output is independent of the worker thread count") {
  ExperimentConfig cfg = parse_config(kTinyIdentical, "test");
  cfg.kappa = {0, 1};
  cfg.kappa_is_list = true;
  cfg.iterations = 30;
  cfg.num_seeds = 2;
  cfg.eval_episodes = 10;
  cfg.threads = 1;
  cfg.output_dir = tmp_dir("sweep_t1");
  const RunArtifacts a = sweep_kappa(cfg);
  const std::string bytes = slurp(a.epsilon_vs_kappa_csv);
  cfg.threads = 4;
  cfg.output_dir = tmp_dir("sweep_t4");
  const RunArtifacts b = sweep_kappa(cfg);
  CHECK(bytes == slurp(b.epsilon_vs_kappa_csv));
  CHECK(slurp(a.per_seed_csv) == slurp(b.per_seed_csv));
}

TEST_CASE("verify passes on a 3-agent line random game") {
  ExperimentConfig cfg = parse_config(R"({
    "environment": {
      "name": "random_mpg",
      "n": 3,
      "graph": {"line": 3},
      "state_sizes": 2,
      "action_sizes": 2,
      "model_seed": 0,
      "gamma": 0.9
    },
    "seed": 0,
    "verify_policies": 2,
    "verify_train_iterations": 4000
  })", "test");
  cfg.output_dir = tmp_dir("verify_line3");
  const VerifyResult result = verify(cfg);
  INFO(result.report);
  CHECK(result.all_pass);
  CHECK(fs::exists(result.artifacts.certification_report));
  // one record per lemma family at least
  for (const char* family :
       {"lemma1_decay", "lemma2_truncated_q", "lemma3_gradient_gap", "lemma4_monotonicity",
        "lemma5_fixed_point", "lemma6_epsilon_gap", "theorem_full_info_gap"})
    CHECK(result.report.find(family) != std::string::npos);
}

TEST_CASE("zero-reward models certify trivially") {
  const GameModel model = netmpg::testing::constant_reward_model(0.0);
  const JointOracle oracle(model);
  const JointPolicy policy = JointPolicy::uniform(model, 0);
  const ExactTables t = oracle.evaluate(policy);
  const DecayCertificate c = oracle.certify_decay(t, 0, 0);
  CHECK(c.max_gap == 0.0);
  CHECK(c.pass);
  CHECK(nash_gap(model, policy) == 0.0);
}

TEST_CASE("emit_plots renders markers, bound curve, and skips empty series") {
  const std::string dir = tmp_dir("plots");
  {
    CsvWriter sweep({"kappa", "relative_error_pct", "theoretical_bound"});
    for (int k = 0; k < 4; ++k)
      sweep.add_row({CsvWriter::cell(k), CsvWriter::cell(4.0 - k),
                     CsvWriter::cell(9.0 * std::pow(0.9, k))});
    sweep.write_file(dir + "/epsilon_vs_kappa.csv");
    CsvWriter conv({"iteration", "mean_return_per_agent", "max_theta_delta", "nash_gap",
                    "potential_estimate"});
    for (int i = 0; i < 5; ++i)
      conv.add_row({CsvWriter::cell(i), CsvWriter::cell(1.0 + i), CsvWriter::cell(0.1), "",
                    ""});
    conv.write_file(dir + "/convergence.csv");
  }
  const auto files = emit_plots(dir);
  REQUIRE(files.size() == 2);
  const std::string conv_svg = slurp(dir + "/convergence.svg");
  CHECK(conv_svg.find("nash gap") == std::string::npos);  // empty series omitted
  CHECK(conv_svg.find("mean return per agent") != std::string::npos);
  const std::string sweep_svg = slurp(dir + "/epsilon_vs_kappa.svg");
  CHECK(sweep_svg.find("theoretical bound") != std::string::npos);
  int markers = 0;
  for (std::size_t pos = 0; (pos = sweep_svg.find("<circle", pos)) != std::string::npos;
       ++pos)
    ++markers;
  CHECK(markers == 4);

  // deterministic re-render
  const auto again = emit_plots(dir);
  CHECK(slurp(dir + "/epsilon_vs_kappa.svg") == sweep_svg);

  CHECK_THROWS_AS(emit_plots(tmp_dir("plots_empty")), std::runtime_error);
}
