#include "netmpg/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <tuple>

#include "netmpg/csv.hpp"
#include "netmpg/envs.hpp"
#include "netmpg/evaluate.hpp"
#include "netmpg/svgplot.hpp"

namespace netmpg {

namespace fs = std::filesystem;

namespace {

std::string write_snapshot(const ExperimentConfig& cfg) {
  fs::create_directories(cfg.output_dir);
  const std::string path = (fs::path(cfg.output_dir) / "config_snapshot.json").string();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << config_to_json(cfg);
  return path;
}

TrainOptions train_options(const ExperimentConfig& cfg, int kappa, std::uint64_t seed) {
  TrainOptions opts;
  opts.kappa = kappa;
  opts.eta = cfg.eta;
  opts.iterations = cfg.iterations;
  opts.episodes = cfg.episodes;
  opts.horizon = cfg.horizon;
  opts.seed = seed;
  opts.exact_advantages = cfg.exact_advantages;
  opts.oracle_cap = cfg.oracle_cap;
  opts.identical_interest =
      cfg.environment.name == "random_mpg" && cfg.environment.identical_interest;
  return opts;
}

// Terminal mean discounted return averaged over agents and eval episodes.
Real evaluate_return(const GameModel& model, const JointPolicy& policy, int episodes,
                     int horizon, std::uint64_t seed) {
  Real total = 0.0;
  for (int e = 0; e < episodes; ++e) {
    const Trajectory traj = sample_trajectory(
        model, policy, horizon, derive_seed(seed, {0xE7A1ULL, static_cast<std::uint64_t>(e)}));
    Real per_agent = 0.0;
    for (int i = 0; i < model.num_agents(); ++i)
      per_agent += discounted_return(traj.rewards.col(i), model.gamma());
    total += per_agent / model.num_agents();
  }
  return total / episodes;
}

Real median(std::vector<Real> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

} // namespace

RunArtifacts run_experiment(const ExperimentConfig& cfg) {
  if (cfg.kappa_is_list)
    throw std::runtime_error("run_experiment: kappa list given; use the sweep subcommand");
  const GameModel model = build_environment(cfg.environment);
  RunArtifacts artifacts;
  artifacts.config_snapshot = write_snapshot(cfg);

  std::optional<TrainResult> result;
  try {
    result.emplace(train(model, train_options(cfg, cfg.kappa.at(0), cfg.seed)));
  } catch (const std::exception& e) {
    const std::string diag = (fs::path(cfg.output_dir) / "error.txt").string();
    std::ofstream out(diag, std::ios::binary | std::ios::trunc);
    out << e.what() << "\n";
    throw;
  }

  CsvWriter csv({"iteration", "mean_return_per_agent", "max_theta_delta", "nash_gap",
                 "potential_estimate"});
  for (const auto& row : result->record.rows)
    csv.add_row({CsvWriter::cell(row.iteration), CsvWriter::cell(row.mean_return),
                 CsvWriter::cell(row.max_theta_delta), CsvWriter::cell(row.nash_gap),
                 CsvWriter::cell(row.potential)});
  artifacts.convergence_csv = (fs::path(cfg.output_dir) / "convergence.csv").string();
  csv.write_file(artifacts.convergence_csv);
  return artifacts;
}

RunArtifacts sweep_kappa(const ExperimentConfig& cfg) {
  if (!cfg.kappa_is_list || cfg.kappa.size() < 2)
    throw std::runtime_error("sweep_kappa: needs a kappa list with at least 2 entries");
  const GameModel model = build_environment(cfg.environment);
  const int diameter = model.graph().diameter();

  // Clamp to the diameter (the full-information regime) and dedupe.
  std::vector<int> kappas;
  for (int k : cfg.kappa) {
    const int c = std::min(k, diameter);
    if (std::find(kappas.begin(), kappas.end(), c) == kappas.end()) kappas.push_back(c);
  }
  std::sort(kappas.begin(), kappas.end());
  const int kappa_max = kappas.back();

  RunArtifacts artifacts;
  artifacts.config_snapshot = write_snapshot(cfg);

  struct Job {
    int kappa;
    std::uint64_t seed;
    Real J = 0.0;
    std::string error;
  };
  std::vector<Job> jobs;
  for (int k : kappas)
    for (int s = 0; s < cfg.num_seeds; ++s)
      jobs.push_back({k, cfg.seed + static_cast<std::uint64_t>(s), 0.0, {}});

  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    while (true) {
      const std::size_t idx = next.fetch_add(1);
      if (idx >= jobs.size()) return;
      Job& job = jobs[idx];
      try {
        const TrainResult result = train(model, train_options(cfg, job.kappa, job.seed));
        job.J = evaluate_return(model, result.policy, cfg.eval_episodes, cfg.horizon,
                                derive_seed(job.seed, {0xEA11ULL}));
      } catch (const std::exception& e) {
        job.error = e.what();
      }
    }
  };
  const int workers = std::max(1, std::min<int>(cfg.threads, static_cast<int>(jobs.size())));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (const Job& job : jobs)
    if (!job.error.empty())
      throw std::runtime_error("sweep_kappa: run (kappa=" + std::to_string(job.kappa) +
                               ", seed=" + std::to_string(job.seed) + ") failed: " + job.error);

  auto J_of = [&](int kappa, std::uint64_t seed) -> Real {
    for (const Job& job : jobs)
      if (job.kappa == kappa && job.seed == seed) return job.J;
    throw std::logic_error("sweep_kappa: missing job");
  };

  CsvWriter per_seed({"kappa", "seed", "relative_error_pct"});
  CsvWriter summary({"kappa", "relative_error_pct", "theoretical_bound"});
  for (int k : kappas) {
    std::vector<Real> errs;
    for (int s = 0; s < cfg.num_seeds; ++s) {
      const std::uint64_t seed = cfg.seed + static_cast<std::uint64_t>(s);
      const Real ref = J_of(kappa_max, seed);
      const Real err =
          k == kappa_max
              ? 0.0
              : (std::abs(ref) > 0.0 ? 100.0 * std::abs(J_of(k, seed) - ref) / std::abs(ref)
                                     : 0.0);
      errs.push_back(err);
      per_seed.add_row({CsvWriter::cell(k), CsvWriter::cell(static_cast<long long>(seed)),
                        CsvWriter::cell(err)});
    }
    summary.add_row({CsvWriter::cell(k), CsvWriter::cell(median(errs)),
                     CsvWriter::cell(epsilon_for_kappa(model.r_max(), model.gamma(), k))});
  }
  artifacts.epsilon_vs_kappa_csv = (fs::path(cfg.output_dir) / "epsilon_vs_kappa.csv").string();
  summary.write_file(artifacts.epsilon_vs_kappa_csv);
  artifacts.per_seed_csv =
      (fs::path(cfg.output_dir) / "epsilon_vs_kappa_per_seed.csv").string();
  per_seed.write_file(artifacts.per_seed_csv);
  return artifacts;
}

namespace {

struct Report {
  std::ostringstream lines;
  bool all_pass = true;
  std::set<std::string> seen;

  void add(const std::string& record, bool pass, const std::string& fields) {
    seen.insert(record);
    all_pass = all_pass && pass;
    lines << "record=" << record << ' ' << fields << " pass=" << (pass ? "true" : "false")
          << '\n';
  }
};

std::string kv(const std::string& k, Real v) { return k + "=" + format_real(v); }
std::string kv(const std::string& k, int v) { return k + "=" + std::to_string(v); }

} // namespace

VerifyResult verify(const ExperimentConfig& cfg) {
  const GameModel model = build_environment(cfg.environment);
  const JointOracle oracle(model, cfg.oracle_cap);
  const int diameter = model.graph().diameter();
  const int n = model.num_agents();
  const Real gamma = model.gamma();

  Report report;

  // Lemma 1-3: decay, truncated-Q, and gradient-step certificates over random
  // truncated policies at every kappa.
  for (int kappa = 0; kappa <= diameter; ++kappa) {
    for (int p = 0; p < cfg.verify_policies; ++p) {
      const JointPolicy policy = random_joint_policy(
          model, kappa,
          derive_seed(cfg.seed, {0x1E3ULL, static_cast<std::uint64_t>(kappa),
                                 static_cast<std::uint64_t>(p)}));
      const ExactTables tables = oracle.evaluate(policy);
      for (int i = 0; i < n; ++i) {
        const DecayCertificate c1 = oracle.certify_decay(tables, i, kappa);
        report.add("lemma1_decay", c1.pass,
                   kv("agent", i) + ' ' + kv("kappa", kappa) + ' ' + kv("policy", p) + ' ' +
                       kv("max_gap", c1.max_gap) + ' ' + kv("bound", c1.bound));

        const TruncationWeights wv = oracle.visitation_weights(policy, i, kappa);
        const TruncationWeights wu = oracle.uniform_weights(i, kappa);
        const StateWeights swv = oracle.visitation_state_weights(policy, i, kappa);
        const StateWeights swu = oracle.uniform_state_weights(i, kappa);
        for (const auto& [weights, sweights, kind] :
             {std::make_tuple(&wv, &swv, "visitation"), std::make_tuple(&wu, &swu, "uniform")}) {
          const LocalQTable qhat = oracle.truncated_q(tables, *weights);
          TruncationCertificate c2 = oracle.certify_truncation(tables, *weights, qhat);
          c2.weight_kind = kind;
          report.add("lemma2_truncated_q", c2.pass,
                     kv("agent", i) + ' ' + kv("kappa", kappa) + ' ' + kv("policy", p) +
                         " weights=" + kind + ' ' + kv("max_gap", c2.max_deviation) + ' ' +
                         kv("bound", c2.bound));
          const Vector vhat = oracle.truncated_v(tables, *sweights);
          GradientGapCertificate c3 = oracle.certify_gradient_gap(tables, qhat, vhat, *weights);
          c3.weight_kind = kind;
          report.add("lemma3_gradient_gap", c3.pass,
                     kv("agent", i) + ' ' + kv("kappa", kappa) + ' ' + kv("policy", p) +
                         " weights=" + kind + ' ' + kv("max_gap", c3.max_step_gap) + ' ' +
                         kv("bound", c3.step_bound_proof) + ' ' +
                         kv("statement_bound", c3.step_bound_statement));
        }
      }
    }
  }

  // Lemma 4-6 and the theorem need a potential; use the configured game when it
  // is identical-interest, otherwise a derived identical-interest twin on the
  // same graph and sizes.
  const bool own_model_identical =
      cfg.environment.name == "random_mpg" && cfg.environment.identical_interest;
  GameModel potential_model = [&]() {
    if (own_model_identical) return model;
    RandomMpgSpec twin;
    twin.graph = model.graph();
    twin.state_sizes = model.state_sizes();
    twin.action_sizes = model.action_sizes();
    twin.seed = derive_seed(cfg.seed, {0x741ULL});
    twin.identical_interest = true;
    twin.gamma = gamma;
    return random_networked_mpg(twin);
  }();
  const JointOracle potential_oracle(potential_model, cfg.oracle_cap);
  const std::string twin_note = own_model_identical ? "configured" : "identical_interest_twin";

  // Lemma 4: potential monotonicity under exact advantages (per state).
  {
    std::vector<Matrix> value_history;
    TrainOptions opts;
    opts.kappa = diameter;
    opts.eta = cfg.eta;
    opts.iterations = 200;
    opts.seed = cfg.seed;
    opts.exact_advantages = true;
    opts.oracle_cap = cfg.oracle_cap;
    opts.identical_interest = true;
    opts.gap_tracking = TrainOptions::GapTracking::Off;
    opts.observer = [&](int, const JointPolicy&, const ExactTables* tables) {
      if (tables != nullptr) value_history.push_back(tables->V);
    };
    train(potential_model, opts);
    Real min_delta = 0.0;
    for (std::size_t t = 1; t < value_history.size(); ++t)
      min_delta =
          std::min(min_delta, (value_history[t].col(0) - value_history[t - 1].col(0)).minCoeff());
    report.add("lemma4_monotonicity", min_delta >= -1e-10,
               std::string("model=") + twin_note + ' ' + kv("iterations", 200) + ' ' +
                   kv("min_per_state_delta", min_delta));
  }

  // Lemma 5 (fixed-point reach) and Lemma 6 / theorem (terminal gap vs epsilon).
  for (int kappa = 0; kappa <= diameter; ++kappa) {
    TrainOptions opts;
    opts.kappa = kappa;
    opts.eta = cfg.eta;
    opts.iterations = cfg.verify_train_iterations;
    opts.seed = cfg.seed;
    opts.exact_advantages = true;
    opts.oracle_cap = cfg.oracle_cap;
    opts.identical_interest = true;
    opts.gap_tracking = TrainOptions::GapTracking::Off;
    const TrainResult result = train(potential_model, opts);
    const Real gap = potential_oracle.nash_gap(result.policy);
    const Real eps = epsilon_for_kappa(potential_model.r_max(), gamma, kappa);

    report.add("lemma5_fixed_point", result.record.converged,
               std::string("model=") + twin_note + ' ' + kv("kappa", kappa) +
                   " stop_reason=" + result.record.stop_reason);
    report.add("lemma6_epsilon_gap", gap <= eps + 1e-3,
               std::string("model=") + twin_note + ' ' + kv("kappa", kappa) + ' ' +
                   kv("nash_gap", gap) + ' ' + kv("epsilon", eps));
    if (kappa == diameter)
      report.add("theorem_full_info_gap", gap <= 1e-3,
                 std::string("model=") + twin_note + ' ' + kv("kappa", kappa) + ' ' +
                     kv("nash_gap", gap) + ' ' + kv("bound", 1e-3));
  }

  // Coverage: every certificate family must have run.
  for (const char* required :
       {"lemma1_decay", "lemma2_truncated_q", "lemma3_gradient_gap", "lemma4_monotonicity",
        "lemma5_fixed_point", "lemma6_epsilon_gap", "theorem_full_info_gap"})
    if (!report.seen.contains(required))
      throw std::logic_error(std::string("verify: certificate family never ran: ") + required);

  VerifyResult result;
  result.all_pass = report.all_pass;
  result.report = report.lines.str();
  fs::create_directories(cfg.output_dir);
  result.artifacts.config_snapshot = write_snapshot(cfg);
  result.artifacts.certification_report =
      (fs::path(cfg.output_dir) / "certification.txt").string();
  std::ofstream out(result.artifacts.certification_report, std::ios::binary | std::ios::trunc);
  out << result.report;
  return result;
}

std::vector<std::string> emit_plots(const std::string& artifact_dir) {
  std::vector<std::string> written;
  const fs::path dir(artifact_dir);
  const fs::path conv = dir / "convergence.csv";
  const fs::path sweep = dir / "epsilon_vs_kappa.csv";
  if (!fs::exists(conv) && !fs::exists(sweep))
    throw std::runtime_error("emit_plots: no convergence.csv or epsilon_vs_kappa.csv in " +
                             artifact_dir);

  if (fs::exists(conv)) {
    const CsvTable t = read_csv(conv.string());
    const int ci = t.column("iteration");
    const int cr = t.column("mean_return_per_agent");
    const int cg = t.column("nash_gap");
    const int cp = t.column("potential_estimate");
    if (ci < 0 || cr < 0)
      throw std::runtime_error("emit_plots: convergence.csv missing required columns");
    std::vector<Real> it, ret, gap_x, gap_y, pot_x, pot_y;
    for (const auto& row : t.rows) {
      const Real x = std::stod(row.at(static_cast<std::size_t>(ci)));
      it.push_back(x);
      ret.push_back(std::stod(row.at(static_cast<std::size_t>(cr))));
      if (cg >= 0 && !row.at(static_cast<std::size_t>(cg)).empty()) {
        gap_x.push_back(x);
        gap_y.push_back(std::stod(row.at(static_cast<std::size_t>(cg))));
      }
      if (cp >= 0 && !row.at(static_cast<std::size_t>(cp)).empty()) {
        pot_x.push_back(x);
        pot_y.push_back(std::stod(row.at(static_cast<std::size_t>(cp))));
      }
    }
    SvgPlot plot("Training convergence", "iteration", "value");
    plot.add_line(it, ret, "mean return per agent", "#1f77b4");
    if (!pot_x.empty()) plot.add_line(pot_x, pot_y, "potential estimate", "#2ca02c");
    if (!gap_x.empty()) plot.add_line(gap_x, gap_y, "nash gap", "#d62728");
    const std::string path = (dir / "convergence.svg").string();
    plot.write_file(path);
    written.push_back(path);
  }

  if (fs::exists(sweep)) {
    const CsvTable t = read_csv(sweep.string());
    const int ck = t.column("kappa");
    const int ce = t.column("relative_error_pct");
    const int cb = t.column("theoretical_bound");
    if (ck < 0 || ce < 0 || cb < 0)
      throw std::runtime_error("emit_plots: epsilon_vs_kappa.csv missing required columns");
    std::vector<Real> k, err, bound;
    for (const auto& row : t.rows) {
      k.push_back(std::stod(row.at(static_cast<std::size_t>(ck))));
      err.push_back(std::stod(row.at(static_cast<std::size_t>(ce))));
      bound.push_back(std::stod(row.at(static_cast<std::size_t>(cb))));
    }
    SvgPlot plot("Relative error vs truncation radius", "kappa", "value");
    plot.add_markers(k, err, "relative error (%)", "#1f77b4");
    plot.add_line(k, bound, "theoretical bound", "#d62728");
    const std::string path = (dir / "epsilon_vs_kappa.svg").string();
    plot.write_file(path);
    written.push_back(path);
  }
  return written;
}

} // namespace netmpg
