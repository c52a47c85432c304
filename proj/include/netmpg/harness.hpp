#pragma once

#include <string>
#include <vector>

#include "netmpg/config.hpp"
#include "netmpg/learn.hpp"
#include "netmpg/types.hpp"

namespace netmpg {

struct RunArtifacts {
  std::string convergence_csv;
  std::string epsilon_vs_kappa_csv;
  std::string per_seed_csv;
  std::string certification_report;
  std::string config_snapshot;
};

// Single-kappa training run; writes convergence.csv and the resolved config
// snapshot into cfg.output_dir.
RunArtifacts run_experiment(const ExperimentConfig& cfg);

// One run per (kappa, seed) with paired seeds; writes epsilon_vs_kappa.csv
// (median over seeds), the per-seed table, and the snapshot.
RunArtifacts sweep_kappa(const ExperimentConfig& cfg);

struct VerifyResult {
  bool all_pass = false;
  std::string report;
  RunArtifacts artifacts;
};

// Runs every lemma/theorem certificate on the configured (oracle-feasible)
// instance and writes the key=value certification report.
VerifyResult verify(const ExperimentConfig& cfg);

// Renders SVG plots from the CSV artifacts in a directory; returns the files
// written. Throws if no known CSV is present.
std::vector<std::string> emit_plots(const std::string& artifact_dir);

} // namespace netmpg
