#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "bipedest/config_file.hpp"
#include "bipedest/experiment.hpp"
#include "bipedest/observability.hpp"

namespace bipedest {

struct SimulateSummary {
  std::filesystem::path csv;
  std::string hash;
  std::size_t rows = 0;
  double duration = 0.0;
  int steps = 0;
  std::size_t touchdowns = 0;
  std::size_t liftoffs = 0;
  double double_support_fraction = 0.0;  ///< of samples, standing included
  double single_support_fraction = 0.0;
};

/// Generates the gait dataset described by cfg and writes
/// <output_dir>/<name>.csv plus its sidecar.
SimulateSummary cmd_simulate(const ExperimentConfig& cfg, std::ostream& out,
                             const std::string& name = "dataset");

struct RunSummary {
  std::filesystem::path trace;
  std::string dataset_hash;
  ErrorReport report;
  HealthSummary health;
  double seconds = 0.0;
  bool ok = false;  ///< no covariance health violation
};

/// Runs one filter over cfg.dataset, or over a freshly simulated dataset
/// written to the output directory when no dataset is given. Writes
/// trace_<label>.csv/.json and report_<label>.txt/.csv.
RunSummary cmd_run(const ExperimentConfig& cfg, std::ostream& out, const std::string& label);

struct ObservabilitySummary {
  std::vector<RankReport> reports;
  int matched = 0;
  double seconds = 0.0;
  bool all_pass = false;
};

/// Runs the scenario suite and prints one line per table row. Optionally
/// writes the table as CSV.
ObservabilitySummary cmd_observability(const ObservabilityOptions& options, std::ostream& out,
                                       const std::optional<std::filesystem::path>& csv = {});

/// Merges traces of one dataset into out_csv and prints the per-phase summary.
MergedReport cmd_report(const std::vector<std::filesystem::path>& traces,
                        const std::filesystem::path& out_csv, std::ostream& out);

}  // namespace bipedest
