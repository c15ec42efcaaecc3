#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bipedest/commands.hpp"

namespace {

// 0: every check passed, 1: a check failed, 2: usage, input or I/O error.
constexpr int kExitOk = 0;
constexpr int kExitCheck = 1;
constexpr int kExitError = 2;

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::vector<std::string> sets;
  bool quick = false;
};

void add_common(CLI::App* app, CommonFlags& f) {
  app->add_option("-c,--config", f.config, "key = value configuration file")
      ->check(CLI::ExistingFile);
  app->add_option("-s,--seed", f.seed, "noise seed");
  app->add_option("-o,--out", f.out, "output directory");
  app->add_option("--set", f.sets, "override one key, e.g. --set gait.n_steps=20")
      ->allow_extra_args(false);
  app->add_flag("--quick", f.quick, "8-step walk (10 s) instead of the 120 s default");
}

bipedest::ExperimentConfig build_config(const CommonFlags& f) {
  bipedest::ExperimentConfig cfg;
  if (f.quick) {
    cfg.gait = bipedest::GaitConfig::quick();
  }
  if (!f.config.empty()) {
    cfg = bipedest::load_config(f.config, cfg);
  }
  for (const std::string& kv : f.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("--set expects key=value, got '" + kv + "'");
    }
    bipedest::apply_config_key(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (f.seed) {
    cfg.seed = *f.seed;
  }
  if (!f.out.empty()) {
    cfg.output_dir = f.out;
  }
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Biped base state estimation: simulation, filtering and observability"};
  app.require_subcommand(0, 1);
  bool list_keys = false;
  app.add_flag("--list-keys", list_keys, "print the configuration keys and exit");

  CommonFlags sim_flags;
  std::string sim_name = "dataset";
  CLI::App* sim = app.add_subcommand("simulate", "generate a walking dataset");
  add_common(sim, sim_flags);
  sim->add_option("--name", sim_name, "file stem of the dataset");

  CommonFlags run_flags;
  std::string model;
  std::string dataset;
  std::string label;
  bool truth_init = false;
  bool drop_updates = false;
  CLI::App* run = app.add_subcommand("run", "run one filter over a dataset");
  add_common(run, run_flags);
  run->add_option("-m,--model", model, "foot model")->check(CLI::IsMember({"point", "flat"}));
  run->add_option("-d,--dataset", dataset, "dataset CSV; simulated when omitted")
      ->check(CLI::ExistingFile);
  run->add_option("-l,--label", label, "trace label, defaults to the model name");
  run->add_flag("--truth-init", truth_init, "start from the true state");
  run->add_flag("--drop-updates", drop_updates, "prediction only");

  std::string construction = "trajectory";
  std::string obs_csv;
  CLI::App* obs = app.add_subcommand("observability", "rank-deficiency table of the scenario suite");
  obs->add_option("--construction", construction, "observability matrix construction")
      ->check(CLI::IsMember({"trajectory", "frozen"}));
  obs->add_option("--csv", obs_csv, "also write the table as CSV");

  std::vector<std::string> traces;
  std::string report_out = "report.csv";
  CLI::App* rep = app.add_subcommand("report", "merge traces of one dataset");
  rep->add_option("traces", traces, "trace CSV files")->required()->check(CLI::ExistingFile);
  rep->add_option("-o,--out", report_out, "merged CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitError;
  }

  if (list_keys) {
    std::cout << bipedest::config_keys_help();
    return kExitOk;
  }

  try {
    if (*sim) {
      const bipedest::ExperimentConfig cfg = build_config(sim_flags);
      bipedest::cmd_simulate(cfg, std::cout, sim_name);
      return kExitOk;
    }
    if (*run) {
      bipedest::ExperimentConfig cfg = build_config(run_flags);
      if (!model.empty()) {
        cfg.run.filter.model = bipedest::parse_foot_model(model);
      }
      if (!dataset.empty()) {
        cfg.dataset = dataset;
      }
      cfg.run.truth_init = cfg.run.truth_init || truth_init;
      cfg.run.drop_updates = cfg.run.drop_updates || drop_updates;
      if (label.empty()) {
        label = std::string(bipedest::to_string(cfg.run.filter.model));
      }
      try {
        const bipedest::RunSummary s = bipedest::cmd_run(cfg, std::cout, label);
        return s.ok ? kExitOk : kExitCheck;
      } catch (const std::runtime_error& e) {
        std::cerr << "run aborted: " << e.what() << "\n";
        return kExitCheck;
      }
    }
    if (*obs) {
      bipedest::ObservabilityOptions o;
      if (construction == "frozen") {
        o.construction = bipedest::ObservabilityConstruction::Frozen;
      }
      std::optional<std::filesystem::path> csv;
      if (!obs_csv.empty()) {
        csv = obs_csv;
      }
      const bipedest::ObservabilitySummary s = bipedest::cmd_observability(o, std::cout, csv);
      return s.all_pass ? kExitOk : kExitCheck;
    }
    if (*rep) {
      std::vector<std::filesystem::path> paths(traces.begin(), traces.end());
      bipedest::cmd_report(paths, report_out, std::cout);
      return kExitOk;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  std::cout << app.help();
  return kExitError;
}
