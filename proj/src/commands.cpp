#include "bipedest/commands.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "bipedest/dataset_io.hpp"

namespace bipedest {

namespace {

using nlohmann::json;

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw std::runtime_error("cannot write " + path.string());
  }
  out << text;
}

void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    throw std::runtime_error("cannot create " + dir.string() + ": " + ec.message());
  }
}

json filter_json(const RunOptions& o) {
  const FilterConfig& f = o.filter;
  return {{"model", std::string(to_string(f.model))},
          {"noise", to_json(f.noise)},
          {"inflation", f.inflation},
          {"measurement_noise",
           f.meas_noise_mode == MeasurementNoiseMode::Discrete ? "discrete" : "continuous"},
          {"discretization",
           f.discretization == Discretization::FirstOrder ? "first_order" : "van_loan"},
          {"touchdown",
           f.touchdown == TouchdownCovariance::Correlated ? "correlated" : "decoupled"},
          {"gate_probability",
           f.update.gate_probability ? json(*f.update.gate_probability) : json(nullptr)},
          {"init_window", o.init_window},
          {"init_sigma",
           {{"r", o.init.r}, {"v", o.init.v}, {"phi", o.init.phi}, {"b_f", o.init.b_f},
            {"b_w", o.init.b_w}}},
          {"truth_init", o.truth_init},
          {"drop_updates", o.drop_updates}};
}

}  // namespace

SimulateSummary cmd_simulate(const ExperimentConfig& cfg, std::ostream& out,
                             const std::string& name) {
  ensure_dir(cfg.output_dir);
  const Dataset d = simulate(cfg.gait, cfg.sim_noise, cfg.seed);

  SimulateSummary s;
  s.csv = cfg.output_dir / (name + ".csv");
  s.hash = write_dataset(d, s.csv);
  s.rows = d.size();
  s.duration = static_cast<double>(d.size()) * d.dt;
  s.steps = cfg.gait.n_steps;
  std::size_t dbl = 0;
  std::size_t sgl = 0;
  for (const TruthSample& t : d.truth) {
    const int c = t.n_contacts();
    dbl += c >= 2 ? 1 : 0;
    sgl += c == 1 ? 1 : 0;
  }
  for (const ContactEvent& e : d.sensors.events) {
    (e.kind == ContactKind::Touchdown ? s.touchdowns : s.liftoffs) += 1;
  }
  s.double_support_fraction = static_cast<double>(dbl) / static_cast<double>(s.rows);
  s.single_support_fraction = static_cast<double>(sgl) / static_cast<double>(s.rows);

  char line[200];
  std::snprintf(line, sizeof line,
                "wrote %s\n  rows %zu, duration %.3f s, dt %g s, steps %d, seed %llu\n"
                "  touchdowns %zu, liftoffs %zu, double support %.1f%%, single support %.1f%%\n"
                "  fnv1a %s\n",
                s.csv.string().c_str(), s.rows, s.duration, d.dt, s.steps,
                static_cast<unsigned long long>(cfg.seed), s.touchdowns, s.liftoffs,
                100.0 * s.double_support_fraction, 100.0 * s.single_support_fraction,
                s.hash.c_str());
  out << line;
  return s;
}

RunSummary cmd_run(const ExperimentConfig& cfg, std::ostream& out, const std::string& label) {
  ensure_dir(cfg.output_dir);
  RunSummary s;
  Dataset d;
  std::filesystem::path dataset_path;
  if (cfg.dataset) {
    dataset_path = *cfg.dataset;
    d = read_dataset(dataset_path);
    s.dataset_hash = file_hash(dataset_path);
  } else {
    d = simulate(cfg.gait, cfg.sim_noise, cfg.seed);
    dataset_path = cfg.output_dir / "dataset.csv";
    s.dataset_hash = write_dataset(d, dataset_path);
    out << "simulated " << d.size() << " samples into " << dataset_path.string() << "\n";
  }

  RunOptions opt = cfg.run;
  opt.abort_on_unhealthy = true;
  const RunResult run = run_filter(d, opt);
  s.report = compute_errors(d, run);
  s.health = run.health;
  s.seconds = run.seconds;
  s.ok = run.health.violations == 0;

  json meta;
  meta["label"] = label;
  meta["dataset"] = dataset_path.string();
  meta["dataset_hash"] = s.dataset_hash;
  meta["filter_model"] = std::string(to_string(opt.filter.model));
  meta["filter"] = filter_json(opt);
  meta["runtime_s"] = run.seconds;
  meta["touchdowns"] = run.touchdowns;
  meta["liftoffs"] = run.liftoffs;
  meta["rejected_updates"] = run.rejected_updates;
  meta["stationary_init"] = run.stationary_init;

  s.trace = cfg.output_dir / ("trace_" + label + ".csv");
  write_trace(s.trace, d, run, meta);
  const std::string title = "error report: " + label + " (" +
                            std::string(to_string(opt.filter.model)) + " foot, " +
                            std::to_string(d.size()) + " samples)";
  const std::string text = format_report(s.report, title);
  write_text(cfg.output_dir / ("report_" + label + ".txt"), text);
  write_text(cfg.output_dir / ("report_" + label + ".csv"), report_csv(s.report));

  out << text;
  char line[200];
  std::snprintf(line, sizeof line,
                "runtime %.2f s, touchdowns %d, liftoffs %d, rejected updates %d\n"
                "covariance: max asymmetry %.3e, min eigenvalue %.3e over %zu samples\n",
                run.seconds, run.touchdowns, run.liftoffs, run.rejected_updates,
                run.health.max_asymmetry, run.health.min_eigenvalue, run.health.checked);
  out << line;
  if (!run.stationary_init) {
    out << "warning: the alignment window is not stationary\n";
  }
  out << "trace written to " << s.trace.string() << "\n";
  return s;
}

ObservabilitySummary cmd_observability(const ObservabilityOptions& options, std::ostream& out,
                                       const std::optional<std::filesystem::path>& csv) {
  const auto start = std::chrono::steady_clock::now();
  ObservabilitySummary s;
  const std::vector<ScenarioSpec> suite = scenario_suite();
  char line[256];
  std::snprintf(line, sizeof line, "%-5s %-46s %4s %4s %4s %10s %10s %s\n", "table", "scenario",
                "dim", "exp", "got", "threshold", "residual", "result");
  out << line;
  std::string table = "table,scenario,condition,dim,rank,expected_rank_loss,rank_loss,"
                      "threshold,max_null_residual,ambiguous,pass\n";
  for (const ScenarioSpec& spec : suite) {
    RankReport r = analyze(spec, options);
    s.matched += r.pass ? 1 : 0;
    std::snprintf(line, sizeof line, "%-5s %-46s %4d %4d %4d %10.2e %10.2e %s%s\n",
                  spec.table.c_str(), spec.name.c_str(), r.dim, r.expected_rank_loss,
                  r.rank_loss, r.threshold, r.max_null_residual, r.pass ? "PASS" : "FAIL",
                  r.ambiguous ? " (ambiguous rank)" : "");
    out << line;
    table += spec.table + "," + spec.name + ",\"" + spec.condition + "\"," +
             std::to_string(r.dim) + "," + std::to_string(r.rank) + "," +
             std::to_string(r.expected_rank_loss) + "," + std::to_string(r.rank_loss) + "," +
             format_double(r.threshold) + "," + format_double(r.max_null_residual) + "," +
             (r.ambiguous ? "1" : "0") + "," + (r.pass ? "1" : "0") + "\n";
    s.reports.push_back(std::move(r));
  }
  s.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  s.all_pass = s.matched == static_cast<int>(suite.size());
  std::snprintf(line, sizeof line, "%d/%zu rows matched in %.2f s\n", s.matched, suite.size(),
                s.seconds);
  out << line;
  if (csv) {
    write_text(*csv, table);
  }
  return s;
}

MergedReport cmd_report(const std::vector<std::filesystem::path>& traces,
                        const std::filesystem::path& out_csv, std::ostream& out) {
  if (traces.empty()) {
    throw std::invalid_argument("report: at least one trace is required");
  }
  std::vector<TraceFile> files;
  files.reserve(traces.size());
  for (const auto& p : traces) {
    files.push_back(read_trace(p));
  }
  MergedReport m = merge_traces(files);
  write_text(out_csv, m.csv);
  out << m.summary << "merged " << m.rows << " rows into " << out_csv.string() << "\n";
  return m;
}

}  // namespace bipedest
