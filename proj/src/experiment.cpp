#include "bipedest/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "bipedest/so3.hpp"

namespace bipedest {

namespace {

using nlohmann::json;

const char* phase_name(int contacts) {
  switch (contacts) {
    case 0:
      return "flight";
    case 1:
      return "single";
    default:
      return "double";
  }
}

TraceRecord make_record(double t, int contacts, const FilterState& x, const Eigen::MatrixXd& P,
                        const ErrorLayout& L) {
  TraceRecord rec;
  rec.t = t;
  rec.contacts = contacts;
  rec.r = x.r;
  rec.v = x.v;
  rec.q = x.q;
  rec.b_f = x.b_f;
  rec.b_w = x.b_w;
  rec.sigma_r = P.block<3, 3>(L.r(), L.r()).diagonal().cwiseMax(0.0).cwiseSqrt();
  rec.sigma_v = P.block<3, 3>(L.v(), L.v()).diagonal().cwiseMax(0.0).cwiseSqrt();
  const Eigen::Matrix3d C = x.q.rotation_matrix();
  const Eigen::Matrix3d Ct = C.transpose();
  // d(C v) = C dv + (C v)^x dphi
  Eigen::Matrix<double, 3, 6> J;
  J << C, skew(C * x.v);
  Eigen::Matrix<double, 6, 6> Pvp;
  Pvp << P.block<3, 3>(L.v(), L.v()), P.block<3, 3>(L.v(), L.phi()),
      P.block<3, 3>(L.phi(), L.v()), P.block<3, 3>(L.phi(), L.phi());
  rec.sigma_v_body = (J * Pvp * J.transpose()).diagonal().cwiseMax(0.0).cwiseSqrt();
  const Eigen::Matrix3d Pw = Ct * P.block<3, 3>(L.phi(), L.phi()) * Ct.transpose();
  rec.sigma_att = Pw.diagonal().cwiseMax(0.0).cwiseSqrt();
  rec.sigma_b_w = P.block<3, 3>(L.b_w(), L.b_w()).diagonal().cwiseMax(0.0).cwiseSqrt();
  return rec;
}

FilterState truth_state(const Dataset& data) {
  const TruthSample& ts = data.truth.front();
  FilterState x;
  x.r = ts.r;
  x.v = ts.v;
  x.q = ts.q;
  x.feet = ts.feet;
  x.b_f = data.sensors.b_f.front();
  x.b_w = data.sensors.b_w.front();
  return x;
}

// World-frame attitude error of the estimate: C_hat^T log(q_true ⊗ q_hat^-1).
Eigen::Vector3d attitude_error_world(const Quaternion& truth, const Quaternion& est) {
  return est.rotation_matrix().transpose() * quat_log(truth * est.inverse());
}

void accumulate(ErrorStats& s, double e) {
  s.rms += e * e;
  s.max = std::max(s.max, std::abs(e));
  ++s.n;
}

void finish(ErrorRow& row) {
  for (ErrorStats& s : row) {
    s.rms = s.n > 0 ? std::sqrt(s.rms / static_cast<double>(s.n)) : 0.0;
  }
}

std::string trace_label(const TraceFile& t, std::size_t i) {
  if (t.meta.contains("label") && t.meta["label"].is_string()) {
    return t.meta["label"].get<std::string>();
  }
  return "trace" + std::to_string(i);
}

}  // namespace

std::vector<FilterState> integrate_open_loop(const FilterState& x0,
                                             const std::vector<ImuSample>& imu, double dt,
                                             const Eigen::Vector3d& gravity) {
  std::vector<FilterState> out;
  out.reserve(imu.size());
  FilterState x = x0;
  for (std::size_t k = 0; k < imu.size(); ++k) {
    out.push_back(x);
    if (k + 1 < imu.size()) {
      x = propagate_state(x, imu[k], dt, gravity);
    }
  }
  return out;
}

RunResult run_filter(const Dataset& data, const RunOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  if (data.size() == 0) {
    throw std::invalid_argument("run_filter: empty dataset");
  }
  FilterConfig fc = options.filter;
  fc.n_feet = data.n_feet;
  fc.dt = data.dt;

  RunResult res;
  const InitialEstimate init =
      initialize_filter(data, options.init_window, fc, options.init, options.stationary_accel_std);
  res.stationary_init = init.stationary;
  FilterState x0 = options.truth_init ? truth_state(data) : init.x;
  res.initial = x0;

  BipedFilter filter(fc, x0, init.P);
  const ErrorLayout& L = filter.layout();
  const std::size_t n = data.size();
  res.trace.reserve(n);

  std::vector<bool> previous = data.truth.front().contacts();
  std::vector<KinMeasurement> batch;
  for (std::size_t k = 0; k < n; ++k) {
    const TruthSample& ts = data.truth[k];
    const std::vector<bool> current = ts.contacts();
    const std::vector<KinMeasurement>& kin = data.sensors.kin[k];
    std::vector<bool> just_reset(current.size(), false);

    if (k > 0) {
      for (const ContactEvent& e : detect_contact_events(previous, current, ts.t)) {
        if (e.kind == ContactKind::Liftoff) {
          res.liftoffs += filter.on_liftoff(e.foot) ? 1 : 0;
        } else if (!options.drop_updates) {
          if (filter.on_touchdown(e.foot, kin[e.foot])) {
            ++res.touchdowns;
            just_reset[e.foot] = true;
          }
        }
      }
    }

    if (!options.drop_updates) {
      batch.clear();
      for (std::size_t i = 0; i < current.size(); ++i) {
        if (current[i] && !just_reset[i]) {
          batch.push_back(kin[i]);
        }
      }
      if (!batch.empty() && !filter.update(batch).accepted) {
        ++res.rejected_updates;
      }
    }

    const FilterState& x = filter.state();
    const Eigen::MatrixXd& P = filter.covariance();
    if (!x.r.allFinite() || !x.v.allFinite() || !x.q.coeffs().allFinite()) {
      throw std::runtime_error("run_filter: non-finite state at sample " + std::to_string(k) +
                               " (t = " + std::to_string(ts.t) + ")");
    }
    if (options.check_health) {
      const CovarianceHealth h = covariance_health(P);
      ++res.health.checked;
      res.health.max_asymmetry = std::max(res.health.max_asymmetry, h.asymmetry);
      res.health.min_eigenvalue = std::min(res.health.min_eigenvalue, h.min_eigenvalue);
      if (!h.ok()) {
        ++res.health.violations;
        if (res.health.first_violation < 0) {
          res.health.first_violation = static_cast<long>(k);
        }
        if (options.abort_on_unhealthy) {
          std::ostringstream msg;
          msg << "run_filter: unhealthy covariance at sample " << k << " (t = " << ts.t
              << "): asymmetry " << h.asymmetry << ", min eigenvalue " << h.min_eigenvalue
              << ", finite " << h.finite << "\ndiag(P) = " << P.diagonal().transpose();
          throw std::runtime_error(msg.str());
        }
      }
    }
    res.trace.push_back(make_record(ts.t, ts.n_contacts(), x, P, L));

    if (k + 1 < n) {
      try {
        filter.predict(data.sensors.imu[k], data.dt);
      } catch (const std::invalid_argument& e) {
        throw std::runtime_error("run_filter: prediction failed at sample " + std::to_string(k) +
                                 " (t = " + std::to_string(ts.t) + "): " + e.what());
      }
    }
    previous = current;
  }
  res.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return res;
}

std::vector<std::array<double, 9>> error_series(const Dataset& data, const RunResult& run) {
  if (run.trace.size() != data.size()) {
    throw std::invalid_argument("error_series: trace and dataset differ in length");
  }
  std::vector<std::array<double, 9>> out(data.size());
  double yaw0 = 0.0;
  for (std::size_t k = 0; k < data.size(); ++k) {
    const TruthSample& ts = data.truth[k];
    const TraceRecord& rec = run.trace[k];
    const Eigen::Vector3d de = euler_zyx(rec.q) - euler_zyx(ts.q);
    const double yaw = wrap_angle(de.z());
    if (k == 0) {
      yaw0 = yaw;
    }
    auto& e = out[k];
    for (int i = 0; i < 3; ++i) {
      e[i] = rec.r[i] - ts.r[i];
      e[3 + i] = rec.v[i] - ts.v[i];
    }
    e[6] = wrap_angle(de.x());
    e[7] = wrap_angle(de.y());
    e[8] = wrap_angle(yaw - yaw0);
  }
  return out;
}

ErrorReport compute_errors(const Dataset& data, const RunResult& run) {
  const auto series = error_series(data, run);
  ErrorReport rep;
  std::array<std::size_t, 5> covered{};
  for (std::size_t k = 0; k < series.size(); ++k) {
    const TraceRecord& rec = run.trace[k];
    ErrorRow& phase = rep.by_phase[phase_name(rec.contacts)];
    for (std::size_t i = 0; i < 9; ++i) {
      accumulate(rep.all[i], series[k][i]);
      accumulate(phase[i], series[k][i]);
    }
    const TruthSample& ts = data.truth[k];
    const Eigen::Vector3d ev = ts.q.rotation_matrix() * ts.v - rec.q.rotation_matrix() * rec.v;
    const Eigen::Vector3d ea = attitude_error_world(ts.q, rec.q);
    for (int i = 0; i < 3; ++i) {
      covered[i] += std::abs(ev[i]) <= 3.0 * rec.sigma_v_body[i] ? 1 : 0;
    }
    for (int i = 0; i < 2; ++i) {
      covered[3 + i] += std::abs(ea[i]) <= 3.0 * rec.sigma_att[i] ? 1 : 0;
    }
  }
  finish(rep.all);
  for (auto& [name, row] : rep.by_phase) {
    finish(row);
  }
  for (std::size_t i = 0; i < covered.size(); ++i) {
    rep.coverage[i] = series.empty() ? 0.0
                                     : static_cast<double>(covered[i]) /
                                           static_cast<double>(series.size());
  }
  if (!series.empty()) {
    rep.yaw_offset = wrap_angle(euler_zyx(run.trace[0].q).z() - euler_zyx(data.truth[0].q).z());
  }
  return rep;
}

std::string format_report(const ErrorReport& report, const std::string& title) {
  std::ostringstream os;
  char line[160];
  os << title << "\n";
  std::snprintf(line, sizeof line, "%-8s %12s %12s", "", "RMS", "max");
  os << line;
  for (const auto& [name, row] : report.by_phase) {
    std::snprintf(line, sizeof line, " %12s", (name + " RMS").c_str());
    os << line;
  }
  os << "\n";
  for (std::size_t i = 0; i < kErrorQuantities.size(); ++i) {
    std::snprintf(line, sizeof line, "%-8s %12.4e %12.4e", kErrorQuantities[i],
                  report.all[i].rms, report.all[i].max);
    os << line;
    for (const auto& [name, row] : report.by_phase) {
      std::snprintf(line, sizeof line, " %12.4e", row[i].rms);
      os << line;
    }
    os << "\n";
  }
  os << "3-sigma coverage:";
  for (std::size_t i = 0; i < kCoverageQuantities.size(); ++i) {
    std::snprintf(line, sizeof line, " %s %.4f", kCoverageQuantities[i], report.coverage[i]);
    os << line;
  }
  os << "\n";
  return os.str();
}

std::string report_csv(const ErrorReport& report) {
  std::ostringstream os;
  os << "phase,quantity,rms,max,samples\n";
  auto emit = [&os](const std::string& phase, const ErrorRow& row) {
    for (std::size_t i = 0; i < kErrorQuantities.size(); ++i) {
      os << phase << ',' << kErrorQuantities[i] << ',' << format_double(row[i].rms) << ','
         << format_double(row[i].max) << ',' << row[i].n << '\n';
    }
  };
  emit("all", report.all);
  for (const auto& [name, row] : report.by_phase) {
    emit(name, row);
  }
  return os.str();
}

void write_trace(const std::filesystem::path& csv, const Dataset& data, const RunResult& run,
                 const json& meta) {
  const auto series = error_series(data, run);
  std::ofstream out(csv, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw std::runtime_error("cannot write " + csv.string());
  }
  out << "t,contacts";
  for (const char* pre : {"est_", "true_", "err_"}) {
    for (const char* q : kErrorQuantities) {
      out << ',' << pre << q;
    }
  }
  out << ",sigma_r_x,sigma_r_y,sigma_r_z,sigma_v_x,sigma_v_y,sigma_v_z"
         ",sigma_att_x,sigma_att_y,sigma_att_z"
         ",est_b_w_x,est_b_w_y,est_b_w_z,true_b_w_x,true_b_w_y,true_b_w_z"
         ",sigma_b_w_x,sigma_b_w_y,sigma_b_w_z\n";

  std::string row;
  auto put = [&row](double x) {
    row.push_back(',');
    row += format_double(x);
  };
  for (std::size_t k = 0; k < series.size(); ++k) {
    const TraceRecord& rec = run.trace[k];
    const TruthSample& ts = data.truth[k];
    row = format_double(rec.t);
    put(rec.contacts);
    const Eigen::Vector3d ee = euler_zyx(rec.q);
    const Eigen::Vector3d te = euler_zyx(ts.q);
    for (int i = 0; i < 3; ++i) put(rec.r[i]);
    for (int i = 0; i < 3; ++i) put(rec.v[i]);
    for (int i = 0; i < 3; ++i) put(ee[i]);
    for (int i = 0; i < 3; ++i) put(ts.r[i]);
    for (int i = 0; i < 3; ++i) put(ts.v[i]);
    for (int i = 0; i < 3; ++i) put(te[i]);
    for (double e : series[k]) put(e);
    for (int i = 0; i < 3; ++i) put(rec.sigma_r[i]);
    for (int i = 0; i < 3; ++i) put(rec.sigma_v[i]);
    for (int i = 0; i < 3; ++i) put(rec.sigma_att[i]);
    for (int i = 0; i < 3; ++i) put(rec.b_w[i]);
    for (int i = 0; i < 3; ++i) put(data.sensors.b_w[k][i]);
    for (int i = 0; i < 3; ++i) put(rec.sigma_b_w[i]);
    row.push_back('\n');
    out << row;
  }
  out.close();
  if (!out) {
    throw std::runtime_error("write failed: " + csv.string());
  }

  json m = meta;
  m["kind"] = "trace";
  m["format_version"] = kDatasetFormatVersion;
  m["rows"] = series.size();
  m["euler_convention"] = "Z-Y-X (yaw, pitch, roll) of the base orientation, radians";
  m["yaw_error"] = "initial offset removed";
  std::ofstream side(sidecar_path(csv), std::ios::trunc);
  side << m.dump(2) << "\n";
  if (!side) {
    throw std::runtime_error("cannot write " + sidecar_path(csv).string());
  }
}

TraceFile read_trace(const std::filesystem::path& csv) {
  TraceFile t;
  t.path = csv;
  std::ifstream side(sidecar_path(csv));
  if (!side) {
    throw std::runtime_error("missing sidecar for " + csv.string());
  }
  t.meta = json::parse(side);
  if (t.meta.value("kind", "") != "trace") {
    throw std::runtime_error(csv.string() + " is not a trace");
  }
  t.table = read_csv(csv);
  return t;
}

MergedReport merge_traces(const std::vector<TraceFile>& traces) {
  if (traces.empty()) {
    throw std::invalid_argument("merge_traces: no traces");
  }
  const std::string hash = traces.front().meta.value("dataset_hash", "");
  const std::size_t rows = traces.front().table.rows.size();
  for (const TraceFile& t : traces) {
    if (t.meta.value("dataset_hash", "") != hash) {
      throw std::invalid_argument("merge_traces: " + t.path.string() +
                                  " was produced from a different dataset");
    }
    if (t.table.rows.size() != rows) {
      throw std::invalid_argument("merge_traces: row counts differ");
    }
  }

  std::vector<std::string> labels;
  std::vector<std::array<std::size_t, 9>> err_cols;
  for (std::size_t i = 0; i < traces.size(); ++i) {
    std::string label = trace_label(traces[i], i);
    if (std::find(labels.begin(), labels.end(), label) != labels.end()) {
      label += "_" + std::to_string(i);
    }
    labels.push_back(std::move(label));
    std::array<std::size_t, 9> cols{};
    for (std::size_t q = 0; q < 9; ++q) {
      cols[q] = traces[i].table.column(std::string("err_") + kErrorQuantities[q]);
    }
    err_cols.push_back(cols);
  }
  const CsvTable& first = traces.front().table;
  const std::size_t tcol = first.column("t");
  const std::size_t ccol = first.column("contacts");

  std::ostringstream csv;
  csv << "t,phase";
  for (const std::string& l : labels) {
    for (const char* q : kErrorQuantities) {
      csv << ',' << l << "_err_" << q;
    }
  }
  for (std::size_t i = 1; i < labels.size(); ++i) {
    for (const char* q : kErrorQuantities) {
      csv << ",diff_" << labels[i] << '_' << labels[0] << '_' << q;
    }
  }
  csv << '\n';

  // Per-trace, per-phase sums of squared errors.
  std::vector<std::map<std::string, std::pair<std::array<double, 9>, std::size_t>>> sums(
      traces.size());
  for (std::size_t k = 0; k < rows; ++k) {
    const std::string phase = phase_name(static_cast<int>(first.rows[k][ccol]));
    csv << format_double(first.rows[k][tcol]) << ',' << phase;
    for (std::size_t i = 0; i < traces.size(); ++i) {
      auto& acc = sums[i][phase];
      for (std::size_t q = 0; q < 9; ++q) {
        const double e = traces[i].table.rows[k][err_cols[i][q]];
        acc.first[q] += e * e;
        csv << ',' << format_double(e);
      }
      ++acc.second;
    }
    for (std::size_t i = 1; i < traces.size(); ++i) {
      for (std::size_t q = 0; q < 9; ++q) {
        csv << ','
            << format_double(traces[i].table.rows[k][err_cols[i][q]] -
                             first.rows[k][err_cols[0][q]]);
      }
    }
    csv << '\n';
  }

  std::ostringstream sum;
  char line[160];
  for (std::size_t i = 0; i < traces.size(); ++i) {
    sum << labels[i] << " (" << traces[i].meta.value("filter_model", "?") << ")\n";
    std::snprintf(line, sizeof line, "%-8s", "phase");
    sum << line;
    for (const char* q : kErrorQuantities) {
      std::snprintf(line, sizeof line, " %11s", q);
      sum << line;
    }
    sum << "\n";
    for (const auto& [phase, acc] : sums[i]) {
      std::snprintf(line, sizeof line, "%-8s", phase.c_str());
      sum << line;
      for (std::size_t q = 0; q < 9; ++q) {
        std::snprintf(line, sizeof line, " %11.4e",
                      std::sqrt(acc.first[q] / static_cast<double>(acc.second)));
        sum << line;
      }
      sum << "\n";
    }
  }
  return {csv.str(), sum.str(), rows};
}

}  // namespace bipedest
