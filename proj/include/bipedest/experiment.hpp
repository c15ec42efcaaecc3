#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "bipedest/biped_filter.hpp"
#include "bipedest/dataset_io.hpp"
#include "bipedest/gait_sim.hpp"

namespace bipedest {

struct RunOptions {
  FilterConfig filter;
  double init_window = 1.0;  ///< s of standing data used for alignment
  InitialUncertainty init;
  double stationary_accel_std = 0.1;
  /// Start from the true state (P0 still from the alignment).
  bool truth_init = false;
  /// Prediction only: no kinematic updates and no touchdown resets.
  bool drop_updates = false;
  /// Check symmetry and PSD of P after every step.
  bool check_health = true;
  /// Throw on the first unhealthy covariance or non-finite state.
  bool abort_on_unhealthy = true;
};

/// Estimate and selected standard deviations at one sample, recorded after
/// the update and before the prediction with that sample's IMU data.
struct TraceRecord {
  double t = 0.0;
  int contacts = 0;  ///< number of feet in contact (truth)
  Eigen::Vector3d r = Eigen::Vector3d::Zero();
  Eigen::Vector3d v = Eigen::Vector3d::Zero();
  Quaternion q;
  Eigen::Vector3d b_f = Eigen::Vector3d::Zero();
  Eigen::Vector3d b_w = Eigen::Vector3d::Zero();
  Eigen::Vector3d sigma_r = Eigen::Vector3d::Zero();
  Eigen::Vector3d sigma_v = Eigen::Vector3d::Zero();
  /// Std of the body-frame velocity C v, from the v and attitude blocks.
  Eigen::Vector3d sigma_v_body = Eigen::Vector3d::Zero();
  /// Attitude error std expressed in the world frame (x, y: tilt; z: heading).
  Eigen::Vector3d sigma_att = Eigen::Vector3d::Zero();
  Eigen::Vector3d sigma_b_w = Eigen::Vector3d::Zero();
};

struct HealthSummary {
  double max_asymmetry = 0.0;
  double min_eigenvalue = std::numeric_limits<double>::infinity();
  std::size_t checked = 0;
  std::size_t violations = 0;
  long first_violation = -1;  ///< sample index, -1 if none
};

struct RunResult {
  std::vector<TraceRecord> trace;
  HealthSummary health;
  FilterState initial;
  bool stationary_init = true;
  int rejected_updates = 0;
  int touchdowns = 0;
  int liftoffs = 0;
  double seconds = 0.0;  ///< wall-clock run time
};

/// Runs the filter over the dataset. Per sample k: contact events from the
/// change of contact flags (liftoff inflates, touchdown resets the foot from
/// its kinematics), one stacked update with the other feet in contact, record,
/// then predict with IMU sample k.
///
/// Throws std::runtime_error with the sample index on a non-finite state or,
/// with abort_on_unhealthy, an asymmetric or indefinite covariance.
RunResult run_filter(const Dataset& data, const RunOptions& options);

/// States obtained by chaining the prediction model from x0 over the IMU
/// samples; element k is the state at sample k.
std::vector<FilterState> integrate_open_loop(const FilterState& x0,
                                             const std::vector<ImuSample>& imu, double dt,
                                             const Eigen::Vector3d& gravity);

inline constexpr std::array<const char*, 9> kErrorQuantities = {
    "r_x", "r_y", "r_z", "v_x", "v_y", "v_z", "roll", "pitch", "yaw"};

struct ErrorStats {
  double rms = 0.0;
  double max = 0.0;
  std::size_t n = 0;
};

using ErrorRow = std::array<ErrorStats, 9>;

/// Estimate-minus-truth errors. Euler angles are Z-Y-X (yaw, pitch, roll) of
/// the base orientation; the yaw error has its value at the first sample
/// removed since absolute yaw is unobservable.
struct ErrorReport {
  ErrorRow all;
  /// Keyed by "double", "single" or "flight" (two, one or no feet in contact).
  std::map<std::string, ErrorRow> by_phase;
  /// Fraction of samples with |error| <= 3 sigma for the body-frame
  /// velocity and the world-frame tilt about x and y. World-frame velocity
  /// and heading carry the unobservable yaw error and are left out.
  std::array<double, 5> coverage{};
  double yaw_offset = 0.0;
};

inline constexpr std::array<const char*, 5> kCoverageQuantities = {
    "v_body_x", "v_body_y", "v_body_z", "tilt_x", "tilt_y"};

/// Per-sample errors: 9 quantities as in kErrorQuantities.
std::vector<std::array<double, 9>> error_series(const Dataset& data, const RunResult& run);

ErrorReport compute_errors(const Dataset& data, const RunResult& run);

std::string format_report(const ErrorReport& report, const std::string& title);
std::string report_csv(const ErrorReport& report);

/// Writes the estimate-vs-truth trace CSV and its JSON sidecar.
void write_trace(const std::filesystem::path& csv, const Dataset& data, const RunResult& run,
                 const nlohmann::json& meta);

struct TraceFile {
  std::filesystem::path path;
  nlohmann::json meta;
  CsvTable table;
};

TraceFile read_trace(const std::filesystem::path& csv);

struct MergedReport {
  std::string csv;      ///< one row per sample
  std::string summary;  ///< per-phase RMS per trace
  std::size_t rows = 0;
};

/// Merges traces of the same dataset: per-trace error columns, differences
/// of every trace to the first, and the phase label. Throws
/// std::invalid_argument if the traces come from different datasets.
MergedReport merge_traces(const std::vector<TraceFile>& traces);

}  // namespace bipedest
