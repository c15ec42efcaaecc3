#pragma once

#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "bipedest/biped_model.hpp"
#include "bipedest/contact_manager.hpp"
#include "bipedest/ekf_core.hpp"

namespace bipedest {

struct FilterConfig {
  FootModel model = FootModel::Flat;
  int n_feet = 2;
  NoiseConfig noise;
  /// Nominal sample period; used to discretize R in continuous mode.
  double dt = 0.001;
  MeasurementNoiseMode meas_noise_mode = MeasurementNoiseMode::Discrete;
  Discretization discretization = Discretization::FirstOrder;
  /// Density multiplier for w_p / w_z of feet out of contact.
  double inflation = 1e3;
  TouchdownCovariance touchdown = TouchdownCovariance::Correlated;
  UpdateOptions update;
};

/// Point-foot or flat-foot error-state EKF with contact switching.
///
/// Single-threaded: predict(), update() and the contact callbacks must be
/// called sequentially for one instance.
class BipedFilter {
 public:
  /// Throws std::invalid_argument if the state, covariance and config disagree.
  BipedFilter(FilterConfig config, FilterState x0, Eigen::MatrixXd P0);

  const FilterConfig& config() const { return config_; }
  const ErrorLayout& layout() const { return layout_; }
  const FilterState& state() const { return x_; }
  const Eigen::MatrixXd& covariance() const { return P_; }
  bool inflated(int foot) const { return inflated_.at(foot); }

  /// Propagates state and covariance over dt with the IMU sample held constant.
  void predict(const ImuSample& u, double dt);

  /// One stacked update from the kinematics of all feet currently in contact.
  /// Measurements of feet out of contact are ignored. Returns an accepted
  /// result with an empty correction when nothing is measured.
  UpdateResult update(std::span<const KinMeasurement> measurements);

  /// Drops the foot's measurements and inflates its process noise.
  /// Returns false (and does nothing) if the foot is already out of contact.
  bool on_liftoff(int foot);

  /// Resets the foot pose from kinematics and restores nominal noise.
  /// Returns false (and does nothing) without a measurement or if the foot
  /// is already in contact.
  bool on_touchdown(int foot, const std::optional<KinMeasurement>& meas);

  /// Per-foot measurement covariance used by update() and touchdown resets.
  Eigen::MatrixXd foot_measurement_noise() const;

 private:
  FilterConfig config_;
  ErrorLayout layout_;
  FilterState x_;
  Eigen::MatrixXd P_;
  std::vector<bool> inflated_;
};

}  // namespace bipedest
