#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "bipedest/so3.hpp"

namespace bipedest {

enum class FootModel { Point, Flat };

std::string_view to_string(FootModel m);
/// Accepts "point" or "flat"; throws std::invalid_argument otherwise.
FootModel parse_foot_model(std::string_view s);

struct FootState {
  Eigen::Vector3d p = Eigen::Vector3d::Zero();  ///< world position, m
  Quaternion z;                                 ///< world -> foot (flat model only)
  bool in_contact = true;
};

/// Full nonlinear filter state.
struct FilterState {
  Eigen::Vector3d r = Eigen::Vector3d::Zero();  ///< world base position, m
  Eigen::Vector3d v = Eigen::Vector3d::Zero();  ///< world base velocity, m/s
  Quaternion q;                                 ///< world -> base
  std::vector<FootState> feet;
  Eigen::Vector3d b_f = Eigen::Vector3d::Zero();  ///< accelerometer bias, m/s^2
  Eigen::Vector3d b_w = Eigen::Vector3d::Zero();  ///< gyroscope bias, rad/s
};

struct ImuSample {
  double t = 0.0;
  Eigen::Vector3d f = Eigen::Vector3d::Zero();  ///< specific force, body frame
  Eigen::Vector3d w = Eigen::Vector3d::Zero();  ///< angular velocity, body frame
};

struct KinMeasurement {
  double t = 0.0;
  int foot = 0;
  Eigen::Vector3d s_p = Eigen::Vector3d::Zero();  ///< foot position relative to base, base frame
  Quaternion s_z;                                 ///< base -> foot relative orientation
};

/// IMU and kinematic noise parameters. Densities are continuous-time
/// (per sqrt(Hz)); n_p and n_z are per-sample standard deviations.
struct NoiseConfig {
  double w_f = 0.00078;    ///< m/s^2/sqrt(Hz)
  double w_w = 0.000523;   ///< rad/s/sqrt(Hz)
  double w_bf = 0.0001;    ///< m/s^3/sqrt(Hz)
  double w_bw = 0.000618;  ///< rad/s^2/sqrt(Hz)
  double w_p = 0.001;      ///< m/sqrt(Hz)
  double w_z = 0.01;       ///< rad/sqrt(Hz)
  double n_p = 0.01;       ///< m
  double n_z = 0.01;       ///< rad
  Eigen::Vector3d gravity{0.0, 0.0, -9.81};

  bool valid() const;
};

/// Index bookkeeping for the error state
/// [dr, dv, dphi, dp_1..dp_N, db_f, db_w, dtheta_1..dtheta_N]
/// and the process noise vector
/// [w_f, w_w, w_p_1..w_p_N, w_bf, w_bw, w_z_1..w_z_N].
class ErrorLayout {
 public:
  ErrorLayout(FootModel model, int n_feet);

  FootModel model() const { return model_; }
  int n_feet() const { return n_feet_; }
  int dim() const { return 15 + (model_ == FootModel::Flat ? 6 : 3) * n_feet_; }
  int noise_dim() const { return dim() - 3; }
  /// Rows contributed by one foot's kinematic measurement.
  int meas_dim() const { return model_ == FootModel::Flat ? 6 : 3; }

  static constexpr int r() { return 0; }
  static constexpr int v() { return 3; }
  static constexpr int phi() { return 6; }
  int p(int i) const { return 9 + 3 * i; }
  int b_f() const { return 9 + 3 * n_feet_; }
  int b_w() const { return 12 + 3 * n_feet_; }
  int theta(int i) const { return 15 + 3 * n_feet_ + 3 * i; }

  static constexpr int noise_f() { return 0; }
  static constexpr int noise_w() { return 3; }
  int noise_p(int i) const { return 6 + 3 * i; }
  int noise_bf() const { return 6 + 3 * n_feet_; }
  int noise_bw() const { return 9 + 3 * n_feet_; }
  int noise_z(int i) const { return 12 + 3 * n_feet_ + 3 * i; }

 private:
  FootModel model_;
  int n_feet_;
};

/// Applies an error-state correction: vector states add, quaternions are
/// left-multiplied by exp(delta).
FilterState retract(const FilterState& x, const Eigen::VectorXd& dx, const ErrorLayout& layout);

/// Error-state difference a ⊖ b with retract(b, a ⊖ b) == a.
Eigen::VectorXd local_difference(const FilterState& a, const FilterState& b,
                                 const ErrorLayout& layout);

/// Zero-order-hold discrete propagation of the nonlinear state.
/// Throws std::invalid_argument on non-finite IMU data or dt <= 0.
FilterState propagate_state(const FilterState& x, const ImuSample& u, double dt,
                            const Eigen::Vector3d& gravity);

struct PredictedKinematics {
  Eigen::Vector3d s_p;
  std::optional<Quaternion> s_z;
};

/// Expected kinematic measurement of one foot; empty when the foot is not in contact.
std::optional<PredictedKinematics> predict_measurements(const FilterState& x, int foot,
                                                        FootModel model);

/// [s_p - ŝ_p ; log(s_z ⊗ ŝ_z^-1)] (the rotational block only for the flat model).
Eigen::VectorXd innovation(const KinMeasurement& meas, const PredictedKinematics& pred,
                           FootModel model);

/// Continuous prediction Jacobian Fc evaluated at (x, u).
Eigen::MatrixXd prediction_jacobian_continuous(const FilterState& x, const ImuSample& u,
                                               const ErrorLayout& layout);

/// Noise Jacobian Lc = diag(-C^T, -I, C^T .., I, I, I ..).
Eigen::MatrixXd noise_jacobian(const FilterState& x, const ErrorLayout& layout);

/// Diagonal Qc from densities. Feet flagged in `inflated` use
/// inflation * w_p (and inflation * w_z) instead of the nominal densities.
Eigen::MatrixXd process_noise_density(const NoiseConfig& noise, const ErrorLayout& layout,
                                      const std::vector<bool>& inflated = {},
                                      double inflation = 1.0);

struct PredictionJacobians {
  Eigen::MatrixXd Fk;
  Eigen::MatrixXd Lc;
  Eigen::MatrixXd Qc;
};

/// Fk = I + Fc dt together with Lc and nominal Qc.
PredictionJacobians prediction_jacobians(const FilterState& x, const ImuSample& u, double dt,
                                         const NoiseConfig& noise, const ErrorLayout& layout);

/// Measurement Jacobian of one foot's kinematics (3 or 6 rows).
Eigen::MatrixXd measurement_jacobian(const FilterState& x, int foot, const ErrorLayout& layout);

enum class MeasurementNoiseMode {
  Discrete,    ///< R = diag(n_p^2, n_z^2)
  Continuous,  ///< R = diag(n_p^2, n_z^2) / dt
};

/// Per-foot measurement covariance (3x3 or 6x6).
Eigen::MatrixXd measurement_noise(const NoiseConfig& noise, FootModel model, double dt,
                                  MeasurementNoiseMode mode);

}  // namespace bipedest
