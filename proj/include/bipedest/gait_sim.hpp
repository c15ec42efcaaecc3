#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "bipedest/biped_filter.hpp"
#include "bipedest/biped_model.hpp"
#include "bipedest/contact_manager.hpp"

namespace bipedest {

/// Scripted biped walking gait. Steps alternate feet, starting with foot 0
/// (left, +y). Every step begins with a double-support phase followed by the
/// swing of one foot. The robot stands still for stand_time before the first
/// and after the last step.
struct GaitConfig {
  double step_length = 0.2;              ///< m, forward advance per step
  double step_duration = 1.0;            ///< s
  double double_support_fraction = 0.2;  ///< of each step
  double body_height = 0.9;              ///< m, nominal base height above ground
  double lateral_sway_amplitude = 0.04;  ///< m
  int n_steps = 118;
  double dt = 0.001;  ///< s

  double stand_time = 1.0;      ///< s
  double foot_spacing = 0.2;    ///< m, lateral distance between feet
  double swing_height = 0.05;   ///< m
  double bob_amplitude = 0.01;  ///< m, vertical base oscillation
  double surge_amplitude = 0.01;  ///< m, fore-aft ripple on top of the mean advance
  double roll_amplitude = 0.03;   ///< rad
  double pitch_amplitude = 0.02;  ///< rad
  double yaw_amplitude = 0.05;    ///< rad
  /// Yaw rate of feet in stance, rad/s. Nonzero values emulate rotational slippage.
  double slip_rate = 0.0;

  double duration() const { return 2.0 * stand_time + n_steps * step_duration; }
  std::size_t n_samples() const;
  /// Throws std::invalid_argument naming the offending field.
  void validate() const;

  /// 10 s profile for quick runs.
  static GaitConfig quick();
};

/// Motion of the robot standing on one foot while the base sways and
/// rotates above it.
struct StanceConfig {
  double duration = 60.0;  ///< s
  double dt = 0.001;       ///< s
  double ramp_time = 1.0;  ///< s, motion fades in after this much standing still
  double height = 0.9;     ///< m
  double sway_amplitude = 0.03;   ///< m
  double roll_amplitude = 0.08;   ///< rad
  double pitch_amplitude = 0.06;  ///< rad
  double yaw_amplitude = 0.15;    ///< rad
  /// Rotate only about the world vertical (w parallel to Cg at all times).
  bool vertical_axis_only = false;

  std::size_t n_samples() const;
  void validate() const;
};

/// Noise-free state of the robot and its derivatives at one instant.
struct ReferenceSample {
  double t = 0.0;
  Eigen::Vector3d r = Eigen::Vector3d::Zero();
  Eigen::Vector3d v = Eigen::Vector3d::Zero();
  Eigen::Vector3d a = Eigen::Vector3d::Zero();
  Quaternion q;                                 ///< world -> base
  Eigen::Vector3d w = Eigen::Vector3d::Zero();  ///< body-frame angular velocity
  std::vector<FootState> feet;
  std::vector<Eigen::Vector3d> foot_velocity;
};

/// Analytic, twice continuously differentiable robot motion.
class MotionReference {
 public:
  virtual ~MotionReference() = default;
  virtual int n_feet() const = 0;
  virtual double duration() const = 0;
  virtual ReferenceSample at(double t) const = 0;
};

std::unique_ptr<MotionReference> make_gait_reference(const GaitConfig& cfg);
std::unique_ptr<MotionReference> make_stance_reference(const StanceConfig& cfg);

struct TruthSample {
  double t = 0.0;
  Eigen::Vector3d r = Eigen::Vector3d::Zero();
  Eigen::Vector3d v = Eigen::Vector3d::Zero();
  Eigen::Vector3d a = Eigen::Vector3d::Zero();  ///< reference acceleration at t
  Quaternion q;
  Eigen::Vector3d w = Eigen::Vector3d::Zero();  ///< reference angular velocity at t
  std::vector<FootState> feet;
  /// Noise-free IMU sample that drives this sample to the next one.
  ImuSample imu;

  std::vector<bool> contacts() const;
  int n_contacts() const;
};

/// Ground truth sampled every dt.
///
/// Base position, velocity and attitude are obtained by integrating the
/// reference acceleration and angular velocity taken at the interval
/// midpoints with the same zero-order-hold step the filter uses, so the
/// noise-free IMU samples reproduce the stored truth exactly. Feet come from
/// the reference directly.
std::vector<TruthSample> generate_truth(const MotionReference& ref, double dt,
                                        const Eigen::Vector3d& gravity = {0.0, 0.0, -9.81});
std::vector<TruthSample> generate_truth(const GaitConfig& cfg,
                                        const Eigen::Vector3d& gravity = {0.0, 0.0, -9.81});

struct SensorStream {
  std::uint64_t seed = 0;
  std::vector<ImuSample> imu;
  /// kin[k][i]: kinematics of foot i at sample k, generated for every foot.
  std::vector<std::vector<KinMeasurement>> kin;
  std::vector<ContactEvent> events;
  std::vector<Eigen::Vector3d> b_f;  ///< true accelerometer bias at each sample
  std::vector<Eigen::Vector3d> b_w;  ///< true gyroscope bias at each sample
};

/// True sensor biases at the first sample.
struct InitialBias {
  Eigen::Vector3d f = Eigen::Vector3d::Zero();
  Eigen::Vector3d w = Eigen::Vector3d::Zero();
};

/// Adds white noise (std density / sqrt(dt)) and random-walk biases
/// (per-step std density * sqrt(dt)) to the noise-free IMU, and noisy
/// kinematics to every foot. Deterministic in seed.
SensorStream synthesize_sensors(const std::vector<TruthSample>& truth, double dt,
                                const NoiseConfig& noise, std::uint64_t seed,
                                const InitialBias& bias0 = {});

struct Dataset {
  std::string generator;  ///< "gait", "stance" or "file"
  double dt = 0.001;
  int n_feet = 2;
  std::optional<GaitConfig> gait;
  NoiseConfig noise;  ///< noise used to synthesize the sensors
  std::vector<TruthSample> truth;
  SensorStream sensors;

  std::size_t size() const { return truth.size(); }
};

Dataset simulate(const GaitConfig& cfg, const NoiseConfig& noise, std::uint64_t seed,
                 const InitialBias& bias0 = {});
Dataset simulate(const StanceConfig& cfg, const NoiseConfig& noise, std::uint64_t seed,
                 const InitialBias& bias0 = {});

/// Standard deviations of the initial base and bias uncertainty.
struct InitialUncertainty {
  double r = 0.01;     ///< m
  double v = 0.01;     ///< m/s
  double phi = 0.01;   ///< rad
  double b_f = 0.01;   ///< m/s^2
  double b_w = 0.02;   ///< rad/s
};

struct InitialEstimate {
  FilterState x;
  Eigen::MatrixXd P;
  bool stationary = true;
  double accel_std = 0.0;  ///< largest per-axis std of the specific force over the window
};

/// Static alignment over the first `window` seconds: roll and pitch from the
/// mean specific force, yaw zero, horizontal position zero, height from the
/// kinematics (feet on the z = 0 plane), velocity and biases zero. Feet are
/// placed from the first kinematic sample through touchdown resets.
InitialEstimate initialize_filter(const Dataset& data, double window, const FilterConfig& cfg,
                                  const InitialUncertainty& unc = {},
                                  double stationary_accel_std = 0.1);

/// Roll and pitch (yaw zero) of the world -> body rotation that maps -g onto
/// the measured specific force.
Quaternion attitude_from_specific_force(const Eigen::Vector3d& f);

}  // namespace bipedest
