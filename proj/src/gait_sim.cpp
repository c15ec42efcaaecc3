#include "bipedest/gait_sim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

#include "bipedest/so3.hpp"

namespace bipedest {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kTimeEps = 1e-9;

/// A scalar and its first two time derivatives.
struct Jet {
  double x = 0.0;
  double d = 0.0;
  double dd = 0.0;
};

Jet operator+(const Jet& a, const Jet& b) { return {a.x + b.x, a.d + b.d, a.dd + b.dd}; }

Jet operator*(const Jet& a, const Jet& b) {
  return {a.x * b.x, a.d * b.x + a.x * b.d, a.dd * b.x + 2.0 * a.d * b.d + a.x * b.dd};
}

Jet constant(double c) { return {c, 0.0, 0.0}; }

Jet sine(double amp, double freq, double phase, double t) {
  const double om = kTwoPi * freq;
  const double th = om * t + phase;
  return {amp * std::sin(th), amp * om * std::cos(th), -amp * om * om * std::sin(th)};
}

// Quintic smoothstep and its antiderivative on [0, 1].
double smoothstep(double u) { return u * u * u * (10.0 + u * (-15.0 + 6.0 * u)); }
double smoothstep_d(double u) { return 30.0 * u * u * (1.0 - u) * (1.0 - u); }
double smoothstep_dd(double u) { return 60.0 * u * (1.0 - u) * (1.0 - 2.0 * u); }
double smoothstep_int(double u) { return u * u * u * u * (2.5 + u * (-3.0 + u)); }

/// Motion envelope: 0 before `start`, quintic ramp to 1 over `ramp`, 1,
/// quintic ramp back to 0 ending at `end`.
class Envelope {
 public:
  Envelope() = default;
  Envelope(double start, double end, double ramp) : start_(start), end_(end), ramp_(ramp) {}

  Jet at(double t) const {
    if (!(ramp_ > 0.0) || t <= start_ || t >= end_) {
      return {};
    }
    if (t < start_ + ramp_) {
      const double u = (t - start_) / ramp_;
      return {smoothstep(u), smoothstep_d(u) / ramp_, smoothstep_dd(u) / (ramp_ * ramp_)};
    }
    if (t > end_ - ramp_) {
      const double u = (t - (end_ - ramp_)) / ramp_;
      return {1.0 - smoothstep(u), -smoothstep_d(u) / ramp_, -smoothstep_dd(u) / (ramp_ * ramp_)};
    }
    return constant(1.0);
  }

  /// Integral of the envelope from -inf to t.
  double integral(double t) const {
    if (!(ramp_ > 0.0) || t <= start_) {
      return 0.0;
    }
    const double up_end = start_ + ramp_;
    const double down_start = end_ - ramp_;
    double acc = ramp_ * smoothstep_int(std::min(1.0, (t - start_) / ramp_));
    if (t <= up_end) {
      return acc;
    }
    acc += std::min(t, down_start) - up_end;
    if (t <= down_start) {
      return acc;
    }
    const double u = std::min(1.0, (t - down_start) / ramp_);
    return acc + ramp_ * (u - smoothstep_int(u));
  }

 private:
  double start_ = 0.0;
  double end_ = 0.0;
  double ramp_ = 0.0;
};

/// Attitude and body-frame angular velocity from Z-Y-X Euler angle jets.
void euler_kinematics(const Jet& roll, const Jet& pitch, const Jet& yaw, Quaternion& q,
                      Eigen::Vector3d& w) {
  q = from_euler_zyx(roll.x, pitch.x, yaw.x);
  const double sr = std::sin(roll.x), cr = std::cos(roll.x);
  const double sp = std::sin(pitch.x), cp = std::cos(pitch.x);
  w << roll.d - yaw.d * sp, pitch.d * cr + yaw.d * sr * cp, -pitch.d * sr + yaw.d * cr * cp;
}

bool is_multiple(double x, double dt) {
  const double n = x / dt;
  return std::abs(n - std::round(n)) < 1e-6;
}

std::size_t sample_count(double duration, double dt) {
  return static_cast<std::size_t>(std::llround(duration / dt));
}

class GaitReference final : public MotionReference {
 public:
  explicit GaitReference(const GaitConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    const double T = cfg_.step_duration;
    t0_ = cfg_.stand_time;
    t1_ = t0_ + cfg_.n_steps * T;
    env_ = Envelope(t0_, t1_, std::min(T, 0.5 * cfg_.n_steps * T));
    speed_ = cfg_.step_length / T;
  }

  int n_feet() const override { return 2; }
  double duration() const override { return cfg_.duration(); }

  ReferenceSample at(double t) const override {
    const double T = cfg_.step_duration;
    const double tau = t - t0_;
    const Jet e = env_.at(t);

    ReferenceSample s;
    s.t = t;
    const Jet x = Jet{speed_ * env_.integral(t), speed_ * e.x, speed_ * e.d} +
                  e * sine(cfg_.surge_amplitude, 1.0 / T, 0.0, tau);
    const Jet y = e * sine(-cfg_.lateral_sway_amplitude, 0.5 / T, 0.0, tau);
    const Jet z = constant(cfg_.body_height) +
                  e * sine(cfg_.bob_amplitude, 1.0 / T, -0.5 * std::numbers::pi, tau);
    s.r << x.x, y.x, z.x;
    s.v << x.d, y.d, z.d;
    s.a << x.dd, y.dd, z.dd;

    const Jet roll = e * sine(cfg_.roll_amplitude, 0.5 / T, 0.0, tau);
    const Jet pitch = e * sine(cfg_.pitch_amplitude, 1.0 / T, 0.5, tau);
    const Jet yaw = e * sine(cfg_.yaw_amplitude, 0.5 / T, 0.5 * std::numbers::pi, tau);
    euler_kinematics(roll, pitch, yaw, s.q, s.w);

    for (int f = 0; f < 2; ++f) {
      FootState ft;
      Eigen::Vector3d fv = Eigen::Vector3d::Zero();
      foot_at(f, t, ft, fv);
      s.feet.push_back(ft);
      s.foot_velocity.push_back(fv);
    }
    return s;
  }

 private:
  // Foot f swings during steps f, f + 2, ...; the swing of step k ends at x = (k + 1) L.
  void foot_at(int f, double t, FootState& ft, Eigen::Vector3d& fv) const {
    const double T = cfg_.step_duration;
    const double L = cfg_.step_length;
    const double ds = cfg_.double_support_fraction * T;
    const double swing = T - ds;
    const double y = (f == 0 ? 0.5 : -0.5) * cfg_.foot_spacing;

    double x = 0.0;
    int completed = 0;
    double stance_time = t;
    ft.in_contact = true;
    fv.setZero();
    for (int k = f; k < cfg_.n_steps; k += 2) {
      const double lift = t0_ + k * T + ds;
      const double land = t0_ + (k + 1) * T;
      if (t >= land - kTimeEps) {
        x = (k + 1) * L;
        ++completed;
        continue;
      }
      if (t > lift + kTimeEps) {
        const double u = (t - lift) / swing;
        const double x1 = (k + 1) * L;
        const double dx = x1 - x;
        const double sp = std::sin(std::numbers::pi * u);
        ft.p << x + dx * smoothstep(u), y, cfg_.swing_height * sp * sp;
        fv << dx * smoothstep_d(u) / swing, 0.0,
            cfg_.swing_height * std::numbers::pi * std::sin(kTwoPi * u) / swing;
        ft.in_contact = false;
        stance_time -= t - lift;
      }
      break;
    }
    stance_time -= completed * swing;
    if (ft.in_contact) {
      ft.p << x, y, 0.0;
    }
    ft.z = from_euler_zyx(0.0, 0.0, cfg_.slip_rate * stance_time);
  }

  GaitConfig cfg_;
  double t0_ = 0.0;
  double t1_ = 0.0;
  double speed_ = 0.0;
  Envelope env_;
};

class StanceReference final : public MotionReference {
 public:
  explicit StanceReference(const StanceConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    env_ = Envelope(cfg_.ramp_time, 1e300, cfg_.ramp_time);
  }

  int n_feet() const override { return 1; }
  double duration() const override { return cfg_.duration; }

  ReferenceSample at(double t) const override {
    const Jet e = env_.at(t);
    const double a = cfg_.sway_amplitude;
    ReferenceSample s;
    s.t = t;
    const Jet x = e * sine(a, 0.37, 0.0, t);
    const Jet y = e * sine(a, 0.23, 1.0, t);
    const Jet z = constant(cfg_.height) + e * sine(0.5 * a, 0.31, 0.0, t);
    s.r << x.x, y.x, z.x;
    s.v << x.d, y.d, z.d;
    s.a << x.dd, y.dd, z.dd;

    const double tilt = cfg_.vertical_axis_only ? 0.0 : 1.0;
    const Jet roll = e * sine(tilt * cfg_.roll_amplitude, 0.29, 0.0, t);
    const Jet pitch = e * sine(tilt * cfg_.pitch_amplitude, 0.41, 0.7, t);
    const Jet yaw = e * sine(cfg_.yaw_amplitude, 0.17, 0.3, t);
    euler_kinematics(roll, pitch, yaw, s.q, s.w);

    s.feet.push_back(FootState{});
    s.foot_velocity.push_back(Eigen::Vector3d::Zero());
    return s;
  }

 private:
  StanceConfig cfg_;
  Envelope env_;
};

}  // namespace

std::size_t GaitConfig::n_samples() const { return sample_count(duration(), dt); }

void GaitConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) {
      throw std::invalid_argument(std::string("GaitConfig: invalid ") + what);
    }
  };
  require(step_length > 0.0, "step_length");
  require(step_duration > 0.0, "step_duration");
  require(double_support_fraction > 0.0 && double_support_fraction < 1.0,
          "double_support_fraction");
  require(body_height > 0.0, "body_height");
  require(lateral_sway_amplitude >= 0.0, "lateral_sway_amplitude");
  require(n_steps >= 0, "n_steps");
  require(dt > 0.0, "dt");
  require(stand_time > 0.0, "stand_time");
  require(foot_spacing > 0.0, "foot_spacing");
  require(swing_height >= 0.0 && bob_amplitude >= 0.0 && surge_amplitude >= 0.0,
          "amplitude");
  require(roll_amplitude >= 0.0 && pitch_amplitude >= 0.0 && yaw_amplitude >= 0.0,
          "angle amplitude");
  require(std::isfinite(slip_rate), "slip_rate");
  require(is_multiple(stand_time, dt) && is_multiple(step_duration, dt) &&
              is_multiple(double_support_fraction * step_duration, dt),
          "dt (must divide the phase durations)");
  // Mean advance plus surge ripple and the fastest swing foot.
  const double base_speed =
      step_length / step_duration + kTwoPi * surge_amplitude / step_duration;
  const double swing_speed =
      2.0 * step_length * 1.875 / ((1.0 - double_support_fraction) * step_duration);
  require(base_speed <= 10.0 && swing_speed <= 10.0, "gait (speed above 10 m/s)");
}

GaitConfig GaitConfig::quick() {
  GaitConfig cfg;
  cfg.n_steps = 8;
  return cfg;
}

std::size_t StanceConfig::n_samples() const { return sample_count(duration, dt); }

void StanceConfig::validate() const {
  if (!(duration > 0.0) || !(dt > 0.0) || !(ramp_time > 0.0) || !(height > 0.0) ||
      !is_multiple(duration, dt)) {
    throw std::invalid_argument("StanceConfig: invalid duration, dt, ramp_time or height");
  }
}

std::unique_ptr<MotionReference> make_gait_reference(const GaitConfig& cfg) {
  return std::make_unique<GaitReference>(cfg);
}

std::unique_ptr<MotionReference> make_stance_reference(const StanceConfig& cfg) {
  return std::make_unique<StanceReference>(cfg);
}

std::vector<bool> TruthSample::contacts() const {
  std::vector<bool> c(feet.size());
  for (std::size_t i = 0; i < feet.size(); ++i) {
    c[i] = feet[i].in_contact;
  }
  return c;
}

int TruthSample::n_contacts() const {
  int n = 0;
  for (const FootState& f : feet) {
    n += f.in_contact ? 1 : 0;
  }
  return n;
}

std::vector<TruthSample> generate_truth(const MotionReference& ref, double dt,
                                        const Eigen::Vector3d& gravity) {
  if (!(dt > 0.0)) {
    throw std::invalid_argument("generate_truth: dt must be positive");
  }
  const std::size_t n = sample_count(ref.duration(), dt);
  std::vector<TruthSample> out;
  out.reserve(n);

  const ReferenceSample first = ref.at(0.0);
  FilterState x;
  x.r = first.r;
  x.v = first.v;
  x.q = first.q;

  for (std::size_t k = 0; k < n; ++k) {
    const double t = static_cast<double>(k) * dt;
    const ReferenceSample now = ref.at(t);
    const ReferenceSample mid = ref.at(t + 0.5 * dt);

    TruthSample s;
    s.t = t;
    s.r = x.r;
    s.v = x.v;
    s.q = x.q;
    s.a = now.a;
    s.w = now.w;
    s.feet = now.feet;
    s.imu.t = t;
    s.imu.f = x.q.rotation_matrix() * (mid.a - gravity);
    s.imu.w = mid.w;
    x = propagate_state(x, s.imu, dt, gravity);
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<TruthSample> generate_truth(const GaitConfig& cfg, const Eigen::Vector3d& gravity) {
  return generate_truth(*make_gait_reference(cfg), cfg.dt, gravity);
}

SensorStream synthesize_sensors(const std::vector<TruthSample>& truth, double dt,
                                const NoiseConfig& noise, std::uint64_t seed,
                                const InitialBias& bias0) {
  if (!(dt > 0.0) || !noise.valid()) {
    throw std::invalid_argument("synthesize_sensors: invalid dt or noise configuration");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto draw = [&](double std) {
    Eigen::Vector3d n;
    for (int i = 0; i < 3; ++i) {
      n[i] = std * gauss(rng);
    }
    return n;
  };

  const double sf = noise.w_f / std::sqrt(dt);
  const double sw = noise.w_w / std::sqrt(dt);
  const double sbf = noise.w_bf * std::sqrt(dt);
  const double sbw = noise.w_bw * std::sqrt(dt);

  SensorStream s;
  s.seed = seed;
  s.imu.reserve(truth.size());
  s.kin.reserve(truth.size());
  s.b_f.reserve(truth.size());
  s.b_w.reserve(truth.size());

  Eigen::Vector3d bf = bias0.f;
  Eigen::Vector3d bw = bias0.w;
  std::vector<bool> previous;
  for (const TruthSample& ts : truth) {
    ImuSample u = ts.imu;
    u.f += bf + draw(sf);
    u.w += bw + draw(sw);
    s.imu.push_back(u);
    s.b_f.push_back(bf);
    s.b_w.push_back(bw);
    bf += draw(sbf);
    bw += draw(sbw);

    const Eigen::Matrix3d C = ts.q.rotation_matrix();
    std::vector<KinMeasurement> kin;
    kin.reserve(ts.feet.size());
    for (std::size_t i = 0; i < ts.feet.size(); ++i) {
      KinMeasurement m;
      m.t = ts.t;
      m.foot = static_cast<int>(i);
      m.s_p = C * (ts.feet[i].p - ts.r) + draw(noise.n_p);
      m.s_z = quat_exp(draw(noise.n_z)) * (ts.q * ts.feet[i].z.inverse());
      kin.push_back(m);
    }
    s.kin.push_back(std::move(kin));

    const std::vector<bool> current = ts.contacts();
    if (!previous.empty()) {
      for (const ContactEvent& e : detect_contact_events(previous, current, ts.t)) {
        s.events.push_back(e);
      }
    }
    previous = current;
  }
  return s;
}

Dataset simulate(const GaitConfig& cfg, const NoiseConfig& noise, std::uint64_t seed,
                 const InitialBias& bias0) {
  Dataset d;
  d.generator = "gait";
  d.dt = cfg.dt;
  d.n_feet = 2;
  d.gait = cfg;
  d.noise = noise;
  d.truth = generate_truth(cfg, noise.gravity);
  d.sensors = synthesize_sensors(d.truth, cfg.dt, noise, seed, bias0);
  return d;
}

Dataset simulate(const StanceConfig& cfg, const NoiseConfig& noise, std::uint64_t seed,
                 const InitialBias& bias0) {
  Dataset d;
  d.generator = "stance";
  d.dt = cfg.dt;
  d.n_feet = 1;
  d.noise = noise;
  d.truth = generate_truth(*make_stance_reference(cfg), cfg.dt, noise.gravity);
  d.sensors = synthesize_sensors(d.truth, cfg.dt, noise, seed, bias0);
  return d;
}

Quaternion attitude_from_specific_force(const Eigen::Vector3d& f) {
  const double roll = std::atan2(f.y(), f.z());
  const double pitch = std::atan2(-f.x(), std::hypot(f.y(), f.z()));
  return from_euler_zyx(roll, pitch, 0.0);
}

InitialEstimate initialize_filter(const Dataset& data, double window, const FilterConfig& cfg,
                                  const InitialUncertainty& unc, double stationary_accel_std) {
  if (data.size() == 0) {
    throw std::invalid_argument("initialize_filter: empty dataset");
  }
  if (cfg.n_feet != data.n_feet) {
    throw std::invalid_argument("initialize_filter: filter and dataset disagree on n_feet");
  }
  const std::size_t n =
      std::clamp<std::size_t>(static_cast<std::size_t>(std::llround(window / data.dt)), 1,
                              data.size());

  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  for (std::size_t k = 0; k < n; ++k) {
    mean += data.sensors.imu[k].f;
  }
  mean /= static_cast<double>(n);
  Eigen::Vector3d var = Eigen::Vector3d::Zero();
  for (std::size_t k = 0; k < n; ++k) {
    var += (data.sensors.imu[k].f - mean).cwiseAbs2();
  }
  var /= static_cast<double>(std::max<std::size_t>(n - 1, 1));

  InitialEstimate est;
  est.accel_std = var.cwiseSqrt().maxCoeff();
  est.stationary = est.accel_std <= stationary_accel_std;

  const ErrorLayout layout(cfg.model, cfg.n_feet);
  FilterState& x = est.x;
  x.q = attitude_from_specific_force(mean);
  x.feet.assign(cfg.n_feet, FootState{});
  for (FootState& f : x.feet) {
    f.in_contact = false;
  }

  const Eigen::Matrix3d Ct = x.q.rotation_matrix().transpose();
  const std::vector<KinMeasurement>& kin0 = data.sensors.kin.front();
  const std::vector<bool> contact0 = data.truth.front().contacts();
  double height = 0.0;
  int used = 0;
  for (int i = 0; i < cfg.n_feet; ++i) {
    if (contact0[i]) {
      height -= (Ct * kin0[i].s_p).z();
      ++used;
    }
  }
  x.r = Eigen::Vector3d(0.0, 0.0, used > 0 ? height / used : 0.0);

  est.P = Eigen::MatrixXd::Zero(layout.dim(), layout.dim());
  auto set_block = [&](int at, double sigma) {
    est.P.block<3, 3>(at, at) = sigma * sigma * Eigen::Matrix3d::Identity();
  };
  set_block(layout.r(), unc.r);
  set_block(layout.v(), unc.v);
  set_block(layout.phi(), unc.phi);
  set_block(layout.b_f(), unc.b_f);
  set_block(layout.b_w(), unc.b_w);

  Eigen::MatrixXd R = measurement_noise(cfg.noise, cfg.model, cfg.dt, cfg.meas_noise_mode);
  for (int i = 0; i < cfg.n_feet; ++i) {
    touchdown_reset(x, est.P, kin0[i], layout, R, cfg.touchdown);
    x.feet[i].in_contact = contact0[i];
  }
  return est;
}

}  // namespace bipedest
