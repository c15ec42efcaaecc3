#include "bipedest/biped_model.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace bipedest {

std::string_view to_string(FootModel m) { return m == FootModel::Flat ? "flat" : "point"; }

FootModel parse_foot_model(std::string_view s) {
  if (s == "point") return FootModel::Point;
  if (s == "flat") return FootModel::Flat;
  throw std::invalid_argument("unknown foot model '" + std::string(s) + "'");
}

bool NoiseConfig::valid() const {
  for (double d : {w_f, w_w, w_bf, w_bw, w_p, w_z, n_p, n_z}) {
    if (!(d >= 0.0) || !std::isfinite(d)) return false;
  }
  return gravity.allFinite();
}

ErrorLayout::ErrorLayout(FootModel model, int n_feet) : model_(model), n_feet_(n_feet) {
  if (n_feet < 1) {
    throw std::invalid_argument("ErrorLayout: at least one foot is required");
  }
}

FilterState retract(const FilterState& x, const Eigen::VectorXd& dx, const ErrorLayout& layout) {
  if (dx.size() != layout.dim() || static_cast<int>(x.feet.size()) != layout.n_feet()) {
    throw std::invalid_argument("retract: dimension mismatch");
  }
  FilterState out = x;
  out.r += dx.segment<3>(layout.r());
  out.v += dx.segment<3>(layout.v());
  out.q = quat_exp(dx.segment<3>(layout.phi())) * x.q;
  for (int i = 0; i < layout.n_feet(); ++i) {
    out.feet[i].p += dx.segment<3>(layout.p(i));
    if (layout.model() == FootModel::Flat) {
      out.feet[i].z = quat_exp(dx.segment<3>(layout.theta(i))) * x.feet[i].z;
    }
  }
  out.b_f += dx.segment<3>(layout.b_f());
  out.b_w += dx.segment<3>(layout.b_w());
  return out;
}

Eigen::VectorXd local_difference(const FilterState& a, const FilterState& b,
                                 const ErrorLayout& layout) {
  Eigen::VectorXd d = Eigen::VectorXd::Zero(layout.dim());
  d.segment<3>(layout.r()) = a.r - b.r;
  d.segment<3>(layout.v()) = a.v - b.v;
  d.segment<3>(layout.phi()) = quat_log(a.q * b.q.inverse());
  for (int i = 0; i < layout.n_feet(); ++i) {
    d.segment<3>(layout.p(i)) = a.feet[i].p - b.feet[i].p;
    if (layout.model() == FootModel::Flat) {
      d.segment<3>(layout.theta(i)) = quat_log(a.feet[i].z * b.feet[i].z.inverse());
    }
  }
  d.segment<3>(layout.b_f()) = a.b_f - b.b_f;
  d.segment<3>(layout.b_w()) = a.b_w - b.b_w;
  return d;
}

FilterState propagate_state(const FilterState& x, const ImuSample& u, double dt,
                            const Eigen::Vector3d& gravity) {
  if (!(dt > 0.0)) {
    throw std::invalid_argument("propagate_state: dt must be positive");
  }
  if (!u.f.allFinite() || !u.w.allFinite()) {
    throw std::invalid_argument("propagate_state: non-finite IMU sample at t=" +
                                std::to_string(u.t));
  }
  const Eigen::Vector3d f_hat = u.f - x.b_f;
  const Eigen::Vector3d w_hat = u.w - x.b_w;
  const Eigen::Vector3d acc = x.q.rotation_matrix().transpose() * f_hat + gravity;

  FilterState out = x;
  out.r = x.r + dt * x.v + 0.5 * dt * dt * acc;
  out.v = x.v + dt * acc;
  out.q = quat_exp(dt * w_hat) * x.q;
  return out;
}

std::optional<PredictedKinematics> predict_measurements(const FilterState& x, int foot,
                                                        FootModel model) {
  if (foot < 0 || foot >= static_cast<int>(x.feet.size())) {
    throw std::out_of_range("predict_measurements: invalid foot index");
  }
  const FootState& ft = x.feet[foot];
  if (!ft.in_contact) {
    return std::nullopt;
  }
  PredictedKinematics pred{x.q.rotation_matrix() * (ft.p - x.r), std::nullopt};
  if (model == FootModel::Flat) {
    pred.s_z = x.q * ft.z.inverse();
  }
  return pred;
}

Eigen::VectorXd innovation(const KinMeasurement& meas, const PredictedKinematics& pred,
                           FootModel model) {
  if (model == FootModel::Point) {
    return meas.s_p - pred.s_p;
  }
  if (!pred.s_z) {
    throw std::invalid_argument("innovation: flat model requires a predicted orientation");
  }
  Eigen::VectorXd e(6);
  e.head<3>() = meas.s_p - pred.s_p;
  e.tail<3>() = quat_log(meas.s_z * pred.s_z->inverse());
  return e;
}

Eigen::MatrixXd prediction_jacobian_continuous(const FilterState& x, const ImuSample& u,
                                               const ErrorLayout& layout) {
  const int n = layout.dim();
  const Eigen::Matrix3d Ct = x.q.rotation_matrix().transpose();
  const Eigen::Vector3d f_hat = u.f - x.b_f;
  const Eigen::Vector3d w_hat = u.w - x.b_w;

  Eigen::MatrixXd F = Eigen::MatrixXd::Zero(n, n);
  F.block<3, 3>(layout.r(), layout.v()).setIdentity();
  F.block<3, 3>(layout.v(), layout.phi()) = -Ct * skew(f_hat);
  F.block<3, 3>(layout.v(), layout.b_f()) = -Ct;
  F.block<3, 3>(layout.phi(), layout.phi()) = -skew(w_hat);
  F.block<3, 3>(layout.phi(), layout.b_w()) = -Eigen::Matrix3d::Identity();
  return F;
}

Eigen::MatrixXd noise_jacobian(const FilterState& x, const ErrorLayout& layout) {
  const Eigen::Matrix3d Ct = x.q.rotation_matrix().transpose();
  const Eigen::Matrix3d I = Eigen::Matrix3d::Identity();
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(layout.dim(), layout.noise_dim());
  L.block<3, 3>(layout.v(), layout.noise_f()) = -Ct;
  L.block<3, 3>(layout.phi(), layout.noise_w()) = -I;
  for (int i = 0; i < layout.n_feet(); ++i) {
    L.block<3, 3>(layout.p(i), layout.noise_p(i)) = Ct;
    if (layout.model() == FootModel::Flat) {
      L.block<3, 3>(layout.theta(i), layout.noise_z(i)) = I;
    }
  }
  L.block<3, 3>(layout.b_f(), layout.noise_bf()) = I;
  L.block<3, 3>(layout.b_w(), layout.noise_bw()) = I;
  return L;
}

Eigen::MatrixXd process_noise_density(const NoiseConfig& noise, const ErrorLayout& layout,
                                      const std::vector<bool>& inflated, double inflation) {
  Eigen::VectorXd d = Eigen::VectorXd::Zero(layout.noise_dim());
  auto set = [&d](int at, double density) { d.segment<3>(at).setConstant(density * density); };
  set(layout.noise_f(), noise.w_f);
  set(layout.noise_w(), noise.w_w);
  set(layout.noise_bf(), noise.w_bf);
  set(layout.noise_bw(), noise.w_bw);
  for (int i = 0; i < layout.n_feet(); ++i) {
    const bool inf = i < static_cast<int>(inflated.size()) && inflated[i];
    const double scale = inf ? inflation : 1.0;
    set(layout.noise_p(i), scale * noise.w_p);
    if (layout.model() == FootModel::Flat) {
      set(layout.noise_z(i), scale * noise.w_z);
    }
  }
  return d.asDiagonal();
}

PredictionJacobians prediction_jacobians(const FilterState& x, const ImuSample& u, double dt,
                                         const NoiseConfig& noise, const ErrorLayout& layout) {
  const int n = layout.dim();
  return {Eigen::MatrixXd::Identity(n, n) + prediction_jacobian_continuous(x, u, layout) * dt,
          noise_jacobian(x, layout), process_noise_density(noise, layout)};
}

Eigen::MatrixXd measurement_jacobian(const FilterState& x, int foot, const ErrorLayout& layout) {
  if (foot < 0 || foot >= layout.n_feet()) {
    throw std::out_of_range("measurement_jacobian: invalid foot index");
  }
  const Eigen::Matrix3d C = x.q.rotation_matrix();
  const FootState& ft = x.feet[foot];
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(layout.meas_dim(), layout.dim());
  H.block<3, 3>(0, layout.r()) = -C;
  H.block<3, 3>(0, layout.phi()) = skew(C * (ft.p - x.r));
  H.block<3, 3>(0, layout.p(foot)) = C;
  if (layout.model() == FootModel::Flat) {
    H.block<3, 3>(3, layout.phi()).setIdentity();
    H.block<3, 3>(3, layout.theta(foot)) = -(x.q * ft.z.inverse()).rotation_matrix();
  }
  return H;
}

Eigen::MatrixXd measurement_noise(const NoiseConfig& noise, FootModel model, double dt,
                                  MeasurementNoiseMode mode) {
  const int m = model == FootModel::Flat ? 6 : 3;
  Eigen::VectorXd d(m);
  d.head<3>().setConstant(noise.n_p * noise.n_p);
  if (model == FootModel::Flat) {
    d.tail<3>().setConstant(noise.n_z * noise.n_z);
  }
  if (mode == MeasurementNoiseMode::Continuous) {
    d /= dt;
  }
  return d.asDiagonal();
}

}  // namespace bipedest
