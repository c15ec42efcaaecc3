#include "bipedest/biped_filter.hpp"

#include <stdexcept>

namespace bipedest {

namespace {

struct ManifoldState {
  FilterState x;
  const ErrorLayout* layout;

  ManifoldState retract(const Eigen::VectorXd& dx) const {
    return {bipedest::retract(x, dx, *layout), layout};
  }
};

}  // namespace

BipedFilter::BipedFilter(FilterConfig config, FilterState x0, Eigen::MatrixXd P0)
    : config_(std::move(config)),
      layout_(config_.model, config_.n_feet),
      x_(std::move(x0)),
      P_(std::move(P0)) {
  if (static_cast<int>(x_.feet.size()) != layout_.n_feet()) {
    throw std::invalid_argument("BipedFilter: state has the wrong number of feet");
  }
  if (P_.rows() != layout_.dim() || P_.cols() != layout_.dim()) {
    throw std::invalid_argument("BipedFilter: covariance dimension mismatch");
  }
  if (!config_.noise.valid() || !(config_.dt > 0.0) || !(config_.inflation >= 1.0)) {
    throw std::invalid_argument("BipedFilter: invalid noise configuration");
  }
  symmetrize(P_);
  inflated_.resize(layout_.n_feet());
  for (int i = 0; i < layout_.n_feet(); ++i) {
    inflated_[i] = !x_.feet[i].in_contact;
  }
}

void BipedFilter::predict(const ImuSample& u, double dt) {
  // Jacobians are evaluated at the current (a posteriori) estimate.
  LinearizedSystem sys;
  sys.Fc = prediction_jacobian_continuous(x_, u, layout_);
  sys.Lc = noise_jacobian(x_, layout_);
  sys.Qc = process_noise_density(config_.noise, layout_, inflated_, config_.inflation);
  const DiscreteTransition tr = discretize(sys, dt, config_.discretization);

  x_ = propagate_state(x_, u, dt, config_.noise.gravity);
  P_ = propagate_covariance(P_, tr.Fk, tr.Qk);
}

Eigen::MatrixXd BipedFilter::foot_measurement_noise() const {
  return measurement_noise(config_.noise, config_.model, config_.dt, config_.meas_noise_mode);
}

UpdateResult BipedFilter::update(std::span<const KinMeasurement> measurements) {
  std::vector<const KinMeasurement*> used;
  for (const KinMeasurement& m : measurements) {
    if (m.foot < 0 || m.foot >= layout_.n_feet()) {
      throw std::out_of_range("BipedFilter::update: invalid foot index");
    }
    if (x_.feet[m.foot].in_contact) {
      used.push_back(&m);
    }
  }
  if (used.empty()) {
    UpdateResult none;
    none.accepted = true;
    none.correction = Eigen::VectorXd::Zero(layout_.dim());
    return none;
  }

  const int md = layout_.meas_dim();
  const int rows = md * static_cast<int>(used.size());
  Eigen::VectorXd e(rows);
  Eigen::MatrixXd H(rows, layout_.dim());
  Eigen::MatrixXd R = Eigen::MatrixXd::Zero(rows, rows);
  const Eigen::MatrixXd Rf = foot_measurement_noise();
  for (std::size_t k = 0; k < used.size(); ++k) {
    const KinMeasurement& m = *used[k];
    const auto pred = predict_measurements(x_, m.foot, config_.model);
    const int at = md * static_cast<int>(k);
    e.segment(at, md) = innovation(m, *pred, config_.model);
    H.middleRows(at, md) = measurement_jacobian(x_, m.foot, layout_);
    R.block(at, at, md, md) = Rf;
  }

  ManifoldState ms{x_, &layout_};
  UpdateResult res = bipedest::update(ms, P_, e, H, R, config_.update);
  if (res.accepted) {
    x_ = std::move(ms.x);
  }
  return res;
}

}  // namespace bipedest
