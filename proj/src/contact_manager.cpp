#include "bipedest/contact_manager.hpp"

#include <stdexcept>

#include "bipedest/biped_filter.hpp"
#include "bipedest/so3.hpp"

namespace bipedest {

std::vector<ContactEvent> detect_contact_events(const std::vector<bool>& previous,
                                                const std::vector<bool>& current, double t) {
  if (previous.size() != current.size()) {
    throw std::invalid_argument("detect_contact_events: flag vectors differ in size");
  }
  std::vector<ContactEvent> events;
  for (std::size_t i = 0; i < current.size(); ++i) {
    if (previous[i] != current[i]) {
      events.push_back({t, static_cast<int>(i),
                        current[i] ? ContactKind::Touchdown : ContactKind::Liftoff});
    }
  }
  return events;
}

void touchdown_reset(FilterState& x, Eigen::MatrixXd& P, const KinMeasurement& meas,
                     const ErrorLayout& layout, const Eigen::MatrixXd& R,
                     TouchdownCovariance mode) {
  const int foot = meas.foot;
  if (foot < 0 || foot >= layout.n_feet()) {
    throw std::out_of_range("touchdown_reset: invalid foot index");
  }
  const bool flat = layout.model() == FootModel::Flat;
  const int n = layout.dim();
  const int m = layout.meas_dim();
  if (R.rows() != m || R.cols() != m || P.rows() != n || P.cols() != n) {
    throw std::invalid_argument("touchdown_reset: shape mismatch");
  }

  const Eigen::Matrix3d Ct = x.q.rotation_matrix().transpose();
  const Eigen::Matrix3d Csz = meas.s_z.rotation_matrix();

  // Rows of the reset map w.r.t. the current error state (J) and the
  // measurement noise (G):
  //   dp     = dr - C^T s_p^x dphi + C^T n_p
  //   dtheta = C(s_z)^T (dphi - n_z)
  Eigen::MatrixXd T = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(n, m);
  std::vector<int> rows{layout.p(foot)};
  T.middleRows<3>(layout.p(foot)).setZero();
  T.block<3, 3>(layout.p(foot), layout.r()).setIdentity();
  T.block<3, 3>(layout.p(foot), layout.phi()) = -Ct * skew(meas.s_p);
  G.block<3, 3>(layout.p(foot), 0) = Ct;
  if (flat) {
    rows.push_back(layout.theta(foot));
    T.middleRows<3>(layout.theta(foot)).setZero();
    T.block<3, 3>(layout.theta(foot), layout.phi()) = Csz.transpose();
    G.block<3, 3>(layout.theta(foot), 3) = -Csz.transpose();
  }

  Eigen::MatrixXd Pn = T * P * T.transpose() + G * R * G.transpose();
  if (mode == TouchdownCovariance::Decoupled) {
    const Eigen::MatrixXd GRG = G * R * G.transpose();
    for (int a : rows) {
      Pn.middleRows<3>(a).setZero();
      Pn.middleCols<3>(a).setZero();
    }
    for (int a : rows) {
      for (int b : rows) {
        Pn.block<3, 3>(a, b) = GRG.block<3, 3>(a, b);
      }
    }
  }
  symmetrize(Pn);
  P = std::move(Pn);

  FootState& ft = x.feet[foot];
  ft.p = x.r + Ct * meas.s_p;
  if (flat) {
    ft.z = meas.s_z.inverse() * x.q;
  }
  ft.in_contact = true;
}

bool BipedFilter::on_liftoff(int foot) {
  if (!x_.feet.at(foot).in_contact) {
    return false;
  }
  x_.feet[foot].in_contact = false;
  inflated_[foot] = true;
  return true;
}

bool BipedFilter::on_touchdown(int foot, const std::optional<KinMeasurement>& meas) {
  if (x_.feet.at(foot).in_contact || !meas || meas->foot != foot) {
    return false;
  }
  touchdown_reset(x_, P_, *meas, layout_, foot_measurement_noise(), config_.touchdown);
  inflated_[foot] = false;
  return true;
}

}  // namespace bipedest
