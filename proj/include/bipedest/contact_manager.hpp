#pragma once

#include <vector>

#include <Eigen/Core>

#include "bipedest/biped_model.hpp"

namespace bipedest {

enum class ContactKind { Touchdown, Liftoff };

struct ContactEvent {
  double t = 0.0;
  int foot = 0;
  ContactKind kind = ContactKind::Touchdown;
};

/// Events implied by a change of contact flags between two samples.
std::vector<ContactEvent> detect_contact_events(const std::vector<bool>& previous,
                                                const std::vector<bool>& current, double t);

enum class TouchdownCovariance {
  /// First-order propagation of the base covariance and R through
  /// p = r + C^T s_p, z = s_z^-1 ⊗ q, keeping the induced cross-covariances.
  Correlated,
  /// Foot block set to the mapped measurement noise only; cross terms zeroed.
  Decoupled,
};

/// Re-initializes one foot from a kinematic measurement and rewrites the
/// corresponding rows/columns of P. The foot is marked in contact.
void touchdown_reset(FilterState& x, Eigen::MatrixXd& P, const KinMeasurement& meas,
                     const ErrorLayout& layout, const Eigen::MatrixXd& R,
                     TouchdownCovariance mode);

}  // namespace bipedest
