#pragma once

#include <concepts>
#include <optional>
#include <string>

#include <Eigen/Core>

namespace bipedest {

/// Continuous-time linearization of an error-state model:
///   d(dx)/dt = Fc dx + Lc w,  w ~ N(0, Qc)
///   dy = Hc dx + v,           v ~ N(0, Rc)
struct LinearizedSystem {
  Eigen::MatrixXd Fc;
  Eigen::MatrixXd Lc;
  Eigen::MatrixXd Qc;
  Eigen::MatrixXd Hc;
  Eigen::MatrixXd Rc;
};

enum class Discretization {
  FirstOrder,  ///< Fk = I + Fc dt, Qk = Fk Lc Qc Lc^T Fk^T dt
  VanLoan,     ///< exact matrix exponential; intended for validation runs
};

struct DiscreteTransition {
  Eigen::MatrixXd Fk;
  Eigen::MatrixXd Qk;
};

/// Throws std::invalid_argument for dt <= 0, non-finite Fc or inconsistent shapes.
DiscreteTransition discretize(const LinearizedSystem& sys, double dt,
                              Discretization method = Discretization::FirstOrder);

/// P <- (P + P^T) / 2
void symmetrize(Eigen::MatrixXd& P);

/// P- = Fk P Fk^T + Qk, symmetrized. Throws std::invalid_argument on shape mismatch.
Eigen::MatrixXd propagate_covariance(const Eigen::MatrixXd& P, const Eigen::MatrixXd& Fk,
                                     const Eigen::MatrixXd& Qk);

struct CovarianceHealth {
  double asymmetry = 0.0;  ///< max |P - P^T|
  double min_eigenvalue = 0.0;
  bool finite = true;

  bool ok(double sym_tol = 1e-10, double psd_tol = 1e-9) const {
    return finite && asymmetry <= sym_tol && min_eigenvalue >= -psd_tol;
  }
};

CovarianceHealth covariance_health(const Eigen::MatrixXd& P);

/// A state living on a manifold whose tangent space has the covariance's
/// dimension. retract(0) must return the state unchanged.
template <class S>
concept Retractable = requires(const S& s, const Eigen::VectorXd& dx) {
  { s.retract(dx) } -> std::convertible_to<S>;
};

struct UpdateOptions {
  /// Reject when cond(S) exceeds this value.
  double max_condition = 1e12;
  /// Mahalanobis gate on the innovation; disabled when empty. Holds the
  /// chi-square acceptance probability (e.g. 0.999).
  std::optional<double> gate_probability;
};

struct UpdateResult {
  bool accepted = false;
  std::string reason;
  double nis = 0.0;  ///< e^T S^-1 e
  Eigen::VectorXd correction;
};

/// Computes the Joseph-form Kalman correction in error coordinates. On
/// acceptance P is replaced by the a posteriori covariance and the correction
/// dx = K e is returned; P is left untouched on rejection.
UpdateResult kalman_correction(Eigen::MatrixXd& P, const Eigen::VectorXd& innovation,
                               const Eigen::MatrixXd& H, const Eigen::MatrixXd& R,
                               const UpdateOptions& options = {});

/// Full error-state update: correction followed by retraction of the state.
template <Retractable S>
UpdateResult update(S& state, Eigen::MatrixXd& P, const Eigen::VectorXd& innovation,
                    const Eigen::MatrixXd& H, const Eigen::MatrixXd& R,
                    const UpdateOptions& options = {}) {
  UpdateResult result = kalman_correction(P, innovation, H, R, options);
  if (result.accepted) {
    state = state.retract(result.correction);
  }
  return result;
}

}  // namespace bipedest
