#include "bipedest/ekf_core.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <boost/math/distributions/chi_squared.hpp>
#include <unsupported/Eigen/MatrixFunctions>

namespace bipedest {

DiscreteTransition discretize(const LinearizedSystem& sys, double dt, Discretization method) {
  if (!(dt > 0.0)) {
    throw std::invalid_argument("discretize: dt must be positive");
  }
  const Eigen::Index n = sys.Fc.rows();
  if (sys.Fc.cols() != n || sys.Lc.rows() != n || sys.Qc.rows() != sys.Lc.cols() ||
      sys.Qc.cols() != sys.Lc.cols()) {
    throw std::invalid_argument("discretize: inconsistent Fc/Lc/Qc shapes");
  }
  if (!sys.Fc.allFinite()) {
    throw std::invalid_argument("discretize: Fc contains non-finite entries");
  }

  const Eigen::MatrixXd LQL = sys.Lc * sys.Qc * sys.Lc.transpose();
  DiscreteTransition out;
  if (method == Discretization::FirstOrder) {
    out.Fk = Eigen::MatrixXd::Identity(n, n) + sys.Fc * dt;
    out.Qk = out.Fk * LQL * out.Fk.transpose() * dt;
  } else {
    // Van Loan: exp([[-F, LQL^T], [0, F^T]] dt) = [[., G12], [0, G22]]
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(2 * n, 2 * n);
    M.topLeftCorner(n, n) = -sys.Fc * dt;
    M.topRightCorner(n, n) = LQL * dt;
    M.bottomRightCorner(n, n) = sys.Fc.transpose() * dt;
    const Eigen::MatrixXd E = M.exp();
    out.Fk = E.bottomRightCorner(n, n).transpose();
    out.Qk = out.Fk * E.topRightCorner(n, n);
  }
  symmetrize(out.Qk);
  return out;
}

void symmetrize(Eigen::MatrixXd& P) {
  const Eigen::MatrixXd Pt = P.transpose();
  P = 0.5 * (P + Pt);
}

Eigen::MatrixXd propagate_covariance(const Eigen::MatrixXd& P, const Eigen::MatrixXd& Fk,
                                     const Eigen::MatrixXd& Qk) {
  const Eigen::Index n = P.rows();
  if (P.cols() != n || Fk.rows() != n || Fk.cols() != n || Qk.rows() != n || Qk.cols() != n) {
    throw std::invalid_argument("propagate_covariance: shape mismatch");
  }
  Eigen::MatrixXd out = Fk * P * Fk.transpose() + Qk;
  symmetrize(out);
  return out;
}

CovarianceHealth covariance_health(const Eigen::MatrixXd& P) {
  CovarianceHealth h;
  h.finite = P.allFinite();
  if (!h.finite) {
    return h;
  }
  h.asymmetry = (P - P.transpose()).cwiseAbs().maxCoeff();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(P, Eigen::EigenvaluesOnly);
  h.min_eigenvalue = es.eigenvalues().minCoeff();
  return h;
}

UpdateResult kalman_correction(Eigen::MatrixXd& P, const Eigen::VectorXd& innovation,
                               const Eigen::MatrixXd& H, const Eigen::MatrixXd& R,
                               const UpdateOptions& options) {
  const Eigen::Index n = P.rows();
  const Eigen::Index m = innovation.size();
  if (P.cols() != n || H.rows() != m || H.cols() != n || R.rows() != m || R.cols() != m) {
    throw std::invalid_argument("kalman_correction: shape mismatch");
  }

  UpdateResult result;
  if (!innovation.allFinite()) {
    result.reason = "non-finite innovation";
    return result;
  }

  const Eigen::MatrixXd PHt = P * H.transpose();
  Eigen::MatrixXd S = H * PHt + R;
  symmetrize(S);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S, Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  if (!(lo > 0.0) || hi / lo > options.max_condition) {
    result.reason = "innovation covariance is singular or ill-conditioned";
    return result;
  }

  const Eigen::LLT<Eigen::MatrixXd> llt(S);
  if (llt.info() != Eigen::Success) {
    result.reason = "innovation covariance factorization failed";
    return result;
  }
  result.nis = innovation.dot(llt.solve(innovation));
  if (options.gate_probability) {
    const boost::math::chi_squared chi2(static_cast<double>(m));
    if (result.nis > boost::math::quantile(chi2, *options.gate_probability)) {
      result.reason = "innovation gated";
      return result;
    }
  }

  // K = P H^T S^-1
  const Eigen::MatrixXd K = llt.solve(PHt.transpose()).transpose();
  result.correction = K * innovation;

  const Eigen::MatrixXd IKH = Eigen::MatrixXd::Identity(n, n) - K * H;
  P = IKH * P * IKH.transpose() + K * R * K.transpose();
  symmetrize(P);
  result.accepted = true;
  return result;
}

}  // namespace bipedest
