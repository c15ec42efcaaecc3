#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include "bipedest/ekf_core.hpp"

using namespace bipedest;

namespace {

LinearizedSystem scalar_system(double a, double l, double q) {
  LinearizedSystem s;
  s.Fc = Eigen::MatrixXd::Constant(1, 1, a);
  s.Lc = Eigen::MatrixXd::Constant(1, 1, l);
  s.Qc = Eigen::MatrixXd::Constant(1, 1, q);
  return s;
}

Eigen::MatrixXd random_spd(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> nd;
  Eigen::MatrixXd A(n, n);
  for (int i = 0; i < n * n; ++i) A.data()[i] = nd(rng);
  return A * A.transpose() + 0.1 * Eigen::MatrixXd::Identity(n, n);
}

struct Scalar {
  double value = 0.0;
  Scalar retract(const Eigen::VectorXd& dx) const { return {value + dx[0]}; }
};

}  // namespace

TEST(ekf_core, first_order_discretization) {
  LinearizedSystem s;
  s.Fc = Eigen::Matrix2d{{0.0, 1.0}, {-2.0, -0.5}};
  s.Lc = Eigen::Matrix2d{{0.0, 0.0}, {0.0, 1.0}};
  s.Qc = Eigen::Matrix2d{{0.0, 0.0}, {0.0, 0.3}};
  const double dt = 0.01;
  const DiscreteTransition d = discretize(s, dt);
  const Eigen::MatrixXd Fk = Eigen::Matrix2d::Identity() + s.Fc * dt;
  EXPECT_LT((d.Fk - Fk).norm(), 1e-15);
  EXPECT_LT((d.Qk - Fk * s.Lc * s.Qc * s.Lc.transpose() * Fk.transpose() * dt).norm(), 1e-18);
}

TEST(ekf_core, van_loan_matches_closed_form) {
  // dx = a x dt + l dW: Fk = e^{a dt}, Qk = l^2 q (e^{2 a dt} - 1) / (2 a)
  const double a = -0.7, l = 1.3, q = 0.25, dt = 0.2;
  const DiscreteTransition d = discretize(scalar_system(a, l, q), dt, Discretization::VanLoan);
  EXPECT_NEAR(d.Fk(0, 0), std::exp(a * dt), 1e-14);
  EXPECT_NEAR(d.Qk(0, 0), l * l * q * (std::exp(2 * a * dt) - 1.0) / (2.0 * a), 1e-14);
}

TEST(ekf_core, van_loan_double_integrator) {
  // white acceleration: Qk = q [[dt^3/3, dt^2/2], [dt^2/2, dt]]
  LinearizedSystem s;
  s.Fc = Eigen::Matrix2d{{0.0, 1.0}, {0.0, 0.0}};
  s.Lc = Eigen::Matrix2d::Identity();
  s.Qc = Eigen::Matrix2d{{0.0, 0.0}, {0.0, 2.0}};
  const double dt = 0.5;
  const DiscreteTransition d = discretize(s, dt, Discretization::VanLoan);
  const Eigen::Matrix2d Q{{2.0 * dt * dt * dt / 3.0, dt * dt}, {dt * dt, 2.0 * dt}};
  EXPECT_LT((d.Qk - Q).norm(), 1e-13);
  EXPECT_LT((d.Fk - Eigen::Matrix2d{{1.0, dt}, {0.0, 1.0}}).norm(), 1e-14);
}

TEST(ekf_core, gyro_noise_per_step) {
  // white gyro noise density 0.000523 rad/s/sqrt(Hz) at 1 kHz
  const DiscreteTransition d = discretize(scalar_system(0.0, 1.0, 0.000523 * 0.000523), 0.001);
  EXPECT_NEAR(d.Qk(0, 0), 2.736e-10, 2.736e-10 * 1e-3);
}

TEST(ekf_core, discretize_rejects_bad_input) {
  EXPECT_THROW(discretize(scalar_system(0.0, 1.0, 1.0), 0.0), std::invalid_argument);
  EXPECT_THROW(discretize(scalar_system(std::nan(""), 1.0, 1.0), 0.1), std::invalid_argument);
  LinearizedSystem s = scalar_system(0.0, 1.0, 1.0);
  s.Qc = Eigen::MatrixXd::Identity(2, 2);
  EXPECT_THROW(discretize(s, 0.1), std::invalid_argument);
}

TEST(ekf_core, propagate_covariance) {
  std::mt19937_64 rng(1);
  const Eigen::MatrixXd P = random_spd(rng, 4);
  const Eigen::MatrixXd F = Eigen::MatrixXd::Random(4, 4);
  const Eigen::MatrixXd Q = random_spd(rng, 4);
  const Eigen::MatrixXd Pn = propagate_covariance(P, F, Q);
  EXPECT_LT((Pn - (F * P * F.transpose() + Q)).norm(), 1e-12 * Pn.norm());
  EXPECT_TRUE(Pn.isApprox(Pn.transpose(), 0.0));
  EXPECT_THROW(propagate_covariance(P, Eigen::MatrixXd::Identity(3, 3), Q), std::invalid_argument);
}

TEST(ekf_core, joseph_update_matches_textbook_form) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::MatrixXd P0 = random_spd(rng, 6);
    const Eigen::MatrixXd H = Eigen::MatrixXd::Random(3, 6);
    const Eigen::MatrixXd R = random_spd(rng, 3);
    const Eigen::VectorXd e = Eigen::VectorXd::Random(3);
    Eigen::MatrixXd P = P0;
    const UpdateResult r = kalman_correction(P, e, H, R);
    ASSERT_TRUE(r.accepted);
    const Eigen::MatrixXd S = H * P0 * H.transpose() + R;
    const Eigen::MatrixXd K = P0 * H.transpose() * S.inverse();
    EXPECT_LT((r.correction - K * e).norm(), 1e-10 * (1.0 + (K * e).norm()));
    EXPECT_LT((P - (P0 - K * S * K.transpose())).norm(), 1e-10 * P0.norm());
    EXPECT_NEAR(r.nis, e.dot(S.inverse() * e), 1e-10 * (1.0 + r.nis));
    EXPECT_TRUE(P.isApprox(P.transpose(), 0.0));
  }
}

TEST(ekf_core, joseph_form_stays_psd_with_tiny_noise) {
  Eigen::MatrixXd P = Eigen::MatrixXd::Identity(3, 3);
  P(0, 0) = 1e6;
  const Eigen::MatrixXd H = Eigen::MatrixXd::Identity(3, 3);
  const Eigen::MatrixXd R = Eigen::MatrixXd::Identity(3, 3) * 1e-9;
  for (int i = 0; i < 100; ++i) {
    ASSERT_TRUE(kalman_correction(P, Eigen::Vector3d::Zero(), H, R).accepted);
  }
  EXPECT_TRUE(covariance_health(P).ok());
}

TEST(ekf_core, chi_square_gate) {
  // chi-square(3) 0.99 quantile is 11.3449
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(3, 3);
  const Eigen::MatrixXd H = Eigen::MatrixXd::Identity(3, 3);
  const Eigen::MatrixXd R = Eigen::MatrixXd::Identity(3, 3);
  UpdateOptions opt;
  opt.gate_probability = 0.99;
  const double below = std::sqrt(11.34 / 3.0), above = std::sqrt(11.35 / 3.0);
  EXPECT_TRUE(kalman_correction(P, Eigen::Vector3d::Constant(below), H, R, opt).accepted);
  const Eigen::MatrixXd P0 = P;
  const UpdateResult r = kalman_correction(P, Eigen::Vector3d::Constant(above), H, R, opt);
  EXPECT_FALSE(r.accepted);
  EXPECT_FALSE(r.reason.empty());
  EXPECT_EQ(P, P0);
}

TEST(ekf_core, ill_conditioned_innovation_is_rejected) {
  Eigen::MatrixXd P = Eigen::MatrixXd::Identity(2, 2);
  Eigen::MatrixXd H(2, 2);
  H << 1.0, 0.0, 1.0, 0.0;
  const Eigen::MatrixXd R = Eigen::MatrixXd::Zero(2, 2);
  const Eigen::MatrixXd P0 = P;
  EXPECT_FALSE(kalman_correction(P, Eigen::Vector2d(1.0, 1.0), H, R).accepted);
  EXPECT_EQ(P, P0);
}

TEST(ekf_core, generic_update_retracts_state) {
  Scalar x{2.0};
  Eigen::MatrixXd P = Eigen::MatrixXd::Constant(1, 1, 1.0);
  const Eigen::MatrixXd H = Eigen::MatrixXd::Constant(1, 1, 1.0);
  const Eigen::MatrixXd R = Eigen::MatrixXd::Constant(1, 1, 1.0);
  const UpdateResult r = update(x, P, Eigen::VectorXd::Constant(1, 4.0), H, R);
  ASSERT_TRUE(r.accepted);
  EXPECT_DOUBLE_EQ(x.value, 4.0);
  EXPECT_DOUBLE_EQ(P(0, 0), 0.5);
}

TEST(ekf_core, covariance_health) {
  Eigen::MatrixXd P = Eigen::MatrixXd::Identity(3, 3);
  EXPECT_TRUE(covariance_health(P).ok());
  P(0, 1) = 1e-8;
  EXPECT_FALSE(covariance_health(P).ok());
  P(0, 1) = 0.0;
  P(2, 2) = -1e-6;
  EXPECT_NEAR(covariance_health(P).min_eigenvalue, -1e-6, 1e-18);
  EXPECT_FALSE(covariance_health(P).ok());
  P(2, 2) = std::nan("");
  EXPECT_FALSE(covariance_health(P).finite);
}

TEST(ekf_core, zero_dynamics_discretization) {
  LinearizedSystem s;
  s.Fc = Eigen::MatrixXd::Zero(4, 4);
  s.Lc = Eigen::MatrixXd::Identity(4, 4);
  s.Qc = Eigen::MatrixXd::Identity(4, 4);
  const DiscreteTransition d = discretize(s, 0.001);
  EXPECT_EQ(d.Fk, Eigen::MatrixXd::Identity(4, 4));
  EXPECT_LT((d.Qk - 0.001 * Eigen::MatrixXd::Identity(4, 4)).norm(), 1e-18);
}

TEST(ekf_core, process_noise_vanishes_linearly) {
  LinearizedSystem s;
  s.Fc = Eigen::Matrix2d{{0.0, 1.0}, {-3.0, -0.2}};
  s.Lc = Eigen::Matrix2d::Identity();
  s.Qc = Eigen::Matrix2d{{0.5, 0.0}, {0.0, 2.0}};
  for (Discretization m : {Discretization::FirstOrder, Discretization::VanLoan}) {
    const double q1 = discretize(s, 1e-3, m).Qk.norm();
    const double q2 = discretize(s, 5e-4, m).Qk.norm();
    const double q3 = discretize(s, 2.5e-4, m).Qk.norm();
    EXPECT_NEAR(q1 / q2, 2.0, 1e-2);
    EXPECT_NEAR(q2 / q3, 2.0, 1e-2);
  }
}

TEST(ekf_core, propagate_covariance_trivial_cases) {
  std::mt19937_64 rng(3);
  const Eigen::MatrixXd Q = random_spd(rng, 3);
  EXPECT_TRUE(propagate_covariance(Eigen::MatrixXd::Zero(3, 3), Eigen::MatrixXd::Identity(3, 3), Q)
                  .isApprox(Q, 1e-15));
  const Eigen::MatrixXd P = random_spd(rng, 3);
  EXPECT_EQ(propagate_covariance(P, Eigen::MatrixXd::Identity(3, 3), Eigen::MatrixXd::Zero(3, 3)),
            P);
  for (int i = 0; i < 100; ++i) {
    const Eigen::MatrixXd Pi = random_spd(rng, 5), Qi = random_spd(rng, 5);
    EXPECT_GE(propagate_covariance(Pi, Eigen::MatrixXd::Identity(5, 5), Qi).trace(), Pi.trace());
  }
}

TEST(ekf_core, scalar_kalman_gain) {
  Scalar x{0.0};
  Eigen::MatrixXd P = Eigen::MatrixXd::Constant(1, 1, 1.0);
  const Eigen::MatrixXd one = Eigen::MatrixXd::Constant(1, 1, 1.0);
  ASSERT_TRUE(update(x, P, Eigen::VectorXd::Constant(1, 1.0), one, one).accepted);
  EXPECT_DOUBLE_EQ(x.value, 0.5);
  EXPECT_DOUBLE_EQ(P(0, 0), 0.5);
}

TEST(ekf_core, zero_innovation_keeps_state_and_shrinks_covariance) {
  std::mt19937_64 rng(4);
  for (int i = 0; i < 50; ++i) {
    const Eigen::MatrixXd P0 = random_spd(rng, 6);
    const Eigen::MatrixXd H = Eigen::MatrixXd::Random(2, 6);
    const Eigen::MatrixXd R = random_spd(rng, 2);
    Eigen::MatrixXd P = P0;
    const UpdateResult r = kalman_correction(P, Eigen::Vector2d::Zero(), H, R);
    ASSERT_TRUE(r.accepted);
    EXPECT_TRUE(r.correction.isZero(0.0));
    EXPECT_LE(P.trace(), P0.trace());
    // P- - P+ is PSD, and strictly positive along the measured directions
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(P0 - P);
    EXPECT_GT(es.eigenvalues().minCoeff(), -1e-12);
    const Eigen::MatrixXd proj = H * (P0 - P) * H.transpose();
    EXPECT_GT(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(proj).eigenvalues().minCoeff(), 0.0);
  }
}
