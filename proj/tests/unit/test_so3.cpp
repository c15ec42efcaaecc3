#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "bipedest/so3.hpp"
#include "oracles.hpp"

using namespace bipedest;

namespace {

Eigen::Vector3d random_rotation_vector(std::mt19937_64& rng, double max_angle) {
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::Vector3d axis(n(rng), n(rng), n(rng));
  return axis.normalized() * (max_angle * u(rng));
}

}  // namespace

TEST(so3, exp_matches_axis_angle) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 1000; ++i) {
    const Eigen::Vector3d phi = random_rotation_vector(rng, M_PI);
    EXPECT_LT((quat_exp(phi).rotation_matrix() - oracle::passive_rotation(phi)).norm(), 1e-14);
  }
}

TEST(so3, exp_log_roundtrip) {
  std::mt19937_64 rng(12);
  for (int i = 0; i < 10000; ++i) {
    const Eigen::Vector3d phi = random_rotation_vector(rng, M_PI - 1e-6);
    EXPECT_LT((quat_log(quat_exp(phi)) - phi).norm(), 1e-12);
  }
  // small angles go through the series branch
  for (double a : {0.0, 1e-300, 1e-12, 1e-8, 1e-5}) {
    const Eigen::Vector3d phi(a, -2.0 * a, 0.5 * a);
    EXPECT_LE((quat_log(quat_exp(phi)) - phi).norm(), 1e-12 * std::max(1.0, phi.norm()));
  }
}

TEST(so3, log_is_sign_invariant) {
  std::mt19937_64 rng(13);
  for (int i = 0; i < 100; ++i) {
    const Quaternion q = oracle::random_rotation(rng);
    EXPECT_LT((quat_log(q) - quat_log(-q)).norm(), 1e-12);
    EXPECT_LE(quat_log(q).norm(), M_PI + 1e-12);
  }
}

TEST(so3, homomorphism_and_unit_norm) {
  std::mt19937_64 rng(14);
  Quaternion chain;
  Eigen::Matrix3d chain_c = Eigen::Matrix3d::Identity();
  for (int i = 0; i < 10000; ++i) {
    const Quaternion a = oracle::random_rotation(rng);
    const Quaternion b = oracle::random_rotation(rng);
    const Quaternion ab = a * b;
    EXPECT_LT((ab.rotation_matrix() - a.rotation_matrix() * b.rotation_matrix()).norm(), 1e-13);
    EXPECT_NEAR(ab.coeffs().norm(), 1.0, 1e-14);
    EXPECT_LT(((a * a.inverse()).coeffs() - Quaternion::identity().coeffs()).norm(), 1e-14);
    chain = chain * a;
    chain_c = chain_c * a.rotation_matrix();
  }
  EXPECT_NEAR(chain.coeffs().norm(), 1.0, 1e-12);
  EXPECT_LT((chain.rotation_matrix() - chain_c).norm(), 1e-10);
}

TEST(so3, rotation_matrix_is_orthonormal) {
  std::mt19937_64 rng(15);
  for (int i = 0; i < 100; ++i) {
    const Eigen::Matrix3d c = oracle::random_rotation(rng).rotation_matrix();
    EXPECT_LT((c * c.transpose() - Eigen::Matrix3d::Identity()).norm(), 1e-14);
    EXPECT_NEAR(c.determinant(), 1.0, 1e-14);
  }
}

TEST(so3, constructor_normalizes) {
  const Quaternion q(1.0, 2.0, 3.0, 4.0);
  EXPECT_NEAR(q.coeffs().norm(), 1.0, 1e-15);
  const Quaternion z(0.0, 0.0, 0.0, 0.0);
  EXPECT_EQ(z.coeffs(), Quaternion::identity().coeffs());
}

TEST(so3, from_unit_coeffs_keeps_bits) {
  std::mt19937_64 rng(16);
  for (int i = 0; i < 100; ++i) {
    const Eigen::Vector4d c = oracle::random_rotation(rng).coeffs();
    EXPECT_EQ(Quaternion::from_unit_coeffs(c).coeffs(), c);
  }
  EXPECT_DOUBLE_EQ(Quaternion::from_unit_coeffs(Eigen::Vector4d(0, 0, 0, 2)).scalar(), 1.0);
}

TEST(so3, skew_is_cross_product) {
  const Eigen::Vector3d a(0.3, -1.2, 2.0), b(-0.7, 0.1, 0.4);
  EXPECT_LT((skew(a) * b - a.cross(b)).norm(), 1e-15);
  EXPECT_TRUE((skew(a) + skew(a).transpose()).isZero(0.0));
}

TEST(so3, euler_zyx_convention) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-1.4, 1.4);
  for (int i = 0; i < 200; ++i) {
    const double roll = 2.0 * u(rng), pitch = u(rng), yaw = 2.0 * u(rng);
    // body -> world is Rz(yaw) Ry(pitch) Rx(roll)
    const Eigen::Matrix3d r_wb = (Eigen::AngleAxisd(yaw, Eigen::Vector3d::UnitZ()) *
                                  Eigen::AngleAxisd(pitch, Eigen::Vector3d::UnitY()) *
                                  Eigen::AngleAxisd(roll, Eigen::Vector3d::UnitX()))
                                     .toRotationMatrix();
    const Quaternion q = from_euler_zyx(roll, pitch, yaw);
    EXPECT_LT((q.rotation_matrix() - r_wb.transpose()).norm(), 1e-14);
    const Eigen::Vector3d e = euler_zyx(q);
    EXPECT_NEAR(e.x(), roll, 1e-12);
    EXPECT_NEAR(e.y(), pitch, 1e-12);
    EXPECT_NEAR(e.z(), yaw, 1e-12);
  }
}

TEST(so3, wrap_angle_range) {
  EXPECT_DOUBLE_EQ(wrap_angle(M_PI), M_PI);
  EXPECT_DOUBLE_EQ(wrap_angle(-M_PI), M_PI);
  EXPECT_NEAR(wrap_angle(3.0 * M_PI + 0.1), -M_PI + 0.1, 1e-12);
  EXPECT_NEAR(wrap_angle(-0.2), -0.2, 0.0);
}
