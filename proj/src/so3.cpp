#include "bipedest/so3.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace bipedest {

namespace {
constexpr double kSmallAngle = 1e-8;
}

Quaternion::Quaternion(const Eigen::Vector3d& vec, double scalar) {
  const double n = std::sqrt(vec.squaredNorm() + scalar * scalar);
  if (n == 0.0 || !std::isfinite(n)) {
    return;
  }
  vec_ = vec / n;
  w_ = scalar / n;
}

Quaternion Quaternion::from_unit_coeffs(const Eigen::Vector4d& xyzw) {
  if (std::abs(xyzw.norm() - 1.0) > 1e-12) {
    return {xyzw.head<3>(), xyzw[3]};
  }
  Quaternion q;
  q.vec_ = xyzw.head<3>();
  q.w_ = xyzw[3];
  return q;
}

Eigen::Vector4d Quaternion::coeffs() const { return {vec_.x(), vec_.y(), vec_.z(), w_}; }

Quaternion Quaternion::inverse() const { return {-vec_, w_}; }

Quaternion Quaternion::operator-() const { return {-vec_, -w_}; }

Eigen::Matrix3d Quaternion::rotation_matrix() const {
  return (2.0 * w_ * w_ - 1.0) * Eigen::Matrix3d::Identity() - 2.0 * w_ * skew(vec_) +
         2.0 * vec_ * vec_.transpose();
}

Quaternion operator*(const Quaternion& q, const Quaternion& p) {
  const Eigen::Vector3d& qv = q.vec();
  const Eigen::Vector3d& pv = p.vec();
  const double qw = q.scalar();
  const double pw = p.scalar();
  return {qw * pv + pw * qv - qv.cross(pv), qw * pw - qv.dot(pv)};
}

Quaternion quat_exp(const Eigen::Vector3d& phi) {
  const double angle = phi.norm();
  if (angle < kSmallAngle) {
    const double a2 = angle * angle;
    return {0.5 * phi * (1.0 - a2 / 24.0), 1.0 - a2 / 8.0};
  }
  const double half = 0.5 * angle;
  return {std::sin(half) * phi / angle, std::cos(half)};
}

Eigen::Vector3d quat_log(const Quaternion& q_in) {
  const Quaternion q = q_in.scalar() < 0.0 ? -q_in : q_in;
  const double vn = q.vec().norm();
  if (vn < kSmallAngle) {
    // angle = 2 atan(vn / w) ~ 2 vn / w (1 - vn^2 / (3 w^2))
    const double w = q.scalar();
    return 2.0 * q.vec() / w * (1.0 - vn * vn / (3.0 * w * w));
  }
  const double angle = 2.0 * std::atan2(vn, q.scalar());
  return angle / vn * q.vec();
}

Eigen::Matrix3d skew(const Eigen::Vector3d& v) {
  Eigen::Matrix3d m;
  m << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
       -v.y(), v.x(), 0.0;
  return m;
}

Eigen::Vector3d euler_zyx(const Quaternion& world_to_body) {
  const Eigen::Matrix3d r = world_to_body.rotation_matrix().transpose();
  const double pitch = std::asin(std::clamp(-r(2, 0), -1.0, 1.0));
  return {std::atan2(r(2, 1), r(2, 2)), pitch, std::atan2(r(1, 0), r(0, 0))};
}

Quaternion from_euler_zyx(double roll, double pitch, double yaw) {
  return quat_exp(Eigen::Vector3d(roll, 0, 0)) * quat_exp(Eigen::Vector3d(0, pitch, 0)) *
         quat_exp(Eigen::Vector3d(0, 0, yaw));
}

double wrap_angle(double a) {
  a = std::remainder(a, 2.0 * std::numbers::pi);
  return a <= -std::numbers::pi ? a + 2.0 * std::numbers::pi : a;
}

}  // namespace bipedest
