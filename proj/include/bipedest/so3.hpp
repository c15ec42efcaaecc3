#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace bipedest {

/// Unit quaternion stored vector-part first, scalar-part last.
///
/// Products and rotation matrices follow the JPL convention: a quaternion
/// describes the rotation from a reference frame A into a frame B, and
/// rotation_matrix() maps vectors expressed in A to vectors expressed in B.
/// Composition is chained left to right in the same order as the matrices,
/// i.e. rotation_matrix(a * b) == rotation_matrix(a) * rotation_matrix(b).
class Quaternion {
 public:
  Quaternion() = default;

  /// Normalizes the input. A zero input yields the identity.
  Quaternion(const Eigen::Vector3d& vec, double scalar);
  Quaternion(double x, double y, double z, double w) : Quaternion(Eigen::Vector3d(x, y, z), w) {}

  static Quaternion identity() { return {}; }
  /// Keeps (x, y, z, w) bit-for-bit when their norm is within 1e-12 of one
  /// (values read back from storage); normalizes otherwise.
  static Quaternion from_unit_coeffs(const Eigen::Vector4d& xyzw);

  const Eigen::Vector3d& vec() const { return vec_; }
  double scalar() const { return w_; }

  /// (x, y, z, w) coefficients.
  Eigen::Vector4d coeffs() const;

  Quaternion inverse() const;
  Quaternion operator-() const;

  /// Rotation matrix C(q); maps reference-frame vectors into the rotated frame.
  Eigen::Matrix3d rotation_matrix() const;

 private:
  Eigen::Vector3d vec_ = Eigen::Vector3d::Zero();
  double w_ = 1.0;
};

/// q ⊗ p in the JPL convention.
Quaternion operator*(const Quaternion& q, const Quaternion& p);

/// Exponential map from a rotation vector (axis times angle) to a unit quaternion.
Quaternion quat_exp(const Eigen::Vector3d& phi);

/// Principal logarithm; the returned rotation vector has norm in [0, π] and is
/// invariant under q -> -q.
Eigen::Vector3d quat_log(const Quaternion& q);

inline Quaternion quat_mul(const Quaternion& a, const Quaternion& b) { return a * b; }
inline Eigen::Matrix3d quat_to_rotmat(const Quaternion& q) { return q.rotation_matrix(); }

/// Cross-product matrix: skew(v) * w == v.cross(w).
Eigen::Matrix3d skew(const Eigen::Vector3d& v);

/// Z-Y-X (yaw, pitch, roll) Euler angles of the body orientation for a
/// world-to-body quaternion, returned as (roll, pitch, yaw).
Eigen::Vector3d euler_zyx(const Quaternion& world_to_body);

/// World-to-body quaternion from Z-Y-X Euler angles (roll, pitch, yaw).
Quaternion from_euler_zyx(double roll, double pitch, double yaw);

/// Wraps an angle into (-π, π].
double wrap_angle(double a);

}  // namespace bipedest
