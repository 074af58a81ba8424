#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

namespace handguide {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;

/// Proper rigid motion: p -> rotation * p + translation (meters).
class RigidTransform {
 public:
  RigidTransform() : rotation_(Mat3::Identity()), translation_(Vec3::Zero()) {}
  RigidTransform(const Mat3& rotation, const Vec3& translation)
      : rotation_(rotation), translation_(translation) {}

  static RigidTransform Identity() { return {}; }
  static RigidTransform Translation(const Vec3& t) { return {Mat3::Identity(), t}; }
  static RigidTransform Rotation(const Vec3& axis, double angle) {
    return {Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix(), Vec3::Zero()};
  }
  /// URDF convention: R = Rz(yaw) * Ry(pitch) * Rx(roll).
  static RigidTransform FromXyzRpy(const Vec3& xyz, const Vec3& rpy) {
    const Mat3 r = (Eigen::AngleAxisd(rpy.z(), Vec3::UnitZ()) *
                    Eigen::AngleAxisd(rpy.y(), Vec3::UnitY()) *
                    Eigen::AngleAxisd(rpy.x(), Vec3::UnitX()))
                       .toRotationMatrix();
    return {r, xyz};
  }
  static RigidTransform FromMatrix(const Mat4& m) {
    return {m.topLeftCorner<3, 3>(), m.topRightCorner<3, 1>()};
  }

  const Mat3& rotation() const { return rotation_; }
  const Vec3& translation() const { return translation_; }

  Vec3 operator*(const Vec3& p) const { return rotation_ * p + translation_; }
  RigidTransform operator*(const RigidTransform& other) const {
    return {rotation_ * other.rotation_, rotation_ * other.translation_ + translation_};
  }
  RigidTransform inverse() const {
    const Mat3 rt = rotation_.transpose();
    return {rt, -(rt * translation_)};
  }

  Mat4 matrix() const {
    Mat4 m = Mat4::Identity();
    m.topLeftCorner<3, 3>() = rotation_;
    m.topRightCorner<3, 1>() = translation_;
    return m;
  }

  /// Roll, pitch, yaw matching FromXyzRpy.
  Vec3 rpy() const {
    const double pitch = std::asin(std::clamp(-rotation_(2, 0), -1.0, 1.0));
    double roll = 0.0;
    double yaw = 0.0;
    if (std::abs(std::cos(pitch)) > 1e-12) {
      roll = std::atan2(rotation_(2, 1), rotation_(2, 2));
      yaw = std::atan2(rotation_(1, 0), rotation_(0, 0));
    } else {
      yaw = std::atan2(-rotation_(0, 1), rotation_(1, 1));
    }
    return {roll, pitch, yaw};
  }

  /// Frobenius deviation of R^T R from identity plus |det R - 1|.
  double orthonormality_error() const {
    return (rotation_.transpose() * rotation_ - Mat3::Identity()).norm() +
           std::abs(rotation_.determinant() - 1.0);
  }

 private:
  Mat3 rotation_;
  Vec3 translation_;
};

/// Rotation angle (radians) of a relative rotation.
inline double rotation_angle(const Mat3& r) {
  const double c = std::clamp((r.trace() - 1.0) / 2.0, -1.0, 1.0);
  return std::acos(c);
}

struct PoseError {
  double translation = 0.0;  // m
  double rotation = 0.0;     // rad
};

inline PoseError pose_error(const RigidTransform& estimate, const RigidTransform& truth) {
  return {(estimate.translation() - truth.translation()).norm(),
          rotation_angle(truth.rotation().transpose() * estimate.rotation())};
}

/// Closest point on triangle (a, b, c) to p.
inline Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 ab = b - a;
  const Vec3 ac = c - a;
  const Vec3 ap = p - a;
  const double d1 = ab.dot(ap);
  const double d2 = ac.dot(ap);
  if (d1 <= 0.0 && d2 <= 0.0) return a;
  const Vec3 bp = p - b;
  const double d3 = ab.dot(bp);
  const double d4 = ac.dot(bp);
  if (d3 >= 0.0 && d4 <= d3) return b;
  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) return a + ab * (d1 / (d1 - d3));
  const Vec3 cp = p - c;
  const double d5 = ab.dot(cp);
  const double d6 = ac.dot(cp);
  if (d6 >= 0.0 && d5 <= d6) return c;
  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) return a + ac * (d2 / (d2 - d6));
  const double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
    return b + (c - b) * ((d4 - d3) / ((d4 - d3) + (d5 - d6)));
  }
  const double denom = 1.0 / (va + vb + vc);
  return a + ab * (vb * denom) + ac * (vc * denom);
}

}  // namespace handguide
