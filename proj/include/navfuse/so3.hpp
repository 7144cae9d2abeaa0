#pragma once

// SO(3) exponential/logarithm maps and right Jacobians used by the IMU
// preintegration and the on-manifold state retraction.

#include <cmath>
#include <numbers>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace navfuse {

/// Body-to-world rotation matrix (orthonormal, det +1).
using Rotation = Eigen::Matrix3d;

inline Eigen::Matrix3d skew(const Eigen::Vector3d& v) {
  Eigen::Matrix3d s;
  s << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
      -v.y(), v.x(), 0.0;
  return s;
}

/// Rodrigues formula; second-order Taylor expansion below 1e-8 rad.
inline Rotation so3_exp(const Eigen::Vector3d& v) {
  const double theta2 = v.squaredNorm();
  const double theta = std::sqrt(theta2);
  const Eigen::Matrix3d s = skew(v);
  if (theta < 1e-8) {
    return Eigen::Matrix3d::Identity() + s + 0.5 * s * s;
  }
  const double a = std::sin(theta) / theta;
  const double b = (1.0 - std::cos(theta)) / theta2;
  return Eigen::Matrix3d::Identity() + a * s + b * s * s;
}

/// Inverse of so3_exp with a stable branch near the angle-pi singularity.
inline Eigen::Vector3d so3_log(const Rotation& r) {
  const double cos_theta = std::min(1.0, std::max(-1.0, (r.trace() - 1.0) / 2.0));
  // w = sin(theta) * axis
  const Eigen::Vector3d w(0.5 * (r(2, 1) - r(1, 2)),
                          0.5 * (r(0, 2) - r(2, 0)),
                          0.5 * (r(1, 0) - r(0, 1)));
  // atan2 over the measured sine keeps theta and the w /= sin division
  // consistent; an acos-based theta loses ~1e-9 near pi where d(theta/sin)
  // blows up as 1/sin^2.
  const double sin_theta = w.norm();
  const double theta = std::atan2(sin_theta, cos_theta);
  if (theta < 1e-8) {
    return w * (1.0 + theta * theta / 6.0);
  }
  if (theta > std::numbers::pi - 1e-6) {
    // Near pi the antisymmetric part vanishes; recover the axis from the
    // symmetric part: (R + R^T)/2 = cos(theta) I + (1 - cos(theta)) a a^T.
    const Eigen::Matrix3d aat =
        ((r + r.transpose()) * 0.5 - cos_theta * Eigen::Matrix3d::Identity()) /
        (1.0 - cos_theta);
    int k = 0;
    aat.diagonal().maxCoeff(&k);
    Eigen::Vector3d axis = aat.col(k) / std::sqrt(aat(k, k));
    if (axis.dot(w) < 0.0) axis = -axis;
    return axis * theta;
  }
  return w * (theta / sin_theta);
}

/// Right Jacobian of SO(3): Exp(v + dv) ~ Exp(v) Exp(Jr(v) dv).
inline Eigen::Matrix3d so3_right_jacobian(const Eigen::Vector3d& v) {
  const double theta2 = v.squaredNorm();
  const double theta = std::sqrt(theta2);
  const Eigen::Matrix3d s = skew(v);
  if (theta < 1e-5) {
    return Eigen::Matrix3d::Identity() - 0.5 * s + (1.0 / 6.0) * s * s;
  }
  const double a = (1.0 - std::cos(theta)) / theta2;
  const double b = (theta - std::sin(theta)) / (theta2 * theta);
  return Eigen::Matrix3d::Identity() - a * s + b * s * s;
}

/// Inverse of the right Jacobian.
inline Eigen::Matrix3d so3_right_jacobian_inverse(const Eigen::Vector3d& v) {
  const double theta2 = v.squaredNorm();
  const double theta = std::sqrt(theta2);
  const Eigen::Matrix3d s = skew(v);
  if (theta < 1e-5) {
    return Eigen::Matrix3d::Identity() + 0.5 * s + (1.0 / 12.0) * s * s;
  }
  const double sin_theta = std::sin(theta);
  const double b = 1.0 / theta2 - (1.0 + std::cos(theta)) / (2.0 * theta * sin_theta);
  return Eigen::Matrix3d::Identity() + 0.5 * s + b * s * s;
}

/// Largest absolute deviation of R^T R from identity; orthonormality check.
inline double rotation_defect(const Rotation& r) {
  return (r.transpose() * r - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
}

}  // namespace navfuse
