// Copyright Contributors to the splatslam project
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <array>

namespace splatslam {

/// Minimum camera-frame depth accepted by the projection operations.
inline constexpr double kEpsilonZ = 1e-6;

/// Below this rotation angle the exponential/logarithm switch to their
/// Taylor branches.
inline constexpr double kSmallAngle = 1e-8;

struct CameraIntrinsics {
  double fx = 0.0;
  double fy = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 0;
  int height = 0;
};

/// Minimal se(3) increment, ordered [rho; theta].
struct TwistVector {
  Eigen::Vector3d rho = Eigen::Vector3d::Zero();
  Eigen::Vector3d theta = Eigen::Vector3d::Zero();

  TwistVector() = default;
  TwistVector(const Eigen::Vector3d& rho_in, const Eigen::Vector3d& theta_in)
      : rho(rho_in), theta(theta_in) {}
  explicit TwistVector(const Eigen::Matrix<double, 6, 1>& stacked)
      : rho(stacked.head<3>()), theta(stacked.tail<3>()) {}

  Eigen::Matrix<double, 6, 1> stacked() const {
    Eigen::Matrix<double, 6, 1> out;
    out << rho, theta;
    return out;
  }
};

/// Rigid transform mapping world points into the camera frame (T_CW).
struct SE3Pose {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  SE3Pose() = default;
  SE3Pose(const Eigen::Matrix3d& r, const Eigen::Vector3d& t)
      : rotation(r), translation(t) {}

  Eigen::Vector3d operator*(const Eigen::Vector3d& p) const {
    return rotation * p + translation;
  }

  SE3Pose operator*(const SE3Pose& rhs) const {
    return {rotation * rhs.rotation, rotation * rhs.translation + translation};
  }

  SE3Pose inverse() const {
    Eigen::Matrix3d rt = rotation.transpose();
    return {rt, -(rt * translation)};
  }

  /// Camera centre in world coordinates (translation of T_WC).
  Eigen::Vector3d centre() const { return -(rotation.transpose() * translation); }
};

Eigen::Matrix3d skew(const Eigen::Vector3d& v);

SE3Pose exp_se3(const TwistVector& tau);
TwistVector log_se3(const SE3Pose& pose);

/// Pinhole projection of a camera-frame point. Throws NonPositiveDepth
/// when z <= kEpsilonZ.
Eigen::Vector2d project(const Eigen::Vector3d& mu_c, const CameraIntrinsics& k);

/// 2x3 Jacobian of the pinhole projection at mu_c.
Eigen::Matrix<double, 2, 3> projection_jacobian(const Eigen::Vector3d& mu_c,
                                                const CameraIntrinsics& k);

/// Derivative of the projection Jacobian wrt the camera-frame point:
/// element [k] holds dJ/d(mu_c[k]).
std::array<Eigen::Matrix<double, 2, 3>, 3> projection_jacobian_derivative(
    const Eigen::Vector3d& mu_c, const CameraIntrinsics& k);

}  // namespace splatslam
