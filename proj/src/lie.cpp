// Copyright Contributors to the splatslam project
// SPDX-License-Identifier: Apache-2.0
#include "splatslam/lie.hpp"

#include <cmath>

#include "splatslam/errors.hpp"

namespace splatslam {

Eigen::Matrix3d skew(const Eigen::Vector3d& v) {
  Eigen::Matrix3d m;
  m << 0.0, -v.z(), v.y(),  //
      v.z(), 0.0, -v.x(),   //
      -v.y(), v.x(), 0.0;
  return m;
}

namespace {

// Rodrigues coefficients A = sin(t)/t, B = (1-cos(t))/t^2, C = (t-sin(t))/t^3
// with Taylor branches near zero. B uses the half-angle identity which stays
// accurate for all angles.
struct RotationCoeffs {
  double a, b, c;
};

RotationCoeffs rotation_coeffs(double angle) {
  if (angle < kSmallAngle) {
    const double t2 = angle * angle;
    return {1.0 - t2 / 6.0, 0.5 - t2 / 24.0, 1.0 / 6.0 - t2 / 120.0};
  }
  const double s = std::sin(angle);
  const double sh = std::sin(0.5 * angle);
  const double a = s / angle;
  const double b = 2.0 * sh * sh / (angle * angle);
  const double c = (angle - s) / (angle * angle * angle);
  return {a, b, c};
}

}  // namespace

SE3Pose exp_se3(const TwistVector& tau) {
  const double angle = tau.theta.norm();
  const Eigen::Matrix3d k = skew(tau.theta);
  const Eigen::Matrix3d k2 = k * k;
  const RotationCoeffs w = rotation_coeffs(angle);

  SE3Pose out;
  out.rotation = Eigen::Matrix3d::Identity() + w.a * k + w.b * k2;
  const Eigen::Matrix3d v = Eigen::Matrix3d::Identity() + w.b * k + w.c * k2;
  out.translation = v * tau.rho;
  return out;
}

TwistVector log_se3(const SE3Pose& pose) {
  // Quaternion-based rotation log: stable over the whole ||theta|| < pi domain.
  Eigen::Quaterniond q(pose.rotation);
  if (q.w() < 0.0) q.coeffs() = -q.coeffs();
  const Eigen::Vector3d vec(q.x(), q.y(), q.z());
  const double vec_norm = vec.norm();

  Eigen::Vector3d theta;
  if (vec_norm < kSmallAngle) {
    theta = (2.0 / q.w()) * vec;
  } else {
    const double angle = 2.0 * std::atan2(vec_norm, q.w());
    theta = (angle / vec_norm) * vec;
  }

  const double angle = theta.norm();
  const Eigen::Matrix3d k = skew(theta);
  const Eigen::Matrix3d k2 = k * k;

  // V^{-1} = I - k/2 + coeff * k^2 with
  // coeff = (1 - A/(2B)) / theta^2, Taylor 1/12 + t^2/720 near zero.
  double coeff;
  if (angle < kSmallAngle) {
    coeff = 1.0 / 12.0 + angle * angle / 720.0;
  } else {
    const RotationCoeffs w = rotation_coeffs(angle);
    coeff = (1.0 - w.a / (2.0 * w.b)) / (angle * angle);
  }
  const Eigen::Matrix3d v_inv =
      Eigen::Matrix3d::Identity() - 0.5 * k + coeff * k2;

  TwistVector tau;
  tau.theta = theta;
  tau.rho = v_inv * pose.translation;
  return tau;
}

Eigen::Vector2d project(const Eigen::Vector3d& mu_c, const CameraIntrinsics& k) {
  if (mu_c.z() <= kEpsilonZ) throw NonPositiveDepth(mu_c.z());
  const double inv_z = 1.0 / mu_c.z();
  return {k.fx * mu_c.x() * inv_z + k.cx, k.fy * mu_c.y() * inv_z + k.cy};
}

Eigen::Matrix<double, 2, 3> projection_jacobian(const Eigen::Vector3d& mu_c,
                                                const CameraIntrinsics& k) {
  if (mu_c.z() <= kEpsilonZ) throw NonPositiveDepth(mu_c.z());
  const double inv_z = 1.0 / mu_c.z();
  const double inv_z2 = inv_z * inv_z;
  Eigen::Matrix<double, 2, 3> j;
  j << k.fx * inv_z, 0.0, -k.fx * mu_c.x() * inv_z2,  //
      0.0, k.fy * inv_z, -k.fy * mu_c.y() * inv_z2;
  return j;
}

std::array<Eigen::Matrix<double, 2, 3>, 3> projection_jacobian_derivative(
    const Eigen::Vector3d& mu_c, const CameraIntrinsics& k) {
  if (mu_c.z() <= kEpsilonZ) throw NonPositiveDepth(mu_c.z());
  const double inv_z = 1.0 / mu_c.z();
  const double inv_z2 = inv_z * inv_z;
  const double inv_z3 = inv_z2 * inv_z;

  std::array<Eigen::Matrix<double, 2, 3>, 3> d;
  for (auto& m : d) m.setZero();
  // d/dx: only J(0,2) varies.
  d[0](0, 2) = -k.fx * inv_z2;
  // d/dy: only J(1,2) varies.
  d[1](1, 2) = -k.fy * inv_z2;
  // d/dz.
  d[2](0, 0) = -k.fx * inv_z2;
  d[2](1, 1) = -k.fy * inv_z2;
  d[2](0, 2) = 2.0 * k.fx * mu_c.x() * inv_z3;
  d[2](1, 2) = 2.0 * k.fy * mu_c.y() * inv_z3;
  return d;
}

}  // namespace splatslam
