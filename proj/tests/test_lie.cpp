#include <doctest.h>

#include <Eigen/Geometry>
#include <random>

#include "splatslam/errors.hpp"
#include "splatslam/lie.hpp"

#include "support/oracles.hpp"

using namespace splatslam;

namespace {

TwistVector random_twist(std::mt19937_64& rng, double max_angle) {
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  Eigen::Vector3d axis(unit(rng), unit(rng), unit(rng));
  axis.normalize();
  std::uniform_real_distribution<double> mag(0.0, max_angle);
  TwistVector tau;
  tau.theta = axis * mag(rng);
  tau.rho = Eigen::Vector3d(unit(rng), unit(rng), unit(rng)) * 2.0;
  return tau;
}

}  // namespace

TEST_CASE("skew basics") {
  CHECK(skew(Eigen::Vector3d::Zero()).isZero(0.0));

  Eigen::Matrix3d expected;
  expected << 0, 0, 0, 0, 0, -1, 0, 1, 0;
  CHECK(skew(Eigen::Vector3d(1, 0, 0)).isApprox(expected, 0.0));

  const Eigen::Vector3d v(3, -2, 5);
  CHECK((skew(v) * v).isZero(0.0));

  // Antisymmetry is exact.
  const Eigen::Matrix3d s = skew(Eigen::Vector3d(0.3, -1.7, 2.9));
  CHECK((s.transpose() + s).isZero(0.0));

  // skew(v) * w == v x w.
  const Eigen::Vector3d w(-1.0, 0.5, 2.0);
  CHECK((skew(v) * w).isApprox(v.cross(w), 1e-15));
}

TEST_CASE("exp of zero twist is identity") {
  const SE3Pose p = exp_se3(TwistVector{});
  CHECK(p.rotation.isIdentity(0.0));
  CHECK(p.translation.isZero(0.0));
}

TEST_CASE("exp matches the Rodrigues oracle for a 90 degree z rotation") {
  TwistVector tau;
  tau.theta = Eigen::Vector3d(0, 0, M_PI / 2);
  const SE3Pose p = exp_se3(tau);

  const Eigen::Matrix3d oracle =
      Eigen::AngleAxisd(M_PI / 2, Eigen::Vector3d::UnitZ()).toRotationMatrix();
  CHECK(p.rotation.isApprox(oracle, 1e-12));
  CHECK(p.translation.isZero(0.0));  // V(theta) * 0 = 0
}

TEST_CASE("exp matches the Rodrigues oracle on random axes") {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 50; ++i) {
    const TwistVector tau = random_twist(rng, 3.0);
    const SE3Pose p = exp_se3(tau);
    const double angle = tau.theta.norm();
    const Eigen::Matrix3d oracle =
        Eigen::AngleAxisd(angle, tau.theta / angle).toRotationMatrix();
    CHECK(p.rotation.isApprox(oracle, 1e-12));
    CHECK(p.rotation.determinant() == doctest::Approx(1.0).epsilon(1e-9));
    CHECK((p.rotation * p.rotation.transpose()).isIdentity(1e-9));
  }
}

TEST_CASE("log of identity and of pure translations") {
  CHECK(log_se3(SE3Pose{}).stacked().isZero(0.0));

  SE3Pose p;
  p.translation = Eigen::Vector3d(1, 2, 3);
  const TwistVector tau = log_se3(p);
  CHECK(tau.theta.isZero(0.0));
  CHECK(tau.rho.isApprox(Eigen::Vector3d(1, 2, 3), 1e-15));
}

TEST_CASE("exp/log round trips to 1e-8 for angles below pi") {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 100; ++i) {
    const TwistVector tau = random_twist(rng, M_PI - 1e-3);
    const TwistVector back = log_se3(exp_se3(tau));
    CHECK((back.stacked() - tau.stacked()).norm() < 1e-8);
  }
  // And through the pose side.
  for (int i = 0; i < 100; ++i) {
    const SE3Pose p = exp_se3(random_twist(rng, M_PI - 1e-3));
    const SE3Pose q = exp_se3(log_se3(p));
    CHECK((q.rotation - p.rotation).norm() < 1e-8);
    CHECK((q.translation - p.translation).norm() < 1e-8);
  }
}

TEST_CASE("exp(tau) composed with exp(-tau) is the identity") {
  std::mt19937_64 rng(13);
  for (int i = 0; i < 50; ++i) {
    const TwistVector tau = random_twist(rng, 3.0);
    const TwistVector neg(-tau.rho, -tau.theta);
    const SE3Pose p = exp_se3(tau) * exp_se3(neg);
    CHECK((p.rotation - Eigen::Matrix3d::Identity()).norm() < 1e-9);
    CHECK(p.translation.norm() < 1e-9);
  }
}

TEST_CASE("small-angle branches stay accurate") {
  TwistVector tau;
  tau.theta = Eigen::Vector3d(1e-9, -2e-9, 1.5e-9);
  tau.rho = Eigen::Vector3d(0.5, -0.25, 1.0);
  const TwistVector back = log_se3(exp_se3(tau));
  CHECK((back.stacked() - tau.stacked()).norm() < 1e-15);
}

TEST_CASE("pinhole projection") {
  const CameraIntrinsics k{100, 100, 50, 50, 100, 100};
  CHECK(project({0, 0, 2}, k).isApprox(Eigen::Vector2d(50, 50), 0.0));
  CHECK(project({1, 0, 2}, k).isApprox(Eigen::Vector2d(100, 50), 1e-12));
  CHECK_THROWS_AS(project({0, 0, 1e-9}, k), NonPositiveDepth);
  CHECK_THROWS_AS(project({0, 0, -1}, k), NonPositiveDepth);
}

TEST_CASE("projection jacobian closed forms") {
  const CameraIntrinsics k{100, 100, 50, 50, 100, 100};
  Eigen::Matrix<double, 2, 3> expected;
  expected << 50, 0, 0, 0, 50, 0;
  CHECK(projection_jacobian({0, 0, 2}, k).isApprox(expected, 0.0));

  const CameraIntrinsics unit_k{1, 1, 0, 0, 10, 10};
  expected << 1, 0, -1, 0, 1, -1;
  CHECK(projection_jacobian({1, 1, 1}, unit_k).isApprox(expected, 1e-15));
}

TEST_CASE("projection jacobian matches finite differences") {
  const CameraIntrinsics k{120, 115, 64, 48, 128, 96};
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  int checked = 0;
  for (int i = 0; i < 100; ++i) {
    const Eigen::Vector3d p(unit(rng), unit(rng), 1.0 + 2.0 * (unit(rng) + 1.0));
    const Eigen::Matrix<double, 2, 3> j = projection_jacobian(p, k);
    const double step = 1e-6 * std::max(1.0, p.norm());
    for (int axis = 0; axis < 3; ++axis) {
      for (int row = 0; row < 2; ++row) {
        const double fd = splatslam::testing::fd_central(
            [&](double v) {
              Eigen::Vector3d q = p;
              q[axis] = v;
              return project(q, k)[row];
            },
            p[axis], step);
        const double scale = std::max(1.0, std::abs(j(row, axis)));
        CHECK(std::abs(fd - j(row, axis)) / scale < 1e-5);
        ++checked;
      }
    }
  }
  CHECK(checked == 600);
}

TEST_CASE("projection jacobian derivative matches finite differences") {
  const CameraIntrinsics k{90, 110, 40, 30, 80, 60};
  const Eigen::Vector3d p(0.4, -0.3, 2.2);
  const auto dj = projection_jacobian_derivative(p, k);
  for (int axis = 0; axis < 3; ++axis) {
    for (int r = 0; r < 2; ++r) {
      for (int c = 0; c < 3; ++c) {
        const double fd = splatslam::testing::fd_central(
            [&](double v) {
              Eigen::Vector3d q = p;
              q[axis] = v;
              return projection_jacobian(q, k)(r, c);
            },
            p[axis], 1e-6);
        CHECK(std::abs(fd - dj[axis](r, c)) < 1e-5 * std::max(1.0, std::abs(fd)));
      }
    }
  }
}

TEST_CASE("se3 composition and inverse preserve orthonormality") {
  std::mt19937_64 rng(23);
  SE3Pose acc;
  for (int i = 0; i < 64; ++i) {
    acc = exp_se3(random_twist(rng, 2.0)) * acc;
  }
  CHECK((acc.rotation * acc.rotation.transpose()).isIdentity(1e-9));
  CHECK(acc.rotation.determinant() == doctest::Approx(1.0).epsilon(1e-9));
  const SE3Pose round = acc * acc.inverse();
  CHECK(round.rotation.isIdentity(1e-12));
  CHECK(round.translation.norm() < 1e-12);
}
