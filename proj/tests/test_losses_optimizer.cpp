#include <doctest.h>

#include <algorithm>
#include <random>

#include "splatslam/errors.hpp"
#include "splatslam/losses.hpp"
#include "splatslam/optimizer.hpp"

#include "support/oracles.hpp"

using namespace splatslam;
using splatslam::testing::fd_central;

TEST_CASE("photometric loss basics") {
  Image a(4, 3, 3, 0.4), b(4, 3, 3, 0.4);
  const Mask mask = full_mask(4, 3);

  CHECK(photometric_loss(a, b, mask).value == 0.0);

  for (double& v : a.data) v += 0.1;
  CHECK(photometric_loss(a, b, mask).value == doctest::Approx(0.1).epsilon(1e-12));

  CHECK_THROWS_AS(photometric_loss(a, b, Mask(4, 3, false)), EmptyMask);
}

TEST_CASE("photometric loss matches a brute-force mean-abs oracle") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Image a(7, 5, 3), b(7, 5, 3);
  for (double& v : a.data) v = unit(rng);
  for (double& v : b.data) v = unit(rng);
  Mask mask(7, 5);
  for (int y = 0; y < 5; ++y)
    for (int x = 0; x < 7; ++x) mask.set(x, y, unit(rng) > 0.4);
  REQUIRE(mask.count() > 0);

  double expected = 0.0;
  size_t n = 0;
  for (int y = 0; y < 5; ++y) {
    for (int x = 0; x < 7; ++x) {
      if (!mask.at(x, y)) continue;
      for (int c = 0; c < 3; ++c) {
        expected += std::abs(a.at(x, y, c) - b.at(x, y, c));
        ++n;
      }
    }
  }
  expected /= n;
  const ScalarLoss loss = photometric_loss(a, b, mask);
  CHECK(loss.value == doctest::Approx(expected).epsilon(1e-15));
  // Gradient zero outside the mask, sign/n inside.
  for (int y = 0; y < 5; ++y) {
    for (int x = 0; x < 7; ++x) {
      for (int c = 0; c < 3; ++c) {
        if (!mask.at(x, y)) {
          CHECK(loss.grad.at(x, y, c) == 0.0);
        } else {
          const double r = a.at(x, y, c) - b.at(x, y, c);
          CHECK(loss.grad.at(x, y, c) ==
                doctest::Approx((r > 0 ? 1.0 : -1.0) / n));
        }
      }
    }
  }
}

TEST_CASE("geometric loss basics and mask exclusion") {
  Image d1(4, 4, 1, 1.0), d2(4, 4, 1, 0.95);
  CHECK(geometric_loss(d1, d1, full_mask(4, 4)).value == 0.0);
  CHECK(geometric_loss(d1, d2, full_mask(4, 4)).value ==
        doctest::Approx(0.05).epsilon(1e-12));

  // Excluded pixels carry arbitrary values without affecting the result.
  Mask m = full_mask(4, 4);
  m.set(0, 0, false);
  d1.at(0, 0) = 1e9;
  CHECK(geometric_loss(d1, d2, m).value == doctest::Approx(0.05).epsilon(1e-12));
  CHECK_THROWS_AS(geometric_loss(d1, d2, Mask(4, 4, false)), EmptyMask);
}

TEST_CASE("depth mask excludes invalid depth and transparent pixels") {
  Image depth(2, 2, 1, 1.0);
  depth.at(0, 0) = 0.0;
  Image acc(2, 2, 1, 0.9);
  acc.at(1, 0) = 0.3;
  const Mask m = depth_mask(depth, acc, 0.5);
  CHECK_FALSE(m.at(0, 0));  // no observation
  CHECK_FALSE(m.at(1, 0));  // not opaque enough
  CHECK(m.at(0, 1));
  CHECK(m.at(1, 1));
}

TEST_CASE("isotropic loss value and gradient") {
  SUBCASE("isotropic gaussians cost nothing") {
    std::vector<Eigen::Vector3d> s = {Eigen::Vector3d::Constant(std::log(0.3)),
                                      Eigen::Vector3d::Constant(std::log(1.7))};
    const IsotropicLoss loss = isotropic_loss(s);
    CHECK(loss.value == 0.0);
    CHECK(loss.d_log_scale[0].isZero(0.0));
  }

  SUBCASE("hand-computed anisotropic case") {
    // s = (1,1,4): mean 2, |1-2|+|1-2|+|4-2| = 4, over N=1 gaussians.
    std::vector<Eigen::Vector3d> s = {
        {std::log(1.0), std::log(1.0), std::log(4.0)}};
    CHECK(isotropic_loss(s).value == doctest::Approx(4.0).epsilon(1e-12));
  }

  SUBCASE("gradient matches finite differences") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    std::vector<Eigen::Vector3d> s(5);
    for (auto& v : s) v = Eigen::Vector3d(unit(rng), unit(rng), unit(rng));
    const IsotropicLoss loss = isotropic_loss(s);
    for (size_t i = 0; i < s.size(); ++i) {
      for (int a = 0; a < 3; ++a) {
        const double fd = fd_central(
            [&](double v) {
              auto copy = s;
              copy[i][a] = v;
              return isotropic_loss(copy).value;
            },
            s[i][a], 1e-6);
        CHECK(std::abs(fd - loss.d_log_scale[i][a]) < 1e-5);
      }
    }
  }

  SUBCASE("storage order invariance") {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    std::vector<Eigen::Vector3d> s(8);
    for (auto& v : s) v = Eigen::Vector3d(unit(rng), unit(rng), unit(rng));
    auto shuffled = s;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    CHECK(isotropic_loss(s).value ==
          doctest::Approx(isotropic_loss(shuffled).value).epsilon(1e-14));
  }
}

TEST_CASE("smoothed sign is zero at zero and saturates") {
  CHECK(smoothed_sign(0.0) == 0.0);
  CHECK(smoothed_sign(5e-7) == doctest::Approx(0.5));
  CHECK(smoothed_sign(2.0) == 1.0);
  CHECK(smoothed_sign(-2.0) == -1.0);
}

TEST_CASE("adam first step matches the hand-computed update") {
  AdamArray adam;
  std::vector<double> params = {0.0};
  std::vector<double> grads = {1.0};
  adam.step(std::span<double>(params), std::span<const double>(grads), 0.1);
  // m_hat = 1, v_hat = 1 -> step = -lr / (1 + eps).
  CHECK(params[0] == doctest::Approx(-0.1).epsilon(1e-7));

  // Constant gradient keeps walking the same way.
  adam.step(std::span<double>(params), std::span<const double>(grads), 0.1);
  CHECK(params[0] == doctest::Approx(-0.2).epsilon(1e-6));
}

TEST_CASE("adam with zero gradient or zero lr leaves parameters unchanged") {
  AdamArray adam;
  std::vector<double> params = {1.5, -2.0};
  std::vector<double> zeros = {0.0, 0.0};
  adam.step(std::span<double>(params), std::span<const double>(zeros), 0.1);
  CHECK(params[0] == 1.5);
  CHECK(params[1] == -2.0);

  std::vector<double> grads = {3.0, -1.0};
  adam.step(std::span<double>(params), std::span<const double>(grads), 0.0);
  CHECK(params[0] == 1.5);
  CHECK(params[1] == -2.0);
}

TEST_CASE("adam rejects shape mismatches") {
  AdamArray adam;
  std::vector<double> params = {0.0};
  std::vector<double> grads = {1.0, 2.0};
  CHECK_THROWS_AS(
      adam.step(std::span<double>(params), std::span<const double>(grads), 0.1),
      ShapeMismatch);
}

TEST_CASE("pose step with a pure-rotation gradient keeps the translation") {
  PoseOptimizer opt(0.003, 0.001);
  SE3Pose pose;
  pose.translation = Eigen::Vector3d(1, 2, 3);
  Eigen::Matrix<double, 6, 1> grad = Eigen::Matrix<double, 6, 1>::Zero();
  grad[4] = 1.0;  // theta_y

  const SE3Pose before = pose;
  const double delta = opt.step(pose, grad);
  CHECK(delta == doctest::Approx(0.003).epsilon(1e-6));
  // A pure-rotation left perturbation rotates the camera in place: the
  // camera centre stays put while the orientation moves.
  CHECK(pose.centre().isApprox(before.centre(), 1e-12));
  CHECK_FALSE(pose.rotation.isApprox(before.rotation, 1e-9));
}

TEST_CASE("pose step applies the left retraction") {
  PoseOptimizer opt(0.003, 0.001);
  SE3Pose pose = exp_se3(TwistVector({0.3, -0.2, 0.5}, {0.1, 0.2, -0.1}));
  Eigen::Matrix<double, 6, 1> grad;
  grad << 1, -2, 0.5, 0.2, 0.1, -0.4;

  // Replicate the Adam arithmetic for one step.
  const double bc1 = 1.0 - 0.9, bc2 = 1.0 - 0.999;
  Eigen::Matrix<double, 6, 1> delta;
  for (int i = 0; i < 6; ++i) {
    const double m = (1.0 - 0.9) * grad[i] / bc1;
    const double v = (1.0 - 0.999) * grad[i] * grad[i] / bc2;
    delta[i] = (i < 3 ? 0.001 : 0.003) * m / (std::sqrt(v) + 1e-8);
  }
  const SE3Pose expected =
      exp_se3(TwistVector(-delta.head<3>(), -delta.tail<3>())) * pose;

  opt.step(pose, grad);
  CHECK(pose.rotation.isApprox(expected.rotation, 1e-12));
  CHECK(pose.translation.isApprox(expected.translation, 1e-12));
}

TEST_CASE("map optimizer steps all groups and renormalizes quaternions") {
  GaussianMap map;
  map.append({0, 0, 2}, Eigen::Vector3d::Zero(), {1, 0, 0, 0}, 0.0,
             Eigen::Vector3d::Zero(), 0);
  GradientBuffers grads;
  grads.resize(1);
  grads.d_mean_w[0] = Eigen::Vector3d(1, 0, 0);
  grads.d_rotation_q[0] = Eigen::Vector4d(0, 1, 0, 0);
  grads.d_opacity_logit[0] = 1.0;

  MapLearningRates rates;
  MapOptimizer opt(rates);
  opt.step(map, grads);

  CHECK(map.mean_w[0].x() == doctest::Approx(-rates.position).epsilon(1e-6));
  CHECK(map.rotation_q[0].norm() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(map.opacity_logit[0] == doctest::Approx(-rates.opacity).epsilon(1e-6));
  // Untouched groups hold still.
  CHECK(map.log_scale[0].isZero(1e-15));
  CHECK(map.colour_logit[0].isZero(1e-15));
}

TEST_CASE("map optimizer state follows prune compaction") {
  GaussianMap map;
  for (int i = 0; i < 3; ++i) {
    map.append({0, 0, 2.0 + i}, Eigen::Vector3d::Zero(), {1, 0, 0, 0},
               logit(0.9), Eigen::Vector3d::Zero(), 0);
  }
  GradientBuffers grads;
  grads.resize(3);
  grads.d_mean_w[2] = Eigen::Vector3d(1, 1, 1);  // momentum only on id 2

  MapOptimizer opt;
  opt.step(map, grads);
  const Eigen::Vector3d after_first = map.mean_w[2];

  // Remove id 0; id 2 becomes id 1 and keeps its momentum.
  map.opacity_logit[0] = logit(0.1);
  std::vector<int> observers(3, 5);
  const PruneResult pr = prune(map, observers, 0, false);
  REQUIRE(pr.removed == 1);
  opt.on_prune(pr.old_to_new);

  GradientBuffers grads2;
  grads2.resize(2);
  opt.step(map, grads2);  // zero gradient, but momentum keeps id 1 moving
  CHECK((map.mean_w[1] - after_first).norm() > 0.0);
  CHECK(map.mean_w[0].isApprox(Eigen::Vector3d(0, 0, 3.0), 1e-12));
}

TEST_CASE("combined tracking objective is the exact lambda blend") {
  LossWeights w;
  CHECK(w.lambda_pho == 0.9);
  CHECK(w.lambda_iso == 10.0);
  const double pho = 0.123, geo = 0.456;
  CHECK(w.lambda_pho * pho + (1.0 - w.lambda_pho) * geo ==
        doctest::Approx(0.9 * 0.123 + 0.1 * 0.456).epsilon(1e-15));
}
