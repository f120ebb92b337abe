// Copyright Contributors to the splatslam project
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>
#include <vector>

#include "splatslam/gaussian_map.hpp"
#include "splatslam/image.hpp"

namespace splatslam {

struct LossWeights {
  double lambda_pho = 0.9;
  double lambda_iso = 10.0;
};

/// Kink smoothing width of the L1 derivative, in intensity units.
inline constexpr double kL1SmoothDelta = 1e-6;

/// sign(x) smoothed to x/delta inside |x| < delta.
inline double smoothed_sign(double x, double delta = kL1SmoothDelta) {
  if (x > delta) return 1.0;
  if (x < -delta) return -1.0;
  return x / delta;
}

struct ScalarLoss {
  double value = 0.0;
  Image grad;  // dL/d(rendered), same shape as the rendered input
};

/// Mean absolute colour error over masked pixels and channels. Throws
/// EmptyMask when the mask selects nothing.
ScalarLoss photometric_loss(const Image& rendered, const Image& observed,
                            const Mask& mask);

/// Mean absolute depth error over masked pixels.
ScalarLoss geometric_loss(const Image& rendered_depth,
                          const Image& observed_depth, const Mask& mask);

struct IsotropicLoss {
  double value = 0.0;
  std::vector<Eigen::Vector3d> d_log_scale;
};

/// Mean over Gaussians of || s_i - mean(s_i) * 1 ||_1 on activated scales.
IsotropicLoss isotropic_loss(const std::vector<Eigen::Vector3d>& log_scale);

/// Masks used by tracking and mapping.
Mask full_mask(int width, int height);
Mask opacity_mask(const Image& acc_opacity, double threshold);
Mask depth_mask(const Image& observed_depth, const Image& acc_opacity,
                double tau_opaque);

}  // namespace splatslam
