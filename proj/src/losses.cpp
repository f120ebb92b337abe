// Copyright Contributors to the splatslam project
// SPDX-License-Identifier: Apache-2.0
#include "splatslam/losses.hpp"

#include <cmath>

#include "splatslam/errors.hpp"

namespace splatslam {

ScalarLoss photometric_loss(const Image& rendered, const Image& observed,
                            const Mask& mask) {
  if (!rendered.same_shape(observed)) {
    throw ShapeMismatch("photometric loss image shapes differ");
  }
  const size_t selected = mask.count();
  if (selected == 0) throw EmptyMask();

  ScalarLoss out;
  out.grad = Image(rendered.width, rendered.height, rendered.channels);
  const double norm = 1.0 / (static_cast<double>(selected) * rendered.channels);

  double total = 0.0;
  for (int y = 0; y < rendered.height; ++y) {
    for (int x = 0; x < rendered.width; ++x) {
      if (!mask.at(x, y)) continue;
      for (int c = 0; c < rendered.channels; ++c) {
        const double r = rendered.at(x, y, c) - observed.at(x, y, c);
        total += std::abs(r);
        out.grad.at(x, y, c) = smoothed_sign(r) * norm;
      }
    }
  }
  out.value = total * norm;
  return out;
}

ScalarLoss geometric_loss(const Image& rendered_depth,
                          const Image& observed_depth, const Mask& mask) {
  if (!rendered_depth.same_shape(observed_depth)) {
    throw ShapeMismatch("geometric loss image shapes differ");
  }
  const size_t selected = mask.count();
  if (selected == 0) throw EmptyMask();

  ScalarLoss out;
  out.grad = Image(rendered_depth.width, rendered_depth.height, 1);
  const double norm = 1.0 / static_cast<double>(selected);

  double total = 0.0;
  for (int y = 0; y < rendered_depth.height; ++y) {
    for (int x = 0; x < rendered_depth.width; ++x) {
      if (!mask.at(x, y)) continue;
      const double r = rendered_depth.at(x, y) - observed_depth.at(x, y);
      total += std::abs(r);
      out.grad.at(x, y) = smoothed_sign(r) * norm;
    }
  }
  out.value = total * norm;
  return out;
}

IsotropicLoss isotropic_loss(const std::vector<Eigen::Vector3d>& log_scale) {
  IsotropicLoss out;
  const int n = static_cast<int>(log_scale.size());
  out.d_log_scale.assign(n, Eigen::Vector3d::Zero());
  if (n == 0) return out;
  const double norm = 1.0 / n;

  for (int i = 0; i < n; ++i) {
    const Eigen::Vector3d s =
        log_scale[i].unaryExpr([](double v) { return std::exp(v); });
    const double mean = s.mean();
    Eigen::Vector3d sign;
    double value = 0.0;
    for (int axis = 0; axis < 3; ++axis) {
      value += std::abs(s[axis] - mean);
      sign[axis] = smoothed_sign(s[axis] - mean);
    }
    out.value += value * norm;
    // d/ds_k of sum_j |s_j - mean| with mean = (1/3) sum s_j.
    const double sign_mean = sign.mean();
    for (int axis = 0; axis < 3; ++axis) {
      out.d_log_scale[i][axis] = (sign[axis] - sign_mean) * s[axis] * norm;
    }
  }
  return out;
}

Mask full_mask(int width, int height) { return Mask(width, height, true); }

Mask opacity_mask(const Image& acc_opacity, double threshold) {
  Mask m(acc_opacity.width, acc_opacity.height);
  for (int y = 0; y < acc_opacity.height; ++y) {
    for (int x = 0; x < acc_opacity.width; ++x) {
      m.set(x, y, acc_opacity.at(x, y) >= threshold);
    }
  }
  return m;
}

Mask depth_mask(const Image& observed_depth, const Image& acc_opacity,
                double tau_opaque) {
  Mask m(observed_depth.width, observed_depth.height);
  for (int y = 0; y < observed_depth.height; ++y) {
    for (int x = 0; x < observed_depth.width; ++x) {
      m.set(x, y, observed_depth.at(x, y) > 0.0 &&
                      acc_opacity.at(x, y) >= tau_opaque);
    }
  }
  return m;
}

}  // namespace splatslam
