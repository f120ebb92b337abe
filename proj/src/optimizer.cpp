// Copyright Contributors to the splatslam project
// SPDX-License-Identifier: Apache-2.0
#include "splatslam/optimizer.hpp"

#include <algorithm>
#include <cmath>

#include "splatslam/errors.hpp"

namespace splatslam {

namespace {
constexpr double kLogScaleMin = -16.12;
constexpr double kLogScaleMax = 6.9;
}  // namespace

void AdamArray::ensure_size(size_t n) {
  if (m.size() < n) {
    m.resize(n, 0.0);
    v.resize(n, 0.0);
  }
}

void AdamArray::step_delta(std::span<const double> grads, double lr,
                           std::span<double> delta_out) {
  if (grads.size() != delta_out.size()) {
    throw ShapeMismatch("adam gradient/delta size mismatch");
  }
  ensure_size(grads.size());
  ++step_count;
  const double bc1 = 1.0 - std::pow(config.beta1, step_count);
  const double bc2 = 1.0 - std::pow(config.beta2, step_count);
  for (size_t i = 0; i < grads.size(); ++i) {
    m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * grads[i];
    v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * grads[i] * grads[i];
    const double m_hat = m[i] / bc1;
    const double v_hat = v[i] / bc2;
    delta_out[i] = lr * m_hat / (std::sqrt(v_hat) + config.eps);
  }
}

void AdamArray::step(std::span<double> params, std::span<const double> grads,
                     double lr) {
  if (params.size() != grads.size()) {
    throw ShapeMismatch("adam parameter/gradient size mismatch");
  }
  std::vector<double> delta(params.size());
  step_delta(grads, lr, delta);
  for (size_t i = 0; i < params.size(); ++i) params[i] -= delta[i];
}

void AdamArray::compact(const std::vector<int>& old_to_new, int stride) {
  const size_t rows = old_to_new.size();
  if (m.size() < rows * stride) ensure_size(rows * stride);
  for (size_t i = 0; i < rows; ++i) {
    const int j = old_to_new[i];
    if (j < 0) continue;
    for (int c = 0; c < stride; ++c) {
      m[static_cast<size_t>(j) * stride + c] = m[i * stride + c];
      v[static_cast<size_t>(j) * stride + c] = v[i * stride + c];
    }
  }
  size_t kept = 0;
  for (int j : old_to_new) kept += j >= 0;
  m.resize(kept * stride);
  v.resize(kept * stride);
}

namespace {

// The SoA vectors of Vector3d/Vector4d are contiguous doubles.
template <typename Vec>
std::span<double> flat_span(std::vector<Vec>& v) {
  return {v.empty() ? nullptr : v[0].data(),
          v.size() * static_cast<size_t>(Vec::RowsAtCompileTime)};
}
template <typename Vec>
std::span<const double> flat_span(const std::vector<Vec>& v) {
  return {v.empty() ? nullptr : v[0].data(),
          v.size() * static_cast<size_t>(Vec::RowsAtCompileTime)};
}

}  // namespace

void MapOptimizer::step(GaussianMap& map, const GradientBuffers& grads) {
  if (grads.size() != map.count) {
    throw ShapeMismatch("gradients sized " + std::to_string(grads.size()) +
                        " for a map of " + std::to_string(map.count));
  }
  if (map.count == 0) return;

  position_.step(flat_span(map.mean_w), flat_span(grads.d_mean_w),
                 rates_.position);
  scale_.step(flat_span(map.log_scale), flat_span(grads.d_log_scale),
              rates_.scale);
  rotation_.step(flat_span(map.rotation_q), flat_span(grads.d_rotation_q),
                 rates_.rotation);
  opacity_.step(std::span<double>(map.opacity_logit),
                std::span<const double>(grads.d_opacity_logit), rates_.opacity);
  colour_.step(flat_span(map.colour_logit), flat_span(grads.d_colour_logit),
               rates_.colour);

  for (int i = 0; i < map.count; ++i) {
    map.rotation_q[i].normalize();
    for (int axis = 0; axis < 3; ++axis) {
      map.log_scale[i][axis] =
          std::clamp(map.log_scale[i][axis], kLogScaleMin, kLogScaleMax);
    }
  }
}

void MapOptimizer::on_prune(const std::vector<int>& old_to_new) {
  position_.compact(old_to_new, 3);
  scale_.compact(old_to_new, 3);
  rotation_.compact(old_to_new, 4);
  opacity_.compact(old_to_new, 1);
  colour_.compact(old_to_new, 3);
}

double PoseOptimizer::step(SE3Pose& pose,
                           const Eigen::Matrix<double, 6, 1>& grad) {
  Eigen::Matrix<double, 6, 1> delta;
  std::array<double, 6> g{grad[0], grad[1], grad[2], grad[3], grad[4], grad[5]};
  std::array<double, 6> d{};
  state_.step_delta(std::span<const double>(g), 1.0, std::span<double>(d));
  for (int i = 0; i < 3; ++i) delta[i] = lr_translation_ * d[i];
  for (int i = 3; i < 6; ++i) delta[i] = lr_rotation_ * d[i];

  pose = exp_se3(TwistVector(-delta.head<3>(), -delta.tail<3>())) * pose;
  return delta.norm();
}

void ExposureOptimizer::step(Eigen::Vector2d& exposure,
                             const Eigen::Vector2d& grad) {
  std::array<double, 2> g{grad[0], grad[1]};
  std::array<double, 2> d{};
  state_.step_delta(std::span<const double>(g), lr_, std::span<double>(d));
  exposure[0] -= d[0];
  exposure[1] -= d[1];
}

}  // namespace splatslam
