// Copyright Contributors to the splatslam project
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>
#include <span>
#include <vector>

#include "splatslam/gaussian_map.hpp"
#include "splatslam/gradients.hpp"
#include "splatslam/lie.hpp"

namespace splatslam {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Moment state for a flat array of scalars; one shared step counter.
struct AdamArray {
  std::vector<double> m, v;
  long step_count = 0;
  AdamConfig config;

  void ensure_size(size_t n);
  /// One bias-corrected update: params -= lr * m_hat / (sqrt(v_hat) + eps).
  void step(std::span<double> params, std::span<const double> grads, double lr);
  /// Computes the update without applying it (used for manifold retraction).
  void step_delta(std::span<const double> grads, double lr,
                  std::span<double> delta_out);
  /// Keeps rows of a per-item state through a prune compaction.
  void compact(const std::vector<int>& old_to_new, int stride);
};

/// Per-group learning rates for the Gaussian parameters.
struct MapLearningRates {
  double position = 1.6e-4;
  double colour = 2.5e-3;
  double opacity = 5e-2;
  double scale = 5e-3;
  double rotation = 1e-3;
};

/// Adam over all map parameter groups. Quaternions are renormalized and log
/// scales clamped after every step; moment rows follow insertions and prunes.
class MapOptimizer {
 public:
  explicit MapOptimizer(const MapLearningRates& rates = {}) : rates_(rates) {}

  void step(GaussianMap& map, const GradientBuffers& grads);
  void on_prune(const std::vector<int>& old_to_new);
  const MapLearningRates& rates() const { return rates_; }
  MapLearningRates& rates() { return rates_; }

 private:
  MapLearningRates rates_;
  AdamArray position_, scale_, rotation_, opacity_, colour_;
};

/// Adam on the se(3) tangent with separate rotation/translation rates;
/// poses are updated by the left retraction T <- Exp(-delta) * T.
class PoseOptimizer {
 public:
  PoseOptimizer(double lr_rotation = 0.003, double lr_translation = 0.001)
      : lr_rotation_(lr_rotation), lr_translation_(lr_translation) {}

  /// Applies one step and returns the Euclidean norm of the applied twist.
  double step(SE3Pose& pose, const Eigen::Matrix<double, 6, 1>& grad);

 private:
  double lr_rotation_, lr_translation_;
  AdamArray state_;
};

/// Adam on the affine brightness pair (a, b).
class ExposureOptimizer {
 public:
  explicit ExposureOptimizer(double lr = 0.01) : lr_(lr) {}
  void step(Eigen::Vector2d& exposure, const Eigen::Vector2d& grad);

 private:
  double lr_;
  AdamArray state_;
};

}  // namespace splatslam
