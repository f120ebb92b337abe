// Copyright Contributors to the splatslam project
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>

#include "splatslam/frame.hpp"
#include "splatslam/gaussian_map.hpp"
#include "splatslam/lie.hpp"
#include "splatslam/losses.hpp"
#include "splatslam/render.hpp"

namespace splatslam {

struct TrackerConfig {
  int max_iterations = 100;
  double early_stop_delta = 1e-4;   // stop when ||applied twist||_2 falls below
  double lr_rotation = 0.003;
  double lr_translation = 0.001;
  double lr_exposure = 0.01;
  double lambda_pho = 0.9;          // RGB-D photometric/geometric weight
  double opacity_mask_threshold = 0.95;  // monocular photometric gate
  double tau_opaque = 0.5;
  double divergence_factor = 10.0;  // abort when loss exceeds this x initial
  bool use_depth = true;            // false forces monocular tracking
};

struct TrackingResult {
  SE3Pose pose;
  Eigen::Vector2d exposure = Eigen::Vector2d::Zero();
  int iterations_used = 0;
  double final_loss = 0.0;
  bool converged = false;
  // Extras consumed by the pipeline (visible set and render statistics of
  // the final accepted pose).
  VisibleSet visible;
  double median_rendered_depth = 0.0;
  Image rendered_depth;
  Image rendered_opacity;
};

/// Optimizes the current camera pose (and exposure) against a frozen map
/// snapshot. Throws EmptyMap on an empty map and DivergedPose when the loss
/// becomes non-finite or blows past the divergence guard.
TrackingResult track(const GaussianMap& map, const Frame& frame,
                     const SE3Pose& initial_pose,
                     const Eigen::Vector2d& initial_exposure,
                     const TrackerConfig& config, const RenderConfig& render_cfg);

/// Constant-velocity prediction Exp(Log(prev * prev_prev^-1)) * prev.
SE3Pose predict_pose(const SE3Pose& prev, const SE3Pose& prev_prev);

}  // namespace splatslam
