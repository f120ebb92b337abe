// Copyright Contributors to the splatslam project
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "splatslam/gaussian_map.hpp"
#include "splatslam/image.hpp"
#include "splatslam/lie.hpp"
#include "splatslam/render.hpp"
#include "splatslam/tracker.hpp"

namespace splatslam {

struct AteReport {
  double rmse = 0.0;  // metres
  std::vector<double> per_frame_error;
  Eigen::Matrix3d alignment_rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d alignment_translation = Eigen::Vector3d::Zero();
  double alignment_scale = 1.0;
  bool scale_aligned = false;
};

/// Absolute trajectory error after closed-form similarity (or rigid)
/// alignment of the camera centres. Inputs are camera-to-world poses,
/// index-matched. Throws LengthMismatch / DegenerateGeometry.
AteReport ate_rmse(const std::vector<SE3Pose>& estimated_wc,
                   const std::vector<SE3Pose>& reference_wc, bool with_scale);

/// 10 log10(1 / MSE) over [0,1] images; +infinity for identical inputs.
double psnr(const Image& rendered, const Image& reference);

/// Standard 11x11 Gaussian-window SSIM (sigma 1.5, k1 0.01, k2 0.03, L 1),
/// averaged over channels.
double ssim(const Image& rendered, const Image& reference);

struct FunnelConfig {
  int budget = 1000;
  double success_radius = 0.01;  // metres
  TrackerConfig tracker;         // pose-only photometric optimization
};

struct FunnelRing {
  double radius = 0.0;
  int attempts = 0;
  int successes = 0;
  double rate() const { return attempts ? static_cast<double>(successes) / attempts : 0.0; }
};

struct FunnelReport {
  int attempts = 0;
  int successes = 0;
  std::vector<FunnelRing> rings;
  std::vector<double> final_rotation_errors_deg;  // informational
  double rate() const { return attempts ? static_cast<double>(successes) / attempts : 0.0; }
};

/// Convergence-basin analysis: from each start pose, optimize the pose only
/// against the target RGB for `budget` iterations; success means the final
/// camera centre lies within success_radius of the target centre. Start
/// poses are grouped into rings by the parallel `start_radii` list.
FunnelReport funnel_analysis(const GaussianMap& trained_map,
                             const Frame& target_view, const SE3Pose& target_pose,
                             const std::vector<SE3Pose>& start_poses,
                             const std::vector<double>& start_radii,
                             const FunnelConfig& config,
                             const RenderConfig& render_cfg);

/// Emits "key=value" lines.
std::string format_metric_report(
    const std::vector<std::pair<std::string, std::string>>& entries);

}  // namespace splatslam
