// Copyright Contributors to the splatslam project
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "splatslam/dataset.hpp"
#include "splatslam/frame.hpp"
#include "splatslam/gaussian_map.hpp"
#include "splatslam/render.hpp"

namespace splatslam {

enum class TrajectoryKind { kOrbit, kLine, kFunnelSquare };

struct SyntheticSpec {
  int n_gaussians = 200;
  TrajectoryKind trajectory = TrajectoryKind::kOrbit;
  int n_frames = 30;
  int width = 160;
  int height = 120;
  std::uint64_t seed = 0;
  bool with_depth = true;

  double orbit_radius = 2.0;
  double scene_extent = 0.8;         // Gaussians sampled in a box of this half-width
  double funnel_square_width = 0.5;  // metres
  std::vector<double> funnel_ring_radii = {0.2, 0.4, 0.8, 1.2};
  int funnel_starts_per_ring = 16;
};

/// A scene whose frames are exactly reproducible from map + poses through
/// the production renderer, so SLAM on it has a known global optimum.
struct SyntheticScene {
  GaussianMap ground_truth_map;
  CameraIntrinsics intrinsics;
  std::vector<SE3Pose> trajectory;  // T_CW per frame
  std::vector<Frame> frames;

  // Funnel layout (populated for kFunnelSquare): trajectory holds the 9
  // training poses, target is the square centre, and test poses start on
  // rings of the listed radii.
  SE3Pose funnel_target;
  std::vector<SE3Pose> funnel_test_poses;
  std::vector<double> funnel_test_radii;  // parallel to funnel_test_poses
};

SyntheticScene generate_synthetic(const SyntheticSpec& spec,
                                  const RenderConfig& render_cfg = {});

/// Camera at `position` looking at `target` (T_CW), +y approximately down.
SE3Pose look_at(const Eigen::Vector3d& position, const Eigen::Vector3d& target);

/// Writes a scene as a TUM-layout dataset (rgb/, depth/, rgb.txt, depth.txt,
/// groundtruth.txt, intrinsics.txt) for the end-to-end CLI path.
void export_tum(const SyntheticScene& scene, const std::string& dir,
                double depth_scale = 5000.0);

}  // namespace splatslam
