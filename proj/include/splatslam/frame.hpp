// Copyright Contributors to the splatslam project
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>
#include <memory>
#include <vector>

#include "splatslam/image.hpp"
#include "splatslam/lie.hpp"

namespace splatslam {

/// A single RGB(-D) observation. Depth of 0 marks an invalid measurement.
struct Frame {
  double timestamp = 0.0;
  Image rgb;    // H x W x 3 in [0,1]
  Image depth;  // H x W metres, empty for monocular frames
  CameraIntrinsics intrinsics;

  bool has_depth() const { return !depth.empty(); }
};

/// Sorted, unique Gaussian ids visible from a view.
using VisibleSet = std::vector<int>;

struct Keyframe {
  int id = -1;
  int frame_index = -1;
  std::shared_ptr<const Frame> frame;
  SE3Pose pose;
  Eigen::Vector2d exposure = Eigen::Vector2d::Zero();  // (a, b)
  VisibleSet visible;
};

}  // namespace splatslam
