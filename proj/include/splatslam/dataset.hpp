// Copyright Contributors to the splatslam project
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "splatslam/frame.hpp"
#include "splatslam/lie.hpp"

namespace splatslam {

struct TrajectoryEntry {
  double timestamp = 0.0;
  SE3Pose pose_wc;  // camera-to-world, TUM convention
};

struct DatasetConfig {
  double depth_scale = 5000.0;     // 16-bit PNG counts per metre
  double association_max_dt = 0.02;  // seconds
};

/// An ordered RGB(-D) sequence with optional ground truth. Frames hold
/// images lazily loaded at construction; the source is immutable afterwards.
struct SequenceSource {
  std::vector<Frame> frames;
  CameraIntrinsics intrinsics;
  std::vector<TrajectoryEntry> ground_truth;  // empty when absent

  bool has_ground_truth() const { return !ground_truth.empty(); }
  /// Nearest ground-truth pose for a timestamp, if within max_dt.
  std::optional<SE3Pose> ground_truth_at(double timestamp,
                                         double max_dt = 0.02) const;
};

/// Loads a TUM-RGBD layout directory: rgb.txt (+ optional depth.txt and
/// groundtruth.txt), lines "timestamp filename" with '#' comments. Depth is
/// associated to the nearest RGB timestamp within association_max_dt; frames
/// without a close depth are emitted RGB-only. Intrinsics default to the
/// TUM fr1 calibration unless an intrinsics.txt (fx fy cx cy) is present.
SequenceSource load_tum(const std::string& dir, const DatasetConfig& config = {});

/// Writes "timestamp tx ty tz qx qy qz qw" lines (camera-to-world, 6 decimal
/// places).
void save_trajectory(const std::vector<TrajectoryEntry>& trajectory,
                     const std::string& path);

std::vector<TrajectoryEntry> load_trajectory(const std::string& path);

}  // namespace splatslam
