// Copyright Contributors to the splatslam project
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "splatslam/config.hpp"
#include "splatslam/dataset.hpp"
#include "splatslam/evaluation.hpp"
#include "splatslam/gaussian_map.hpp"
#include "splatslam/keyframes.hpp"

namespace splatslam {

struct SlamResult {
  std::vector<TrajectoryEntry> trajectory;           // every processed frame
  std::vector<TrajectoryEntry> keyframe_trajectory;  // keyframes only
  std::vector<int> keyframe_frame_indices;
  GaussianMap map;
  KeyframeRegistry registry;
  int total_divergences = 0;

  // Populated when the sequence carries ground truth.
  bool has_ate = false;
  double ate_keyframes_rmse = 0.0;
  double ate_all_rmse = 0.0;
  // Rendering quality on every Nth frame, keyframes excluded.
  bool has_render_metrics = false;
  double mean_psnr = 0.0;
  double mean_ssim = 0.0;
};

/// Runs the full SLAM loop over a sequence: per frame — constant-velocity
/// prediction, tracking, keyframe decision, and on registration insertion,
/// window maintenance, mapping and pruning. Throws DivergedPose when
/// tracking fails for more than max_consecutive_divergences frames in a row.
SlamResult run_slam(const SequenceSource& sequence, const Config& config);

/// Writes trajectory.txt, keyframe_trajectory.txt, map.ply and metrics.txt
/// under config.output_dir.
void write_slam_artifacts(const SlamResult& result, const Config& config);

/// Halves of the frontend reused by tools and tests: downscale a sequence
/// in place (box-filtered RGB, subsampled depth, scaled intrinsics).
void downscale_sequence(SequenceSource& sequence, int factor);

/// Trains a map from a set of posed frames with fixed cameras (insertion
/// from the first frame, then `iterations` fixed-pose mapping steps).
/// Used by the funnel benchmark.
GaussianMap train_map_from_views(const std::vector<Frame>& frames,
                                 const std::vector<SE3Pose>& poses,
                                 bool with_depth, int iterations,
                                 const Config& config);

}  // namespace splatslam
