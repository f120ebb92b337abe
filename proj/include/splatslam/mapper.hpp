// Copyright Contributors to the splatslam project
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <vector>

#include "splatslam/gaussian_map.hpp"
#include "splatslam/keyframes.hpp"
#include "splatslam/losses.hpp"
#include "splatslam/optimizer.hpp"
#include "splatslam/render.hpp"

namespace splatslam {

struct MappingConfig {
  LossWeights weights;
  double lr_cam_rotation = 0.003;
  double lr_cam_translation = 0.001;
  bool use_depth = true;        // weighted photometric + geometric residuals
  bool optimize_poses = true;   // fixed-pose mode for offline map training
  double tau_opaque = 0.5;
  int random_past_per_iteration = 2;
};

/// Joint refinement state over window keyframe poses and all Gaussians.
/// The oldest keyframe in the window is held fixed as gauge.
class Mapper {
 public:
  Mapper(const MapLearningRates& rates, const MappingConfig& config)
      : config_(config), map_optimizer_(rates) {}

  struct StepStats {
    double total_loss = 0.0;          // sum of weighted per-keyframe losses
    double iso_loss = 0.0;            // unweighted E_iso
    std::vector<double> per_keyframe_loss;
    std::vector<int> random_past;     // W_r drawn this iteration
  };

  /// One mapping iteration over W_k plus freshly sampled W_r: render each
  /// keyframe, accumulate gradients, then step the Gaussians and every
  /// non-gauge pose. Refreshes the visible set of each rendered keyframe.
  StepStats map_step(GaussianMap& map, KeyframeRegistry& registry,
                     const KeyframeWindow& window,
                     const RenderConfig& render_cfg);

  struct MappingSummary {
    int iterations = 0;
    double first_loss = 0.0;
    double last_loss = 0.0;
    int pruned = 0;
  };

  /// budget map_steps followed by the keyframe-event prune. Throws
  /// InvalidBudget when budget < 1.
  MappingSummary run_mapping(GaussianMap& map, KeyframeRegistry& registry,
                             KeyframeWindow& window,
                             const RenderConfig& render_cfg, int budget);

  /// Extends optimizer bookkeeping over freshly inserted Gaussians (their
  /// moments start at zero implicitly; nothing to do today but the call
  /// marks the insertion point for the pose/step bookkeeping).
  MapOptimizer& map_optimizer() { return map_optimizer_; }
  MappingConfig& config() { return config_; }
  const MappingConfig& config() const { return config_; }

 private:
  MappingConfig config_;
  MapOptimizer map_optimizer_;
  std::map<int, PoseOptimizer> pose_optimizers_;
};

/// Observer counts for visibility pruning: for each Gaussian, the number of
/// window keyframes other than its origin keyframe that see it.
std::vector<int> count_window_observers(const GaussianMap& map,
                                        const KeyframeRegistry& registry,
                                        const KeyframeWindow& window);

}  // namespace splatslam
