// Copyright Contributors to the splatslam project
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <memory>
#include <random>
#include <vector>

#include "splatslam/frame.hpp"
#include "splatslam/image.hpp"
#include "splatslam/lie.hpp"

namespace splatslam {

double sigmoid(double x);
double logit(double p);

struct MapConfig {
  int insertion_stride = 4;
  double tau_opaque = 0.5;          // accumulated opacity that counts as "has depth"
  double bootstrap_depth_median = 2.0;  // used before the map renders anything
  double bootstrap_depth_sigma = 0.5;
  double valid_sigma_factor = 0.2;    // N(D_p, (0.2 sigma_D)^2) around rendered depth
  double invalid_sigma_factor = 0.5;  // N(D_hat, (0.5 sigma_D)^2) elsewhere
  double initial_opacity = 0.5;
  double prune_opacity_threshold = 0.7;
  int prune_recent_keyframes = 3;
  int prune_min_observers = 3;
  std::uint64_t seed = 0;
};

struct IdRange {
  int begin = 0;
  int end = 0;
  int size() const { return end - begin; }
};

struct PruneResult {
  int removed = 0;
  // old_to_new[i] == -1 for removed Gaussians, new dense id otherwise.
  std::vector<int> old_to_new;
};

/// Structure-of-arrays store of the Gaussian map. Stored parameters are the
/// unconstrained forms: log scales, logits for opacity and colour, and
/// free quaternions that are renormalized after every optimizer step.
struct GaussianMap {
  MapConfig config;
  std::mt19937_64 rng{0};

  int count = 0;
  std::vector<Eigen::Vector3d> mean_w;
  std::vector<Eigen::Vector3d> log_scale;
  std::vector<Eigen::Vector4d> rotation_q;  // (w, x, y, z)
  std::vector<double> opacity_logit;
  std::vector<Eigen::Vector3d> colour_logit;
  std::vector<int> origin_keyframe;
  std::vector<std::int64_t> creation_order;
  std::int64_t next_creation_index = 0;

  GaussianMap() = default;
  explicit GaussianMap(const MapConfig& cfg) : config(cfg), rng(cfg.seed) {}

  double opacity(int i) const { return sigmoid(opacity_logit[i]); }
  Eigen::Vector3d colour(int i) const {
    return colour_logit[i].unaryExpr([](double v) { return sigmoid(v); });
  }

  /// Immutable copy for concurrent readers.
  std::shared_ptr<const GaussianMap> snapshot() const {
    return std::make_shared<const GaussianMap>(*this);
  }

  void append(const Eigen::Vector3d& mean, const Eigen::Vector3d& log_s,
              const Eigen::Vector4d& q, double op_logit,
              const Eigen::Vector3d& col_logit, int origin_kf);
};

/// World covariance R(q) diag(exp(s))^2 R(q)^T. q need not be exactly unit;
/// it is normalized internally.
Eigen::Matrix3d build_covariance(const Eigen::Vector3d& log_scale,
                                 const Eigen::Vector4d& q);

Eigen::Matrix3d quaternion_to_rotation(const Eigen::Vector4d& q);

/// One Gaussian per strided pixel with valid depth, back-projected into the
/// world frame. Returns the inserted id range.
IdRange insert_rgbd(GaussianMap& map, const Frame& frame, const SE3Pose& pose,
                    int stride, int origin_keyframe);

/// Monocular insertion: depths sampled around the rendered depth where the
/// accumulated opacity is at least tau_opaque, and around the median rendered
/// depth (with larger spread) elsewhere. Falls back to the configured
/// bootstrap statistics when the render carries no valid depth at all.
IdRange insert_monocular(GaussianMap& map, const Frame& frame,
                         const SE3Pose& pose, const Image& rendered_depth,
                         const Image& rendered_opacity, int stride,
                         int origin_keyframe);

/// Removes (a) Gaussians originating from the last prune_recent_keyframes
/// keyframes observed by fewer than prune_min_observers other window frames
/// (only when the window is full) and (b) Gaussians whose activated opacity
/// is below prune_opacity_threshold. Compaction preserves creation order.
PruneResult prune(GaussianMap& map, const std::vector<int>& per_gaussian_observers,
                  int current_keyframe_id, bool window_full);

/// Remaps a visible set through a prune compaction.
VisibleSet remap_visible(const VisibleSet& visible,
                         const std::vector<int>& old_to_new);

}  // namespace splatslam
