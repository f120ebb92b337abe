// Copyright Contributors to the splatslam project
// SPDX-License-Identifier: Apache-2.0
#include "splatslam/gaussian_map.hpp"

#include <algorithm>
#include <cmath>

#include "splatslam/errors.hpp"

namespace splatslam {

namespace {

constexpr double kColourClamp = 1e-3;  // keeps logit(pixel colour) finite
constexpr double kLogScaleMin = -16.12;  // exp(s) > 1e-7 m
constexpr double kLogScaleMax = 6.9;     // exp(s) < 1e3 m

double clamp01_open(double v) {
  return std::clamp(v, kColourClamp, 1.0 - kColourClamp);
}

Eigen::Vector3d colour_to_logit(const Eigen::Vector3d& c) {
  return {logit(clamp01_open(c.x())), logit(clamp01_open(c.y())),
          logit(clamp01_open(c.z()))};
}

// Isotropic one-pixel footprint at the insertion depth.
Eigen::Vector3d initial_log_scale(double z, const CameraIntrinsics& k) {
  const double s = std::clamp(std::log(z * 2.0 / (k.fx + k.fy)), kLogScaleMin,
                              kLogScaleMax);
  return Eigen::Vector3d::Constant(s);
}

}  // namespace

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double logit(double p) { return std::log(p / (1.0 - p)); }

void GaussianMap::append(const Eigen::Vector3d& mean,
                         const Eigen::Vector3d& log_s, const Eigen::Vector4d& q,
                         double op_logit, const Eigen::Vector3d& col_logit,
                         int origin_kf) {
  mean_w.push_back(mean);
  log_scale.push_back(log_s);
  rotation_q.push_back(q);
  opacity_logit.push_back(op_logit);
  colour_logit.push_back(col_logit);
  origin_keyframe.push_back(origin_kf);
  creation_order.push_back(next_creation_index++);
  ++count;
}

Eigen::Matrix3d quaternion_to_rotation(const Eigen::Vector4d& q) {
  const double n = q.norm();
  const double w = q[0] / n, x = q[1] / n, y = q[2] / n, z = q[3] / n;
  Eigen::Matrix3d r;
  r << 1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y),
      2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x),
      2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y);
  return r;
}

Eigen::Matrix3d build_covariance(const Eigen::Vector3d& log_scale,
                                 const Eigen::Vector4d& q) {
  const Eigen::Matrix3d r = quaternion_to_rotation(q);
  const Eigen::Vector3d var =
      (2.0 * log_scale).unaryExpr([](double v) { return std::exp(v); });
  return r * var.asDiagonal() * r.transpose();
}

IdRange insert_rgbd(GaussianMap& map, const Frame& frame, const SE3Pose& pose,
                    int stride, int origin_keyframe) {
  const IdRange range_start{map.count, map.count};
  if (!frame.has_depth()) return range_start;

  const CameraIntrinsics& k = frame.intrinsics;
  const SE3Pose t_wc = pose.inverse();
  IdRange range = range_start;

  for (int v = 0; v < frame.rgb.height; v += stride) {
    for (int u = 0; u < frame.rgb.width; u += stride) {
      const double z = frame.depth.at(u, v);
      if (z <= 0.0) continue;
      const Eigen::Vector3d p_c(z * (u - k.cx) / k.fx, z * (v - k.cy) / k.fy, z);
      const Eigen::Vector3d mean = t_wc * p_c;
      const Eigen::Vector3d col(frame.rgb.at(u, v, 0), frame.rgb.at(u, v, 1),
                                frame.rgb.at(u, v, 2));
      map.append(mean, initial_log_scale(z, k), Eigen::Vector4d(1, 0, 0, 0),
                 logit(map.config.initial_opacity), colour_to_logit(col),
                 origin_keyframe);
    }
  }
  range.end = map.count;
  return range;
}

IdRange insert_monocular(GaussianMap& map, const Frame& frame,
                         const SE3Pose& pose, const Image& rendered_depth,
                         const Image& rendered_opacity, int stride,
                         int origin_keyframe) {
  const CameraIntrinsics& k = frame.intrinsics;
  const SE3Pose t_wc = pose.inverse();
  const MapConfig& cfg = map.config;

  // Statistics of the valid rendered depths: median and standard deviation.
  std::vector<double> valid;
  if (!rendered_depth.empty()) {
    for (int v = 0; v < rendered_depth.height; ++v) {
      for (int u = 0; u < rendered_depth.width; ++u) {
        if (rendered_opacity.at(u, v) >= cfg.tau_opaque) {
          valid.push_back(rendered_depth.at(u, v));
        }
      }
    }
  }

  double median, sigma;
  if (valid.empty()) {
    // First-frame bootstrap: nothing rendered yet.
    median = cfg.bootstrap_depth_median;
    sigma = cfg.bootstrap_depth_sigma;
  } else {
    std::vector<double> sorted = valid;
    const size_t mid = sorted.size() / 2;
    std::nth_element(sorted.begin(), sorted.begin() + mid, sorted.end());
    median = sorted[mid];
    double mean = 0.0;
    for (double d : valid) mean += d;
    mean /= static_cast<double>(valid.size());
    double var = 0.0;
    for (double d : valid) var += (d - mean) * (d - mean);
    sigma = std::sqrt(var / static_cast<double>(valid.size()));
  }

  std::normal_distribution<double> unit_normal(0.0, 1.0);
  IdRange range{map.count, map.count};

  for (int v = 0; v < frame.rgb.height; v += stride) {
    for (int u = 0; u < frame.rgb.width; u += stride) {
      const bool has_estimate =
          !rendered_depth.empty() && rendered_opacity.at(u, v) >= cfg.tau_opaque;
      double z;
      if (has_estimate) {
        z = rendered_depth.at(u, v) +
            cfg.valid_sigma_factor * sigma * unit_normal(map.rng);
      } else {
        z = median + cfg.invalid_sigma_factor * sigma * unit_normal(map.rng);
      }
      z = std::max(z, 2.0 * kEpsilonZ);
      const Eigen::Vector3d p_c(z * (u - k.cx) / k.fx, z * (v - k.cy) / k.fy, z);
      const Eigen::Vector3d mean = t_wc * p_c;
      const Eigen::Vector3d col(frame.rgb.at(u, v, 0), frame.rgb.at(u, v, 1),
                                frame.rgb.at(u, v, 2));
      map.append(mean, initial_log_scale(z, k), Eigen::Vector4d(1, 0, 0, 0),
                 logit(cfg.initial_opacity), colour_to_logit(col),
                 origin_keyframe);
    }
  }
  range.end = map.count;
  return range;
}

PruneResult prune(GaussianMap& map, const std::vector<int>& per_gaussian_observers,
                  int current_keyframe_id, bool window_full) {
  const MapConfig& cfg = map.config;
  PruneResult result;
  result.old_to_new.assign(map.count, -1);

  const int oldest_recent = current_keyframe_id - (cfg.prune_recent_keyframes - 1);

  int next = 0;
  for (int i = 0; i < map.count; ++i) {
    bool remove = map.opacity(i) < cfg.prune_opacity_threshold;
    if (!remove && window_full && map.origin_keyframe[i] >= oldest_recent) {
      const int observers =
          i < static_cast<int>(per_gaussian_observers.size())
              ? per_gaussian_observers[i]
              : 0;
      if (observers < cfg.prune_min_observers) remove = true;
    }
    if (!remove) result.old_to_new[i] = next++;
  }
  result.removed = map.count - next;
  if (result.removed == 0) return result;

  for (int i = 0; i < map.count; ++i) {
    const int j = result.old_to_new[i];
    if (j < 0) continue;
    map.mean_w[j] = map.mean_w[i];
    map.log_scale[j] = map.log_scale[i];
    map.rotation_q[j] = map.rotation_q[i];
    map.opacity_logit[j] = map.opacity_logit[i];
    map.colour_logit[j] = map.colour_logit[i];
    map.origin_keyframe[j] = map.origin_keyframe[i];
    map.creation_order[j] = map.creation_order[i];
  }
  map.count = next;
  map.mean_w.resize(next);
  map.log_scale.resize(next);
  map.rotation_q.resize(next);
  map.opacity_logit.resize(next);
  map.colour_logit.resize(next);
  map.origin_keyframe.resize(next);
  map.creation_order.resize(next);
  return result;
}

VisibleSet remap_visible(const VisibleSet& visible,
                         const std::vector<int>& old_to_new) {
  VisibleSet out;
  out.reserve(visible.size());
  for (int id : visible) {
    if (id >= 0 && id < static_cast<int>(old_to_new.size()) &&
        old_to_new[id] >= 0) {
      out.push_back(old_to_new[id]);
    }
  }
  // Compaction preserves order, so the remapped set stays sorted.
  return out;
}

}  // namespace splatslam
