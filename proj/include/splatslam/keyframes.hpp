// Copyright Contributors to the splatslam project
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <memory>
#include <random>
#include <string>
#include <vector>

#include "splatslam/frame.hpp"
#include "splatslam/lie.hpp"

namespace splatslam {

struct KeyframeConfig {
  double kf_cov = 0.95;     // register when IOU drops below this
  double kf_m = 0.04;       // or when baseline exceeds kf_m * median depth
  double kf_c = 0.3;        // evict window entries whose OC drops below this
  int window_capacity = 10;
};

struct Covisibility {
  double iou = 0.0;
  double oc = 0.0;
};

/// Intersection-over-union and overlap coefficient of two visible sets
/// (sorted unique ids). Two empty sets give (0, 0) by convention.
Covisibility covisibility(const VisibleSet& a, const VisibleSet& b);

struct RegistrationDecision {
  bool should_register = false;
  std::string reason;  // "covisibility", "baseline" or empty
  double iou = 0.0;
  double baseline = 0.0;
};

/// Registration test against the last keyframe: IOU < kf_cov or
/// ||t_ij|| > kf_m * median_depth.
RegistrationDecision should_register(const VisibleSet& current_visible,
                                     const VisibleSet& last_visible,
                                     const SE3Pose& current_pose,
                                     const SE3Pose& last_pose,
                                     double median_depth,
                                     const KeyframeConfig& config);

/// All registered keyframes, indexed by id. Entries stay alive after window
/// eviction so they remain eligible for random revisits.
struct KeyframeRegistry {
  std::vector<std::shared_ptr<Keyframe>> all;

  int add(std::shared_ptr<Keyframe> kf) {
    kf->id = static_cast<int>(all.size());
    all.push_back(std::move(kf));
    return all.back()->id;
  }
  Keyframe& get(int id) { return *all[id]; }
  const Keyframe& get(int id) const { return *all[id]; }
  int size() const { return static_cast<int>(all.size()); }
};

struct KeyframeWindow {
  int capacity = 10;
  std::vector<int> ids;  // registration order, latest last

  bool full() const { return static_cast<int>(ids.size()) >= capacity; }
  int latest() const { return ids.back(); }
  bool contains(int id) const {
    for (int i : ids)
      if (i == id) return true;
    return false;
  }
};

/// Removes entries whose overlap coefficient with the latest keyframe drops
/// below kf_c; if the window is still over capacity, evicts the minimum-OC
/// entry. The latest keyframe is never evicted. Returns evicted ids.
std::vector<int> maintain_window(KeyframeWindow& window,
                                 const KeyframeRegistry& registry,
                                 const KeyframeConfig& config);

/// Up to two keyframe ids sampled uniformly without replacement from the
/// registered keyframes outside the window.
std::vector<int> sample_random_past(const KeyframeRegistry& registry,
                                    const KeyframeWindow& window,
                                    std::mt19937_64& rng, int count = 2);

}  // namespace splatslam
