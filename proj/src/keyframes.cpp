// Copyright Contributors to the splatslam project
// SPDX-License-Identifier: Apache-2.0
#include "splatslam/keyframes.hpp"

#include <algorithm>

namespace splatslam {

Covisibility covisibility(const VisibleSet& a, const VisibleSet& b) {
  if (a.empty() && b.empty()) return {0.0, 0.0};

  size_t inter = 0;
  size_t ia = 0, ib = 0;
  while (ia < a.size() && ib < b.size()) {
    if (a[ia] == b[ib]) {
      ++inter;
      ++ia;
      ++ib;
    } else if (a[ia] < b[ib]) {
      ++ia;
    } else {
      ++ib;
    }
  }
  const size_t uni = a.size() + b.size() - inter;
  const size_t smaller = std::min(a.size(), b.size());

  Covisibility cov;
  cov.iou = uni == 0 ? 0.0 : static_cast<double>(inter) / uni;
  cov.oc = smaller == 0 ? 0.0 : static_cast<double>(inter) / smaller;
  return cov;
}

RegistrationDecision should_register(const VisibleSet& current_visible,
                                     const VisibleSet& last_visible,
                                     const SE3Pose& current_pose,
                                     const SE3Pose& last_pose,
                                     double median_depth,
                                     const KeyframeConfig& config) {
  RegistrationDecision out;
  out.iou = covisibility(current_visible, last_visible).iou;
  out.baseline = (current_pose * last_pose.inverse()).translation.norm();

  if (out.iou < config.kf_cov) {
    out.should_register = true;
    out.reason = "covisibility";
  } else if (out.baseline > config.kf_m * median_depth) {
    out.should_register = true;
    out.reason = "baseline";
  }
  return out;
}

std::vector<int> maintain_window(KeyframeWindow& window,
                                 const KeyframeRegistry& registry,
                                 const KeyframeConfig& config) {
  std::vector<int> evicted;
  if (window.ids.size() <= 1) return evicted;

  const VisibleSet& latest = registry.get(window.latest()).visible;

  // Cutoff rule first.
  std::vector<int> kept;
  for (size_t i = 0; i + 1 < window.ids.size(); ++i) {
    const int id = window.ids[i];
    const double oc = covisibility(latest, registry.get(id).visible).oc;
    if (oc < config.kf_c) {
      evicted.push_back(id);
    } else {
      kept.push_back(id);
    }
  }
  kept.push_back(window.latest());
  window.ids = std::move(kept);

  // Capacity rule: drop the minimum-OC entry (never the latest).
  while (static_cast<int>(window.ids.size()) > window.capacity) {
    size_t worst = 0;
    double worst_oc = 2.0;
    for (size_t i = 0; i + 1 < window.ids.size(); ++i) {
      const double oc =
          covisibility(latest, registry.get(window.ids[i]).visible).oc;
      if (oc < worst_oc) {
        worst_oc = oc;
        worst = i;
      }
    }
    evicted.push_back(window.ids[worst]);
    window.ids.erase(window.ids.begin() + worst);
  }
  return evicted;
}

std::vector<int> sample_random_past(const KeyframeRegistry& registry,
                                    const KeyframeWindow& window,
                                    std::mt19937_64& rng, int count) {
  std::vector<int> pool;
  for (int id = 0; id < registry.size(); ++id) {
    if (!window.contains(id)) pool.push_back(id);
  }
  std::vector<int> picked;
  while (static_cast<int>(picked.size()) < count && !pool.empty()) {
    std::uniform_int_distribution<size_t> dist(0, pool.size() - 1);
    const size_t idx = dist(rng);
    picked.push_back(pool[idx]);
    pool.erase(pool.begin() + idx);
  }
  return picked;
}

}  // namespace splatslam
