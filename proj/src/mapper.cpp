// Copyright Contributors to the splatslam project
// SPDX-License-Identifier: Apache-2.0
#include "splatslam/mapper.hpp"

#include <algorithm>

#include "splatslam/errors.hpp"
#include "splatslam/gradients.hpp"

namespace splatslam {

Mapper::StepStats Mapper::map_step(GaussianMap& map, KeyframeRegistry& registry,
                                   const KeyframeWindow& window,
                                   const RenderConfig& render_cfg) {
  StepStats stats;
  if (window.ids.empty()) return stats;

  // Fresh random revisits each iteration.
  stats.random_past = sample_random_past(registry, window, map.rng,
                                         config_.random_past_per_iteration);
  std::vector<int> active = window.ids;
  active.insert(active.end(), stats.random_past.begin(),
                stats.random_past.end());

  const int gauge_id = *std::min_element(window.ids.begin(), window.ids.end());

  GradientBuffers buffers;
  buffers.resize(map.count);

  RenderOptions options;
  options.with_depth = true;
  options.record_contributors = true;

  BackwardOptions bopts;
  bopts.need_gaussian_grads = true;
  bopts.need_pose_grad = config_.optimize_poses;
  bopts.threads = render_cfg.threads;

  struct PendingPoseStep {
    int id;
    Eigen::Matrix<double, 6, 1> grad;
  };
  std::vector<PendingPoseStep> pose_steps;

  for (int id : active) {
    Keyframe& kf = registry.get(id);
    const Frame& frame = *kf.frame;
    const bool rgbd = config_.use_depth && frame.has_depth();

    RenderOutput out = render(map, kf.pose, frame.intrinsics, render_cfg, options);
    kf.visible = out.visible_set();

    Image exposed = out.colour;
    apply_exposure(exposed, kf.exposure[0], kf.exposure[1]);

    const Mask pho_mask = full_mask(frame.intrinsics.width, frame.intrinsics.height);
    ScalarLoss pho = photometric_loss(exposed, frame.rgb, pho_mask);

    double kf_loss = pho.value;
    Image dl_dc_post = pho.grad;
    Image dl_dd;
    bool with_geo = false;
    if (rgbd) {
      const Mask geo_mask =
          depth_mask(frame.depth, out.acc_opacity, config_.tau_opaque);
      if (geo_mask.count() > 0) {
        ScalarLoss geo = geometric_loss(out.depth, frame.depth, geo_mask);
        kf_loss = config_.weights.lambda_pho * pho.value +
                  (1.0 - config_.weights.lambda_pho) * geo.value;
        for (double& v : dl_dc_post.data) v *= config_.weights.lambda_pho;
        dl_dd = geo.grad;
        for (double& v : dl_dd.data) v *= 1.0 - config_.weights.lambda_pho;
        with_geo = true;
      }
    }

    // Exposure is frozen during mapping; only chain the gain into dL/dC.
    Image dl_dc_pre;
    Eigen::Vector2d unused_exposure_grad = Eigen::Vector2d::Zero();
    exposure_backward(out.colour, dl_dc_post, kf.exposure[0], dl_dc_pre,
                      unused_exposure_grad);

    buffers.d_camera_twist.setZero();
    backward(out, dl_dc_pre, with_geo ? &dl_dd : nullptr, map, kf.pose,
             frame.intrinsics, render_cfg, buffers, bopts);

    if (config_.optimize_poses && id != gauge_id) {
      pose_steps.push_back({id, buffers.d_camera_twist});
    }

    stats.per_keyframe_loss.push_back(kf_loss);
    stats.total_loss += kf_loss;
  }

  // Isotropic regularization over all Gaussians, once per iteration.
  IsotropicLoss iso = isotropic_loss(map.log_scale);
  stats.iso_loss = iso.value;
  stats.total_loss += config_.weights.lambda_iso * iso.value;
  for (int i = 0; i < map.count; ++i) {
    buffers.d_log_scale[i] += config_.weights.lambda_iso * iso.d_log_scale[i];
  }

  map_optimizer_.step(map, buffers);
  for (const auto& ps : pose_steps) {
    auto [it, inserted] = pose_optimizers_.try_emplace(
        ps.id, config_.lr_cam_rotation, config_.lr_cam_translation);
    it->second.step(registry.get(ps.id).pose, ps.grad);
  }
  return stats;
}

Mapper::MappingSummary Mapper::run_mapping(GaussianMap& map,
                                           KeyframeRegistry& registry,
                                           KeyframeWindow& window,
                                           const RenderConfig& render_cfg,
                                           int budget) {
  if (budget < 1) throw InvalidBudget(budget);

  MappingSummary summary;
  for (int it = 0; it < budget; ++it) {
    const StepStats stats = map_step(map, registry, window, render_cfg);
    if (it == 0) summary.first_loss = stats.total_loss;
    summary.last_loss = stats.total_loss;
    ++summary.iterations;
  }

  const std::vector<int> observers = count_window_observers(map, registry, window);
  const int current_kf = window.ids.empty() ? 0 : window.latest();
  const PruneResult pruned = prune(map, observers, current_kf, window.full());
  summary.pruned = pruned.removed;
  if (pruned.removed > 0) {
    map_optimizer_.on_prune(pruned.old_to_new);
    for (auto& kf : registry.all) {
      kf->visible = remap_visible(kf->visible, pruned.old_to_new);
    }
  }
  return summary;
}

std::vector<int> count_window_observers(const GaussianMap& map,
                                        const KeyframeRegistry& registry,
                                        const KeyframeWindow& window) {
  std::vector<int> counts(map.count, 0);
  for (int id : window.ids) {
    const Keyframe& kf = registry.get(id);
    for (int gid : kf.visible) {
      if (gid < map.count && map.origin_keyframe[gid] != kf.id) ++counts[gid];
    }
  }
  return counts;
}

}  // namespace splatslam
