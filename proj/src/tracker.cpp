// Copyright Contributors to the splatslam project
// SPDX-License-Identifier: Apache-2.0
#include "splatslam/tracker.hpp"

#include <algorithm>
#include <cmath>

#include "splatslam/errors.hpp"
#include "splatslam/gradients.hpp"
#include "splatslam/optimizer.hpp"

namespace splatslam {

namespace {

double median_of_masked(const Image& depth, const Image& acc_opacity,
                        double tau) {
  std::vector<double> vals;
  for (int y = 0; y < depth.height; ++y) {
    for (int x = 0; x < depth.width; ++x) {
      if (acc_opacity.at(x, y) >= tau) vals.push_back(depth.at(x, y));
    }
  }
  if (vals.empty()) return 0.0;
  const size_t mid = vals.size() / 2;
  std::nth_element(vals.begin(), vals.begin() + mid, vals.end());
  return vals[mid];
}

}  // namespace

TrackingResult track(const GaussianMap& map, const Frame& frame,
                     const SE3Pose& initial_pose,
                     const Eigen::Vector2d& initial_exposure,
                     const TrackerConfig& config,
                     const RenderConfig& render_cfg) {
  if (map.count == 0) throw EmptyMap();

  const bool rgbd = config.use_depth && frame.has_depth();
  const CameraIntrinsics& k = frame.intrinsics;

  TrackingResult result;
  result.pose = initial_pose;
  result.exposure = initial_exposure;

  PoseOptimizer pose_opt(config.lr_rotation, config.lr_translation);
  ExposureOptimizer exposure_opt(config.lr_exposure);
  GradientBuffers buffers;
  buffers.resize(map.count);

  RenderOptions options;
  options.with_depth = true;
  options.record_contributors = true;

  double initial_loss = -1.0;

  for (int it = 0; it < config.max_iterations; ++it) {
    RenderOutput out = render(map, result.pose, k, render_cfg, options);
    Image exposed = out.colour;
    apply_exposure(exposed, result.exposure[0], result.exposure[1]);

    Mask pho_mask;
    if (rgbd) {
      pho_mask = full_mask(k.width, k.height);
    } else {
      pho_mask = opacity_mask(out.acc_opacity, config.opacity_mask_threshold);
      if (pho_mask.count() == 0) {
        // Sparse early maps can miss the strict gate entirely; fall back to
        // the depth-estimate gate before giving up.
        pho_mask = opacity_mask(out.acc_opacity, config.tau_opaque);
      }
      if (pho_mask.count() == 0) {
        throw DivergedPose("no sufficiently opaque pixels to track against");
      }
    }

    ScalarLoss pho = photometric_loss(exposed, frame.rgb, pho_mask);
    double loss = pho.value;
    ScalarLoss geo;
    if (rgbd) {
      const Mask geo_mask =
          depth_mask(frame.depth, out.acc_opacity, config.tau_opaque);
      if (geo_mask.count() > 0) {
        geo = geometric_loss(out.depth, frame.depth, geo_mask);
        loss = config.lambda_pho * pho.value +
               (1.0 - config.lambda_pho) * geo.value;
      }
    }

    if (!std::isfinite(loss)) throw DivergedPose("tracking loss is not finite");
    if (initial_loss < 0.0) {
      initial_loss = loss;
    } else if (loss > config.divergence_factor * std::max(initial_loss, 1e-12)) {
      throw DivergedPose("tracking loss diverged");
    }

    // Chain the post-exposure colour gradient back to the renderer output.
    Image dl_dc_post = pho.grad;
    const bool weighted = rgbd && !geo.grad.empty();
    if (weighted) {
      for (double& v : dl_dc_post.data) v *= config.lambda_pho;
    }
    Image dl_dc_pre;
    buffers.d_camera_twist.setZero();
    buffers.d_exposure.setZero();
    exposure_backward(out.colour, dl_dc_post, result.exposure[0], dl_dc_pre,
                      buffers.d_exposure);

    Image dl_dd;
    if (weighted) {
      dl_dd = geo.grad;
      for (double& v : dl_dd.data) v *= 1.0 - config.lambda_pho;
    }

    BackwardOptions bopts;
    bopts.need_gaussian_grads = false;
    bopts.need_pose_grad = true;
    bopts.threads = render_cfg.threads;
    backward(out, dl_dc_pre, weighted ? &dl_dd : nullptr, map, result.pose, k,
             render_cfg, buffers, bopts);

    const double delta = pose_opt.step(result.pose, buffers.d_camera_twist);
    exposure_opt.step(result.exposure, buffers.d_exposure);

    result.iterations_used = it + 1;
    result.final_loss = loss;
    if (delta < config.early_stop_delta) {
      result.converged = true;
      break;
    }
  }

  // Final statistics at the accepted pose for keyframing and insertion.
  RenderOptions final_opts;
  final_opts.with_depth = true;
  RenderOutput final_out = render(map, result.pose, k, render_cfg, final_opts);
  result.visible = final_out.visible_set();
  result.median_rendered_depth =
      median_of_masked(final_out.depth, final_out.acc_opacity, config.tau_opaque);
  result.rendered_depth = std::move(final_out.depth);
  result.rendered_opacity = std::move(final_out.acc_opacity);
  return result;
}

SE3Pose predict_pose(const SE3Pose& prev, const SE3Pose& prev_prev) {
  return exp_se3(log_se3(prev * prev_prev.inverse())) * prev;
}

}  // namespace splatslam
