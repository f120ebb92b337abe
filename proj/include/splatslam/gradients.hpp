// Copyright Contributors to the splatslam project
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>
#include <array>
#include <vector>

#include "splatslam/gaussian_map.hpp"
#include "splatslam/render.hpp"

namespace splatslam {

/// Accumulated loss derivatives for every Gaussian parameter, the 6-DoF
/// camera twist and the affine exposure pair. Backward passes add into these
/// buffers; reset() zeroes everything.
struct GradientBuffers {
  std::vector<Eigen::Vector3d> d_mean_w;
  std::vector<Eigen::Vector3d> d_log_scale;
  std::vector<Eigen::Vector4d> d_rotation_q;
  std::vector<double> d_opacity_logit;
  std::vector<Eigen::Vector3d> d_colour_logit;
  Eigen::Matrix<double, 6, 1> d_camera_twist =
      Eigen::Matrix<double, 6, 1>::Zero();  // [rho; theta]
  Eigen::Vector2d d_exposure = Eigen::Vector2d::Zero();  // (a, b)

  void resize(int n);
  void reset();
  int size() const { return static_cast<int>(d_mean_w.size()); }
};

struct BackwardOptions {
  bool need_gaussian_grads = true;
  bool need_pose_grad = true;
  int threads = 1;
};

/// Manifold derivative of the camera-frame point wrt the pose: [I | -mu_c^x],
/// columns ordered [rho; theta].
Eigen::Matrix<double, 3, 6> d_meanC_d_pose(const Eigen::Vector3d& mu_c);

/// Rotational derivative blocks of W: element k holds dW/d(theta_k) = e_k^x W.
/// Translational derivatives of W are zero.
std::array<Eigen::Matrix3d, 3> d_W_d_pose(const Eigen::Matrix3d& w);

/// Replays the recorded blending back-to-front and chains the per-pixel loss
/// gradients into all Gaussian parameters and the camera twist. dl_dd may be
/// null when no depth loss is present. Throws MissingContributors when the
/// render was made without record_contributors.
void backward(const RenderOutput& render_output, const Image& dl_dc,
              const Image* dl_dd, const GaussianMap& map, const SE3Pose& pose,
              const CameraIntrinsics& k, const RenderConfig& cfg,
              GradientBuffers& buffers, const BackwardOptions& options = {});

/// Chains a post-exposure colour gradient through out = exp(a) * in + b:
/// fills dl_dc_pre = exp(a) * dl_dc_post and accumulates (dL/da, dL/db) into
/// d_exposure. pre_exposure_colour is the renderer's unexposed buffer.
void exposure_backward(const Image& pre_exposure_colour, const Image& dl_dc_post,
                       double a, Image& dl_dc_pre, Eigen::Vector2d& d_exposure);

}  // namespace splatslam
