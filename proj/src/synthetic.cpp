// Copyright Contributors to the splatslam project
// SPDX-License-Identifier: Apache-2.0
#include "splatslam/synthetic.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "splatslam/errors.hpp"
#include "splatslam/png_io.hpp"

namespace splatslam {

SE3Pose look_at(const Eigen::Vector3d& position, const Eigen::Vector3d& target) {
  const Eigen::Vector3d forward = (target - position).normalized();
  const Eigen::Vector3d down(0.0, 1.0, 0.0);
  Eigen::Vector3d right = down.cross(forward);
  if (right.norm() < 1e-9) {
    right = Eigen::Vector3d(1.0, 0.0, 0.0);
  } else {
    right.normalize();
  }
  const Eigen::Vector3d cam_down = forward.cross(right);

  Eigen::Matrix3d r_wc;
  r_wc.col(0) = right;
  r_wc.col(1) = cam_down;
  r_wc.col(2) = forward;
  return {r_wc.transpose(), -(r_wc.transpose() * position)};
}

namespace {

GaussianMap sample_map(const SyntheticSpec& spec, std::mt19937_64& rng) {
  GaussianMap map;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);

  for (int i = 0; i < spec.n_gaussians; ++i) {
    Eigen::Vector3d mean;
    for (int a = 0; a < 3; ++a) {
      mean[a] = (2.0 * unit(rng) - 1.0) * spec.scene_extent;
    }
    Eigen::Vector3d log_scale;
    for (int a = 0; a < 3; ++a) {
      log_scale[a] = std::log(0.02 + 0.05 * unit(rng));
    }
    Eigen::Vector4d q;
    for (int a = 0; a < 4; ++a) q[a] = normal(rng);
    q.normalize();
    const double opacity = 0.6 + 0.35 * unit(rng);
    Eigen::Vector3d colour_logit;
    for (int a = 0; a < 3; ++a) {
      colour_logit[a] = logit(0.05 + 0.9 * unit(rng));
    }
    map.append(mean, log_scale, q, logit(opacity), colour_logit, 0);
  }
  return map;
}

SE3Pose translated(const SE3Pose& base, const Eigen::Vector2d& image_plane_offset) {
  // Shift the camera centre inside its own x-y plane, keeping rotation.
  const Eigen::Matrix3d r_wc = base.rotation.transpose();
  const Eigen::Vector3d centre =
      base.centre() + r_wc * Eigen::Vector3d(image_plane_offset.x(),
                                             image_plane_offset.y(), 0.0);
  return {base.rotation, -(base.rotation * centre)};
}

}  // namespace

SyntheticScene generate_synthetic(const SyntheticSpec& spec,
                                  const RenderConfig& render_cfg) {
  SyntheticScene scene;
  std::mt19937_64 rng(spec.seed);
  scene.ground_truth_map = sample_map(spec, rng);

  scene.intrinsics.width = spec.width;
  scene.intrinsics.height = spec.height;
  scene.intrinsics.fx = scene.intrinsics.fy = 0.75 * spec.width;
  scene.intrinsics.cx = spec.width / 2.0;
  scene.intrinsics.cy = spec.height / 2.0;

  const Eigen::Vector3d origin = Eigen::Vector3d::Zero();

  switch (spec.trajectory) {
    case TrajectoryKind::kOrbit: {
      // A 40 degree arc keeps inter-frame motion inside the tracking basin.
      const double arc = 40.0 * M_PI / 180.0;
      for (int i = 0; i < spec.n_frames; ++i) {
        const double phi =
            spec.n_frames > 1 ? arc * (static_cast<double>(i) / (spec.n_frames - 1) - 0.5)
                              : 0.0;
        const Eigen::Vector3d pos(spec.orbit_radius * std::sin(phi), 0.0,
                                  -spec.orbit_radius * std::cos(phi));
        scene.trajectory.push_back(look_at(pos, origin));
      }
      break;
    }
    case TrajectoryKind::kLine: {
      const SE3Pose base =
          look_at(Eigen::Vector3d(0, 0, -spec.orbit_radius), origin);
      for (int i = 0; i < spec.n_frames; ++i) {
        const double s =
            spec.n_frames > 1 ? static_cast<double>(i) / (spec.n_frames - 1) - 0.5
                              : 0.0;
        scene.trajectory.push_back(translated(base, {0.5 * s, 0.0}));
      }
      break;
    }
    case TrajectoryKind::kFunnelSquare: {
      const SE3Pose centre =
          look_at(Eigen::Vector3d(0, 0, -spec.orbit_radius), origin);
      scene.funnel_target = centre;
      const double half = spec.funnel_square_width / 2.0;
      for (int gy = -1; gy <= 1; ++gy) {
        for (int gx = -1; gx <= 1; ++gx) {
          scene.trajectory.push_back(translated(centre, {gx * half, gy * half}));
        }
      }
      for (double radius : spec.funnel_ring_radii) {
        for (int i = 0; i < spec.funnel_starts_per_ring; ++i) {
          const double phi = 2.0 * M_PI * i / spec.funnel_starts_per_ring;
          scene.funnel_test_poses.push_back(translated(
              centre, {radius * std::cos(phi), radius * std::sin(phi)}));
          scene.funnel_test_radii.push_back(radius);
        }
      }
      break;
    }
  }

  RenderOptions options;
  options.with_depth = true;
  for (size_t i = 0; i < scene.trajectory.size(); ++i) {
    RenderOutput out = render(scene.ground_truth_map, scene.trajectory[i],
                              scene.intrinsics, render_cfg, options);
    Frame frame;
    frame.timestamp = static_cast<double>(i) / 30.0;
    frame.intrinsics = scene.intrinsics;
    frame.rgb = std::move(out.colour);
    if (spec.with_depth) frame.depth = std::move(out.depth);
    scene.frames.push_back(std::move(frame));
  }
  return scene;
}

void export_tum(const SyntheticScene& scene, const std::string& dir,
                double depth_scale) {
  namespace fs = std::filesystem;
  fs::create_directories(dir + "/rgb");
  const bool with_depth =
      !scene.frames.empty() && scene.frames.front().has_depth();
  if (with_depth) fs::create_directories(dir + "/depth");

  std::ofstream rgb_index(dir + "/rgb.txt");
  std::ofstream depth_index;
  if (with_depth) depth_index.open(dir + "/depth.txt");
  std::ofstream gt(dir + "/groundtruth.txt");
  rgb_index << "# timestamp filename\n";
  gt << "# timestamp tx ty tz qx qy qz qw\n";

  char name[64], line[256];
  for (size_t i = 0; i < scene.frames.size(); ++i) {
    const Frame& frame = scene.frames[i];
    std::snprintf(name, sizeof(name), "rgb/%06zu.png", i);
    write_png8(frame.rgb, dir + "/" + name);
    std::snprintf(line, sizeof(line), "%.6f %s\n", frame.timestamp, name);
    rgb_index << line;
    if (with_depth) {
      std::snprintf(name, sizeof(name), "depth/%06zu.png", i);
      write_png16_depth(frame.depth, dir + "/" + name, depth_scale);
      std::snprintf(line, sizeof(line), "%.6f %s\n", frame.timestamp, name);
      depth_index << line;
    }

    const SE3Pose pose_wc = scene.trajectory[i].inverse();
    const Eigen::Quaterniond q(pose_wc.rotation);
    std::snprintf(line, sizeof(line), "%.6f %.6f %.6f %.6f %.6f %.6f %.6f %.6f\n",
                  frame.timestamp, pose_wc.translation.x(),
                  pose_wc.translation.y(), pose_wc.translation.z(), q.x(), q.y(),
                  q.z(), q.w());
    gt << line;
  }

  std::ofstream intr(dir + "/intrinsics.txt");
  intr << scene.intrinsics.fx << " " << scene.intrinsics.fy << " "
       << scene.intrinsics.cx << " " << scene.intrinsics.cy << "\n";
}

}  // namespace splatslam
