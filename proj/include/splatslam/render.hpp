// Copyright Contributors to the splatslam project
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <vector>

#include "splatslam/gaussian_map.hpp"
#include "splatslam/image.hpp"
#include "splatslam/lie.hpp"

namespace splatslam {

struct RenderConfig {
  int tile_size = 16;
  double alpha_min = 1.0 / 255.0;        // skip threshold per contribution
  double transmittance_min = 1e-4;       // stop once T drops below this
  double dilation = 0.3;                 // low-pass dilation of Sigma_I, px^2
  double z_near = 0.01;                  // frustum cull, metres
  double visibility_opacity = 0.5;       // accumulated-alpha bound for G^v
  int max_contributors = 256;            // per-pixel backward record cap
  int threads = 1;
};

struct RenderOptions {
  bool with_depth = true;
  bool record_contributors = false;
};

/// Image-plane footprint of one projected Gaussian.
struct Splat2D {
  int gaussian_id = -1;
  Eigen::Vector2d mu_i;       // pixel coordinates
  Eigen::Matrix2d cov_i;      // dilated image-plane covariance, px^2
  Eigen::Matrix2d conic;      // inverse of cov_i
  double depth_z = 0.0;       // camera-frame z of the mean
  double radius = 0.0;        // 3 sigma of the dilated covariance
  // Half-open pixel bounds of the 3-sigma circle, clamped to the image.
  int x0 = 0, x1 = 0, y0 = 0, y1 = 0;
  Eigen::Vector3d mu_c;       // camera-frame mean (kept for the backward pass)
  double opacity = 0.0;       // activated
  Eigen::Vector3d colour;     // activated

  bool covers(int x, int y) const {
    return x >= x0 && x < x1 && y >= y0 && y < y1;
  }
};

struct Contributor {
  std::int32_t gaussian_id;
  double alpha;
  double transmittance_before;
};

struct RenderOutput {
  int width = 0;
  int height = 0;
  Image colour;       // H x W x 3
  Image depth;        // H x W (zero when with_depth is off)
  Image acc_opacity;  // H x W
  bool exposure_applied = false;

  bool has_contributors = false;
  int tile_size = 16;
  int tiles_x = 0, tiles_y = 0;
  // Ordered front-to-back records per pixel, stored per tile; a pixel's list
  // is tile_contributors[tile_of(x,y)][start .. start+count).
  std::vector<std::vector<Contributor>> tile_contributors;
  std::vector<std::uint32_t> contributor_start;  // per pixel
  std::vector<std::uint16_t> contributor_count;  // per pixel
  std::vector<Splat2D> splats;                   // visible splats, depth-sorted
  std::vector<std::int32_t> splat_index;         // per gaussian, -1 if culled
  std::vector<std::uint8_t> visible_flags;       // per gaussian (G^v)

  int tile_of(int x, int y) const {
    return (y / tile_size) * tiles_x + (x / tile_size);
  }
  const Contributor* contributors(int x, int y, int* count) const {
    const size_t p = static_cast<size_t>(y) * width + x;
    *count = contributor_count[p];
    if (*count == 0) return nullptr;
    return tile_contributors[tile_of(x, y)].data() + contributor_start[p];
  }

  VisibleSet visible_set() const {
    VisibleSet out;
    for (int i = 0; i < static_cast<int>(visible_flags.size()); ++i) {
      if (visible_flags[i]) out.push_back(i);
    }
    return out;
  }
};

/// EWA projection of one Gaussian; nullopt when culled (behind the near
/// plane, off the image, or with a degenerate dilated covariance).
std::optional<Splat2D> project_gaussian(const Eigen::Vector3d& mean_w,
                                        const Eigen::Matrix3d& cov_w,
                                        const SE3Pose& pose,
                                        const CameraIntrinsics& k,
                                        const RenderConfig& cfg);

/// Projects every map Gaussian and returns the surviving splats sorted by
/// (depth_z, gaussian_id), plus the per-gaussian splat index (-1 = culled).
std::vector<Splat2D> project_all(const GaussianMap& map, const SE3Pose& pose,
                                 const CameraIntrinsics& k,
                                 const RenderConfig& cfg,
                                 std::vector<std::int32_t>* splat_index);

/// Tile-based forward rasterization.
RenderOutput render(const GaussianMap& map, const SE3Pose& pose,
                    const CameraIntrinsics& k, const RenderConfig& cfg,
                    const RenderOptions& options = {});

/// out = exp(a) * in + b, applied in place and unclamped.
void apply_exposure(Image& colour, double a, double b);
void apply_exposure(RenderOutput& out, double a, double b);

}  // namespace splatslam
