// Test-only oracles: a brute-force renderer (global sort, no tiling), finite
// difference helpers, randomized scene builders with gate-margin screening,
// and a map digest. These stay independent of the production tile path.
#pragma once

#include <cstdint>
#include <functional>
#include <random>

#include "splatslam/gaussian_map.hpp"
#include "splatslam/gradients.hpp"
#include "splatslam/losses.hpp"
#include "splatslam/render.hpp"

namespace splatslam::testing {

/// Per-pixel blending over every projected splat in global depth order,
/// without tile lists. Must match the tile renderer bit for bit.
RenderOutput render_brute_force(const GaussianMap& map, const SE3Pose& pose,
                                const CameraIntrinsics& k,
                                const RenderConfig& cfg,
                                const RenderOptions& options = {});

/// Central finite difference of a scalar function.
double fd_central(const std::function<double(double)>& f, double x0,
                  double step);

/// True when |analytic - fd| passes the acceptance tolerance: relative
/// 1e-4, or absolute 1e-6 near zero.
bool grad_matches(double analytic, double fd, double rel_tol = 1e-4,
                  double abs_tol = 1e-6);

/// FNV-1a over the map's parameter arrays.
std::uint64_t map_digest(const GaussianMap& map);

struct TestScene {
  GaussianMap map;
  SE3Pose pose;
  CameraIntrinsics intrinsics;
  Eigen::Vector2d exposure = Eigen::Vector2d::Zero();
  Image target_rgb;
  Image target_depth;
  Mask pho_mask;  // frozen masks so finite differences see a fixed domain
  Mask geo_mask;
  LossWeights weights;
};

/// Randomized scene for gradient checks. Opacities stay below 0.35 so the
/// bounding-box cut sits under the alpha_min gate, targets are offset from
/// the render so L1 kinks stay away, and scenes where any alpha_min /
/// transmittance / bbox / mask gate sits within a finite-difference step are
/// resampled (the gates are measure-zero discontinuities of the loss).
TestScene make_gradient_scene(int n_gaussians, int width, int height,
                              std::uint64_t seed, const RenderConfig& cfg);

/// Forward-only combined loss of a scene (weighted photometric + geometric
/// over the frozen masks) for finite differencing.
double scene_loss(const TestScene& scene, const GaussianMap& map,
                  const SE3Pose& pose, const Eigen::Vector2d& exposure,
                  const RenderConfig& cfg);

/// Analytic gradients of scene_loss via the production backward path.
GradientBuffers scene_gradients(const TestScene& scene, const RenderConfig& cfg);

}  // namespace splatslam::testing
