// Copyright Contributors to the splatslam project
// SPDX-License-Identifier: Apache-2.0
#include "splatslam/render.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>

#include "splatslam/threading.hpp"

namespace splatslam {

std::optional<Splat2D> project_gaussian(const Eigen::Vector3d& mean_w,
                                        const Eigen::Matrix3d& cov_w,
                                        const SE3Pose& pose,
                                        const CameraIntrinsics& k,
                                        const RenderConfig& cfg) {
  const Eigen::Vector3d mu_c = pose * mean_w;
  if (mu_c.z() <= cfg.z_near) return std::nullopt;

  Splat2D s;
  s.mu_c = mu_c;
  s.depth_z = mu_c.z();
  s.mu_i = project(mu_c, k);

  const Eigen::Matrix<double, 2, 3> j = projection_jacobian(mu_c, k);
  const Eigen::Matrix<double, 2, 3> a = j * pose.rotation;
  s.cov_i = a * cov_w * a.transpose();
  s.cov_i(0, 0) += cfg.dilation;
  s.cov_i(1, 1) += cfg.dilation;

  const double det = s.cov_i(0, 0) * s.cov_i(1, 1) - s.cov_i(0, 1) * s.cov_i(1, 0);
  if (!(det > 0.0)) return std::nullopt;
  const double inv_det = 1.0 / det;
  s.conic << s.cov_i(1, 1) * inv_det, -s.cov_i(0, 1) * inv_det,
      -s.cov_i(1, 0) * inv_det, s.cov_i(0, 0) * inv_det;

  const double mid = 0.5 * (s.cov_i(0, 0) + s.cov_i(1, 1));
  const double lambda_max = mid + std::sqrt(std::max(0.0, mid * mid - det));
  s.radius = 3.0 * std::sqrt(lambda_max);

  // Pixels with integer coordinate inside [mu - r, mu + r].
  s.x0 = std::max(0, static_cast<int>(std::ceil(s.mu_i.x() - s.radius)));
  s.x1 = std::min(k.width, static_cast<int>(std::floor(s.mu_i.x() + s.radius)) + 1);
  s.y0 = std::max(0, static_cast<int>(std::ceil(s.mu_i.y() - s.radius)));
  s.y1 = std::min(k.height, static_cast<int>(std::floor(s.mu_i.y() + s.radius)) + 1);
  if (s.x0 >= s.x1 || s.y0 >= s.y1) return std::nullopt;
  return s;
}

std::vector<Splat2D> project_all(const GaussianMap& map, const SE3Pose& pose,
                                 const CameraIntrinsics& k,
                                 const RenderConfig& cfg,
                                 std::vector<std::int32_t>* splat_index) {
  std::vector<Splat2D> splats;
  splats.reserve(map.count);
  for (int i = 0; i < map.count; ++i) {
    auto s = project_gaussian(map.mean_w[i],
                              build_covariance(map.log_scale[i], map.rotation_q[i]),
                              pose, k, cfg);
    if (!s) continue;
    s->gaussian_id = i;
    s->opacity = map.opacity(i);
    s->colour = map.colour(i);
    splats.push_back(*s);
  }
  std::sort(splats.begin(), splats.end(), [](const Splat2D& a, const Splat2D& b) {
    if (a.depth_z != b.depth_z) return a.depth_z < b.depth_z;
    return a.gaussian_id < b.gaussian_id;
  });
  if (splat_index) {
    splat_index->assign(map.count, -1);
    for (int i = 0; i < static_cast<int>(splats.size()); ++i) {
      (*splat_index)[splats[i].gaussian_id] = i;
    }
  }
  return splats;
}

namespace {

// Blends one tile. Writes colour/depth/opacity for its pixels and, when
// recording, appends the per-pixel contributor lists to `records`.
void rasterize_tile(const std::vector<Splat2D>& splats,
                    const std::vector<std::int32_t>& tile_list,
                    int tx0, int tx1, int ty0, int ty1,
                    const RenderConfig& cfg, const RenderOptions& options,
                    bool multithreaded, RenderOutput& out,
                    std::vector<Contributor>* records) {
  for (int y = ty0; y < ty1; ++y) {
    for (int x = tx0; x < tx1; ++x) {
      double t = 1.0;
      Eigen::Vector3d c = Eigen::Vector3d::Zero();
      double d = 0.0;
      const size_t pixel = static_cast<size_t>(y) * out.width + x;
      const std::uint32_t start =
          records ? static_cast<std::uint32_t>(records->size()) : 0;
      int count = 0;

      for (const std::int32_t si : tile_list) {
        if (t < cfg.transmittance_min) break;
        const Splat2D& s = splats[si];
        if (!s.covers(x, y)) continue;
        const Eigen::Vector2d diff(x - s.mu_i.x(), y - s.mu_i.y());
        const double power =
            -0.5 * (s.conic(0, 0) * diff.x() * diff.x() +
                    s.conic(1, 1) * diff.y() * diff.y()) -
            s.conic(0, 1) * diff.x() * diff.y();
        const double alpha = s.opacity * std::exp(power);
        if (alpha < cfg.alpha_min) continue;

        c += s.colour * (alpha * t);
        if (options.with_depth) d += s.depth_z * (alpha * t);
        if (records && count < cfg.max_contributors) {
          records->push_back({s.gaussian_id, alpha, t});
          ++count;
        }
        if (1.0 - t < cfg.visibility_opacity) {
          if (multithreaded) {
            std::atomic_ref<std::uint8_t>(out.visible_flags[s.gaussian_id])
                .store(1, std::memory_order_relaxed);
          } else {
            out.visible_flags[s.gaussian_id] = 1;
          }
        }
        t *= 1.0 - alpha;
      }

      double* px = out.colour.pixel(x, y);
      px[0] = c.x();
      px[1] = c.y();
      px[2] = c.z();
      if (options.with_depth) out.depth.at(x, y) = d;
      out.acc_opacity.at(x, y) = 1.0 - t;
      if (records) {
        out.contributor_start[pixel] = start;
        out.contributor_count[pixel] = static_cast<std::uint16_t>(count);
      }
    }
  }
}

}  // namespace

RenderOutput render(const GaussianMap& map, const SE3Pose& pose,
                    const CameraIntrinsics& k, const RenderConfig& cfg,
                    const RenderOptions& options) {
  RenderOutput out;
  out.width = k.width;
  out.height = k.height;
  out.colour = Image(k.width, k.height, 3);
  out.depth = Image(k.width, k.height, 1);
  out.acc_opacity = Image(k.width, k.height, 1);
  out.tile_size = cfg.tile_size;
  out.tiles_x = (k.width + cfg.tile_size - 1) / cfg.tile_size;
  out.tiles_y = (k.height + cfg.tile_size - 1) / cfg.tile_size;
  out.visible_flags.assign(map.count, 0);
  out.has_contributors = options.record_contributors;

  out.splats = project_all(map, pose, k, cfg, &out.splat_index);

  const int n_tiles = out.tiles_x * out.tiles_y;
  std::vector<std::vector<std::int32_t>> tile_lists(n_tiles);
  for (int si = 0; si < static_cast<int>(out.splats.size()); ++si) {
    const Splat2D& s = out.splats[si];
    const int tx_begin = s.x0 / cfg.tile_size;
    const int tx_end = (s.x1 - 1) / cfg.tile_size;
    const int ty_begin = s.y0 / cfg.tile_size;
    const int ty_end = (s.y1 - 1) / cfg.tile_size;
    for (int ty = ty_begin; ty <= ty_end; ++ty) {
      for (int tx = tx_begin; tx <= tx_end; ++tx) {
        tile_lists[ty * out.tiles_x + tx].push_back(si);
      }
    }
  }

  if (options.record_contributors) {
    out.tile_contributors.resize(n_tiles);
    out.contributor_start.assign(out.colour.pixel_count(), 0);
    out.contributor_count.assign(out.colour.pixel_count(), 0);
  }

  const int threads = clamp_thread_count(cfg.threads);
  const bool multithreaded = threads > 1;
  parallel_chunks(n_tiles, threads, [&](int, int begin, int end) {
    for (int tile = begin; tile < end; ++tile) {
      const int tx = tile % out.tiles_x;
      const int ty = tile / out.tiles_x;
      const int px0 = tx * cfg.tile_size;
      const int px1 = std::min(k.width, px0 + cfg.tile_size);
      const int py0 = ty * cfg.tile_size;
      const int py1 = std::min(k.height, py0 + cfg.tile_size);
      rasterize_tile(out.splats, tile_lists[tile], px0, px1, py0, py1, cfg,
                     options, multithreaded, out,
                     options.record_contributors ? &out.tile_contributors[tile]
                                                 : nullptr);
    }
  });

  return out;
}

void apply_exposure(Image& colour, double a, double b) {
  const double gain = std::exp(a);
  for (double& v : colour.data) v = gain * v + b;
}

void apply_exposure(RenderOutput& out, double a, double b) {
  apply_exposure(out.colour, a, b);
  out.exposure_applied = true;
}

}  // namespace splatslam
