// Copyright Contributors to the splatslam project
// SPDX-License-Identifier: Apache-2.0
#include "splatslam/gradients.hpp"

#include <algorithm>
#include <cmath>

#include "splatslam/errors.hpp"
#include "splatslam/threading.hpp"

namespace splatslam {

void GradientBuffers::resize(int n) {
  d_mean_w.assign(n, Eigen::Vector3d::Zero());
  d_log_scale.assign(n, Eigen::Vector3d::Zero());
  d_rotation_q.assign(n, Eigen::Vector4d::Zero());
  d_opacity_logit.assign(n, 0.0);
  d_colour_logit.assign(n, Eigen::Vector3d::Zero());
  d_camera_twist.setZero();
  d_exposure.setZero();
}

void GradientBuffers::reset() { resize(size()); }

Eigen::Matrix<double, 3, 6> d_meanC_d_pose(const Eigen::Vector3d& mu_c) {
  Eigen::Matrix<double, 3, 6> d;
  d.leftCols<3>() = Eigen::Matrix3d::Identity();
  d.rightCols<3>() = -skew(mu_c);
  return d;
}

std::array<Eigen::Matrix3d, 3> d_W_d_pose(const Eigen::Matrix3d& w) {
  std::array<Eigen::Matrix3d, 3> d;
  for (int k = 0; k < 3; ++k) {
    d[k] = skew(Eigen::Vector3d::Unit(k)) * w;
  }
  return d;
}

namespace {

// Per-splat accumulation of the per-pixel chain, completed by a single
// post-pass per splat.
struct SplatAccum {
  Eigen::Vector3d g_colour = Eigen::Vector3d::Zero();
  Eigen::Vector2d g_mu_i = Eigen::Vector2d::Zero();
  double g_opacity = 0.0;  // wrt activated opacity
  double g_q00 = 0.0, g_q01 = 0.0, g_q11 = 0.0;  // wrt conic entries
  double g_z = 0.0;
  bool touched = false;
};

// Entry-wise derivatives of the rotation matrix wrt the (unit) quaternion.
std::array<Eigen::Matrix3d, 4> rotation_quaternion_derivatives(
    const Eigen::Vector4d& q) {
  const double w = q[0], x = q[1], y = q[2], z = q[3];
  std::array<Eigen::Matrix3d, 4> d;
  d[0] << 0, -2 * z, 2 * y,  //
      2 * z, 0, -2 * x,      //
      -2 * y, 2 * x, 0;
  d[1] << 0, 2 * y, 2 * z,   //
      2 * y, -4 * x, -2 * w, //
      2 * z, 2 * w, -4 * x;
  d[2] << -4 * y, 2 * x, 2 * w,  //
      2 * x, 0, 2 * z,           //
      -2 * w, 2 * z, -4 * y;
  d[3] << -4 * z, -2 * w, 2 * x,  //
      2 * w, -4 * z, 2 * y,       //
      2 * x, 2 * y, 0;
  return d;
}

void replay_pixels(const RenderOutput& ro, const Image& dl_dc,
                   const Image* dl_dd, int tile_begin, int tile_end,
                   std::vector<SplatAccum>& accum) {
  const int ts = ro.tile_size;
  for (int tile = tile_begin; tile < tile_end; ++tile) {
    const int tx = tile % ro.tiles_x;
    const int ty = tile / ro.tiles_x;
    const int px1 = std::min(ro.width, (tx + 1) * ts);
    const int py1 = std::min(ro.height, (ty + 1) * ts);
    const auto& records = ro.tile_contributors[tile];

    for (int y = ty * ts; y < py1; ++y) {
      for (int x = tx * ts; x < px1; ++x) {
        const size_t pixel = static_cast<size_t>(y) * ro.width + x;
        const int count = ro.contributor_count[pixel];
        if (count == 0) continue;

        const double* gc_px = dl_dc.pixel(x, y);
        const Eigen::Vector3d gc(gc_px[0], gc_px[1], gc_px[2]);
        const double gd = dl_dd ? dl_dd->at(x, y) : 0.0;
        if (gc.isZero(0.0) && gd == 0.0) continue;

        const Contributor* list = records.data() + ro.contributor_start[pixel];

        // Back-to-front: accumulate the suffix sums S_C, S_D of the blended
        // contributions behind the current one.
        Eigen::Vector3d s_c = Eigen::Vector3d::Zero();
        double s_d = 0.0;
        for (int i = count - 1; i >= 0; --i) {
          const Contributor& rec = list[i];
          const int si = ro.splat_index[rec.gaussian_id];
          const Splat2D& sp = ro.splats[si];
          SplatAccum& acc = accum[si];
          acc.touched = true;

          const double weight = rec.alpha * rec.transmittance_before;
          acc.g_colour += gc * weight;
          acc.g_z += gd * weight;

          const double dl_dalpha =
              (gc.dot(sp.colour) + gd * sp.depth_z) * rec.transmittance_before -
              (gc.dot(s_c) + gd * s_d) / (1.0 - rec.alpha);
          s_c += sp.colour * weight;
          s_d += sp.depth_z * weight;

          // alpha = opacity * G with G = exp(-0.5 d^T Q d).
          const double g_gauss = rec.alpha / sp.opacity;
          acc.g_opacity += dl_dalpha * g_gauss;
          const double coef = dl_dalpha * rec.alpha;  // dL/dG * G

          const Eigen::Vector2d diff(x - sp.mu_i.x(), y - sp.mu_i.y());
          const Eigen::Vector2d qd = sp.conic * diff;
          acc.g_mu_i += coef * qd;
          // Gradient wrt the conic as a full matrix: -0.5 * coef * d d^T,
          // with the off-diagonal value stored once and mirrored later.
          acc.g_q00 += coef * (-0.5 * diff.x() * diff.x());
          acc.g_q01 += coef * (-0.5 * diff.x() * diff.y());
          acc.g_q11 += coef * (-0.5 * diff.y() * diff.y());
        }
      }
    }
  }
}

}  // namespace

void backward(const RenderOutput& ro, const Image& dl_dc, const Image* dl_dd,
              const GaussianMap& map, const SE3Pose& pose,
              const CameraIntrinsics& k, [[maybe_unused]] const RenderConfig& cfg,
              GradientBuffers& buffers, const BackwardOptions& options) {
  if (!ro.has_contributors) throw MissingContributors();
  if (buffers.size() != map.count) {
    throw ShapeMismatch("gradient buffers sized " +
                        std::to_string(buffers.size()) + " for a map of " +
                        std::to_string(map.count));
  }

  const int n_splats = static_cast<int>(ro.splats.size());
  const int n_tiles = ro.tiles_x * ro.tiles_y;
  const int threads = clamp_thread_count(options.threads);

  std::vector<SplatAccum> accum(n_splats);
  if (threads <= 1 || n_tiles <= 1) {
    replay_pixels(ro, dl_dc, dl_dd, 0, n_tiles, accum);
  } else {
    std::vector<std::vector<SplatAccum>> partials(threads);
    parallel_chunks(n_tiles, threads, [&](int chunk, int begin, int end) {
      partials[chunk].assign(n_splats, SplatAccum());
      replay_pixels(ro, dl_dc, dl_dd, begin, end, partials[chunk]);
    });
    for (const auto& part : partials) {
      if (part.empty()) continue;
      for (int i = 0; i < n_splats; ++i) {
        if (!part[i].touched) continue;
        accum[i].touched = true;
        accum[i].g_colour += part[i].g_colour;
        accum[i].g_mu_i += part[i].g_mu_i;
        accum[i].g_opacity += part[i].g_opacity;
        accum[i].g_q00 += part[i].g_q00;
        accum[i].g_q01 += part[i].g_q01;
        accum[i].g_q11 += part[i].g_q11;
        accum[i].g_z += part[i].g_z;
      }
    }
  }

  // Per-splat post-pass: chain the accumulated image-plane gradients into
  // the Gaussian parameters and the camera twist.
  const Eigen::Matrix3d w = pose.rotation;
  for (int si = 0; si < n_splats; ++si) {
    const SplatAccum& acc = accum[si];
    if (!acc.touched) continue;
    const Splat2D& sp = ro.splats[si];
    const int gid = sp.gaussian_id;

    if (options.need_gaussian_grads) {
      const double o = sp.opacity;
      buffers.d_opacity_logit[gid] += acc.g_opacity * o * (1.0 - o);
      const Eigen::Vector3d c = sp.colour;
      buffers.d_colour_logit[gid] +=
          acc.g_colour.cwiseProduct(c.cwiseProduct(Eigen::Vector3d::Ones() - c));
    }

    // Conic -> dilated covariance (Q = Sigma'^-1 so dL/dSigma' = -Q gQ Q).
    Eigen::Matrix2d g_q;
    g_q << acc.g_q00, acc.g_q01, acc.g_q01, acc.g_q11;
    const Eigen::Matrix2d g_sigma_i = -sp.conic * g_q * sp.conic;

    const Eigen::Matrix<double, 2, 3> j = projection_jacobian(sp.mu_c, k);
    const Eigen::Matrix<double, 2, 3> a = j * w;
    const Eigen::Matrix3d sigma_w =
        build_covariance(map.log_scale[gid], map.rotation_q[gid]);

    const Eigen::Matrix<double, 2, 3> g_a = 2.0 * g_sigma_i * a * sigma_w;
    const Eigen::Matrix3d g_sigma_w = a.transpose() * g_sigma_i * a;
    const Eigen::Matrix<double, 2, 3> g_j = g_a * w.transpose();
    const Eigen::Matrix3d g_w = j.transpose() * g_a;

    // mu_c receives the projection path, the Jacobian-linearization path and
    // the blended-depth path.
    Eigen::Vector3d g_mu_c = j.transpose() * acc.g_mu_i;
    const auto dj = projection_jacobian_derivative(sp.mu_c, k);
    for (int axis = 0; axis < 3; ++axis) {
      g_mu_c[axis] += g_j.cwiseProduct(dj[axis]).sum();
    }
    g_mu_c.z() += acc.g_z;

    if (options.need_gaussian_grads) {
      buffers.d_mean_w[gid] += w.transpose() * g_mu_c;

      const Eigen::Vector4d& q_raw = map.rotation_q[gid];
      const double q_norm = q_raw.norm();
      const Eigen::Vector4d q_hat = q_raw / q_norm;
      const Eigen::Matrix3d r = quaternion_to_rotation(q_raw);
      const Eigen::Vector3d var = (2.0 * map.log_scale[gid])
                                      .unaryExpr([](double v) { return std::exp(v); });

      // Sigma_W = R diag(var) R^T.
      const Eigen::Matrix3d b = r.transpose() * g_sigma_w * r;
      for (int axis = 0; axis < 3; ++axis) {
        buffers.d_log_scale[gid][axis] += b(axis, axis) * 2.0 * var[axis];
      }

      const Eigen::Matrix3d g_r = 2.0 * g_sigma_w * r * var.asDiagonal();
      const auto dr = rotation_quaternion_derivatives(q_hat);
      Eigen::Vector4d g_q_hat;
      for (int comp = 0; comp < 4; ++comp) {
        g_q_hat[comp] = g_r.cwiseProduct(dr[comp]).sum();
      }
      buffers.d_rotation_q[gid] +=
          (g_q_hat - q_hat * q_hat.dot(g_q_hat)) / q_norm;
    }

    if (options.need_pose_grad) {
      buffers.d_camera_twist.head<3>() += g_mu_c;
      buffers.d_camera_twist.tail<3>() += sp.mu_c.cross(g_mu_c);
      // dSigma_I/dW path: contract against the skew blocks.
      const auto dw = d_W_d_pose(w);
      for (int axis = 0; axis < 3; ++axis) {
        buffers.d_camera_twist[3 + axis] += g_w.cwiseProduct(dw[axis]).sum();
      }
    }
  }
}

void exposure_backward(const Image& pre_exposure_colour, const Image& dl_dc_post,
                       double a, Image& dl_dc_pre,
                       Eigen::Vector2d& d_exposure) {
  const double gain = std::exp(a);
  dl_dc_pre = dl_dc_post;
  double g_a = 0.0, g_b = 0.0;
  for (size_t i = 0; i < dl_dc_post.data.size(); ++i) {
    const double g = dl_dc_post.data[i];
    dl_dc_pre.data[i] = gain * g;
    g_a += g * gain * pre_exposure_colour.data[i];
    g_b += g;
  }
  d_exposure[0] += g_a;
  d_exposure[1] += g_b;
}

}  // namespace splatslam
