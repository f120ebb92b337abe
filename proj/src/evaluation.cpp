// Copyright Contributors to the splatslam project
// SPDX-License-Identifier: Apache-2.0
#include "splatslam/evaluation.hpp"

#include <Eigen/Geometry>
#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "splatslam/errors.hpp"

namespace splatslam {

AteReport ate_rmse(const std::vector<SE3Pose>& estimated_wc,
                   const std::vector<SE3Pose>& reference_wc, bool with_scale) {
  if (estimated_wc.size() != reference_wc.size()) {
    throw LengthMismatch("trajectory lengths differ: " +
                         std::to_string(estimated_wc.size()) + " vs " +
                         std::to_string(reference_wc.size()));
  }
  const int n = static_cast<int>(estimated_wc.size());
  if (n < 2) throw LengthMismatch("need at least 2 poses");

  Eigen::Matrix3Xd src(3, n), dst(3, n);
  for (int i = 0; i < n; ++i) {
    src.col(i) = estimated_wc[i].translation;
    dst.col(i) = reference_wc[i].translation;
  }

  const Eigen::Vector3d src_mean = src.rowwise().mean();
  double spread = 0.0;
  for (int i = 0; i < n; ++i) spread += (src.col(i) - src_mean).squaredNorm();
  if (spread < 1e-18) {
    throw DegenerateGeometry("all estimated positions coincide");
  }

  const Eigen::Matrix4d t = Eigen::umeyama(src, dst, with_scale);
  AteReport report;
  report.scale_aligned = with_scale;
  report.alignment_scale =
      with_scale ? std::cbrt(t.block<3, 3>(0, 0).determinant()) : 1.0;
  report.alignment_rotation = t.block<3, 3>(0, 0) / report.alignment_scale;
  report.alignment_translation = t.block<3, 1>(0, 3);

  double sum_sq = 0.0;
  report.per_frame_error.resize(n);
  for (int i = 0; i < n; ++i) {
    const Eigen::Vector3d aligned =
        t.block<3, 3>(0, 0) * src.col(i) + t.block<3, 1>(0, 3);
    const double err = (dst.col(i) - aligned).norm();
    report.per_frame_error[i] = err;
    sum_sq += err * err;
  }
  report.rmse = std::sqrt(sum_sq / n);
  return report;
}

double psnr(const Image& rendered, const Image& reference) {
  if (!rendered.same_shape(reference)) {
    throw ShapeMismatch("psnr image shapes differ");
  }
  double mse = 0.0;
  for (size_t i = 0; i < rendered.data.size(); ++i) {
    const double d = rendered.data[i] - reference.data[i];
    mse += d * d;
  }
  mse /= static_cast<double>(rendered.data.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / mse);
}

namespace {

std::vector<double> gaussian_kernel_11() {
  constexpr double sigma = 1.5;
  std::vector<double> k(11);
  double sum = 0.0;
  for (int i = 0; i < 11; ++i) {
    const double d = i - 5;
    k[i] = std::exp(-d * d / (2.0 * sigma * sigma));
    sum += k[i];
  }
  for (double& v : k) v /= sum;
  return k;
}

// Separable valid-mode Gaussian filter of one channel.
Image gaussian_filter_valid(const Image& img, int channel,
                            const std::vector<double>& k) {
  const int r = static_cast<int>(k.size()) / 2;
  Image horiz(img.width - 2 * r, img.height, 1);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < horiz.width; ++x) {
      double acc = 0.0;
      for (size_t i = 0; i < k.size(); ++i) {
        acc += k[i] * img.at(x + static_cast<int>(i), y, channel);
      }
      horiz.at(x, y) = acc;
    }
  }
  Image out(horiz.width, img.height - 2 * r, 1);
  for (int y = 0; y < out.height; ++y) {
    for (int x = 0; x < out.width; ++x) {
      double acc = 0.0;
      for (size_t i = 0; i < k.size(); ++i) {
        acc += k[i] * horiz.at(x, y + static_cast<int>(i));
      }
      out.at(x, y) = acc;
    }
  }
  return out;
}

double ssim_channel(const Image& a, const Image& b, int channel,
                    const std::vector<double>& kernel) {
  constexpr double c1 = 0.01 * 0.01;
  constexpr double c2 = 0.03 * 0.03;

  Image a2(a.width, a.height, 1), b2(a.width, a.height, 1), ab(a.width, a.height, 1);
  for (int y = 0; y < a.height; ++y) {
    for (int x = 0; x < a.width; ++x) {
      const double va = a.at(x, y, channel);
      const double vb = b.at(x, y, channel);
      a2.at(x, y) = va * va;
      b2.at(x, y) = vb * vb;
      ab.at(x, y) = va * vb;
    }
  }

  const Image mu_a = gaussian_filter_valid(a, channel, kernel);
  const Image mu_b = gaussian_filter_valid(b, channel, kernel);
  const Image m_a2 = gaussian_filter_valid(a2, 0, kernel);
  const Image m_b2 = gaussian_filter_valid(b2, 0, kernel);
  const Image m_ab = gaussian_filter_valid(ab, 0, kernel);

  double total = 0.0;
  for (int y = 0; y < mu_a.height; ++y) {
    for (int x = 0; x < mu_a.width; ++x) {
      const double ma = mu_a.at(x, y), mb = mu_b.at(x, y);
      const double va = m_a2.at(x, y) - ma * ma;
      const double vb = m_b2.at(x, y) - mb * mb;
      const double cov = m_ab.at(x, y) - ma * mb;
      total += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) /
               ((ma * ma + mb * mb + c1) * (va + vb + c2));
    }
  }
  return total / (static_cast<double>(mu_a.width) * mu_a.height);
}

}  // namespace

double ssim(const Image& rendered, const Image& reference) {
  if (!rendered.same_shape(reference)) {
    throw ShapeMismatch("ssim image shapes differ");
  }
  if (rendered.width < 11 || rendered.height < 11) {
    throw ShapeMismatch("ssim needs at least 11x11 images");
  }
  const auto kernel = gaussian_kernel_11();
  double total = 0.0;
  for (int c = 0; c < rendered.channels; ++c) {
    total += ssim_channel(rendered, reference, c, kernel);
  }
  return total / rendered.channels;
}

FunnelReport funnel_analysis(const GaussianMap& trained_map,
                             const Frame& target_view, const SE3Pose& target_pose,
                             const std::vector<SE3Pose>& start_poses,
                             const std::vector<double>& start_radii,
                             const FunnelConfig& config,
                             const RenderConfig& render_cfg) {
  FunnelReport report;
  if (start_poses.size() != start_radii.size()) {
    throw LengthMismatch("start pose/radius lists differ");
  }

  TrackerConfig tracker_cfg = config.tracker;
  tracker_cfg.max_iterations = config.budget;
  tracker_cfg.use_depth = false;  // photometric-only localisation
  tracker_cfg.divergence_factor = std::numeric_limits<double>::infinity();

  // Photometric localisation against an RGB-only copy of the target view.
  Frame target_rgb = target_view;
  target_rgb.depth = Image();

  const Eigen::Vector3d target_centre = target_pose.centre();

  for (size_t i = 0; i < start_poses.size(); ++i) {
    SE3Pose final_pose = start_poses[i];
    bool feasible = true;
    try {
      TrackingResult result =
          track(trained_map, target_rgb, start_poses[i],
                Eigen::Vector2d::Zero(), tracker_cfg, render_cfg);
      final_pose = result.pose;
    } catch (const DivergedPose&) {
      feasible = false;  // counts as a failed start
    }

    const double err = (final_pose.centre() - target_centre).norm();
    const bool success = feasible && err < config.success_radius;

    const Eigen::AngleAxisd rot_err(final_pose.rotation *
                                    target_pose.rotation.transpose());
    report.final_rotation_errors_deg.push_back(rot_err.angle() * 180.0 / M_PI);

    ++report.attempts;
    report.successes += success ? 1 : 0;

    auto ring = std::find_if(report.rings.begin(), report.rings.end(),
                             [&](const FunnelRing& r) {
                               return std::abs(r.radius - start_radii[i]) < 1e-12;
                             });
    if (ring == report.rings.end()) {
      report.rings.push_back({start_radii[i], 0, 0});
      ring = std::prev(report.rings.end());
    }
    ++ring->attempts;
    ring->successes += success ? 1 : 0;
  }

  std::sort(report.rings.begin(), report.rings.end(),
            [](const FunnelRing& a, const FunnelRing& b) {
              return a.radius < b.radius;
            });
  return report;
}

std::string format_metric_report(
    const std::vector<std::pair<std::string, std::string>>& entries) {
  std::ostringstream os;
  for (const auto& [key, value] : entries) {
    os << key << "=" << value << "\n";
  }
  return os.str();
}

}  // namespace splatslam
