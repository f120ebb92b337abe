#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>

#include "splatslam/gaussian_map.hpp"
#include "splatslam/ply_io.hpp"

#include "support/oracles.hpp"

using namespace splatslam;

namespace {

Frame constant_depth_frame(int w, int h, double depth, double fx = 100.0) {
  Frame f;
  f.rgb = Image(w, h, 3, 0.5);
  f.depth = Image(w, h, 1, depth);
  f.intrinsics = {fx, fx, w / 2.0, h / 2.0, w, h};
  return f;
}

}  // namespace

TEST_CASE("build_covariance closed forms") {
  const Eigen::Vector4d identity_q(1, 0, 0, 0);
  CHECK(build_covariance(Eigen::Vector3d::Zero(), identity_q)
            .isIdentity(1e-15));

  const Eigen::Matrix3d c =
      build_covariance(Eigen::Vector3d(std::log(2.0), 0, 0), identity_q);
  CHECK(c.isApprox(Eigen::Vector3d(4, 1, 1).asDiagonal().toDenseMatrix(), 1e-12));
}

TEST_CASE("build_covariance eigenvalues equal exp(2s) for random inputs") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int i = 0; i < 50; ++i) {
    Eigen::Vector3d s(unit(rng), unit(rng), unit(rng));
    Eigen::Vector4d q(normal(rng), normal(rng), normal(rng), normal(rng));
    q.normalize();
    const Eigen::Matrix3d cov = build_covariance(s, q);

    CHECK((cov - cov.transpose()).norm() < 1e-9);
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(cov);
    Eigen::Vector3d expected =
        (2.0 * s).unaryExpr([](double v) { return std::exp(v); });
    std::sort(expected.data(), expected.data() + 3);
    CHECK((eig.eigenvalues() - expected).cwiseAbs().maxCoeff() < 1e-9);
    CHECK(eig.eigenvalues().minCoeff() >= -1e-12);
  }
}

TEST_CASE("rgbd insertion back-projects strided pixels") {
  GaussianMap map;
  Frame f = constant_depth_frame(2, 2, 2.0);
  const IdRange range = insert_rgbd(map, f, SE3Pose{}, 1, 0);
  CHECK(range.size() == 4);
  CHECK(map.count == 4);
  for (int i = 0; i < 4; ++i) {
    CHECK(map.mean_w[i].z() == doctest::Approx(2.0));
    CHECK(map.origin_keyframe[i] == 0);
    CHECK(map.opacity(i) == doctest::Approx(0.5));
  }
  // Pixel (0,0) with cx=cy=1, fx=100: x = 2*(0-1)/100.
  CHECK(map.mean_w[0].x() == doctest::Approx(-0.02));
  CHECK(map.mean_w[0].y() == doctest::Approx(-0.02));
}

TEST_CASE("rgbd insertion honours stride and skips invalid depth") {
  GaussianMap map;
  Frame f = constant_depth_frame(4, 4, 1.5);
  insert_rgbd(map, f, SE3Pose{}, 2, 0);
  CHECK(map.count == 4);

  f.depth.at(0, 0) = 0.0;  // invalid
  GaussianMap map2;
  insert_rgbd(map2, f, SE3Pose{}, 2, 0);
  CHECK(map2.count == 3);
}

TEST_CASE("rgbd insertion respects the pose") {
  GaussianMap map;
  Frame f = constant_depth_frame(1, 1, 2.0);
  f.intrinsics.cx = 0.0;
  f.intrinsics.cy = 0.0;
  SE3Pose pose;  // camera at (0,0,-3) looking along +z
  pose.translation = Eigen::Vector3d(0, 0, 3);
  insert_rgbd(map, f, pose, 1, 0);
  REQUIRE(map.count == 1);
  CHECK(map.mean_w[0].isApprox(Eigen::Vector3d(0, 0, -1), 1e-12));
}

TEST_CASE("monocular insertion with zero-variance rendered depth is exact") {
  GaussianMap map;
  Frame f = constant_depth_frame(4, 4, 0.0);
  f.depth = Image();
  Image rendered_depth(4, 4, 1, 2.0);
  Image rendered_opacity(4, 4, 1, 0.9);  // everything valid
  insert_monocular(map, f, SE3Pose{}, rendered_depth, rendered_opacity, 1, 0);
  CHECK(map.count == 16);
  for (int i = 0; i < map.count; ++i) {
    CHECK(map.mean_w[i].z() == doctest::Approx(2.0));  // sigma_D == 0
  }
}

TEST_CASE("monocular bootstrap sampling matches the configured statistics") {
  MapConfig cfg;
  cfg.bootstrap_depth_median = 2.0;
  cfg.bootstrap_depth_sigma = 0.5;
  cfg.seed = 42;
  GaussianMap map(cfg);

  Frame f = constant_depth_frame(40, 40, 0.0);
  f.depth = Image();
  insert_monocular(map, f, SE3Pose{}, Image(), Image(), 1, 0);
  REQUIRE(map.count == 1600);

  double mean = 0.0;
  for (int i = 0; i < map.count; ++i) mean += map.mean_w[i].z();
  mean /= map.count;
  // Samples ~ N(2, 0.25^2); the mean stays within 3 sigma / sqrt(N).
  const double sigma = cfg.invalid_sigma_factor * cfg.bootstrap_depth_sigma;
  CHECK(std::abs(mean - 2.0) < 3.0 * sigma / std::sqrt(1600.0));

  double var = 0.0;
  for (int i = 0; i < map.count; ++i) {
    var += (map.mean_w[i].z() - mean) * (map.mean_w[i].z() - mean);
  }
  var /= map.count;
  CHECK(var == doctest::Approx(sigma * sigma).epsilon(0.15));
}

TEST_CASE("monocular insertion branches match a brute-force reference") {
  MapConfig cfg;
  cfg.seed = 9;
  GaussianMap map(cfg);

  Frame f = constant_depth_frame(6, 4, 0.0);
  f.depth = Image();
  Image rendered_depth(6, 4, 1);
  Image rendered_opacity(6, 4, 1);
  std::mt19937_64 scene_rng(100);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (double& v : rendered_depth.data) v = 1.0 + unit(scene_rng);
  for (double& v : rendered_opacity.data) v = unit(scene_rng);

  insert_monocular(map, f, SE3Pose{}, rendered_depth, rendered_opacity, 1, 0);
  REQUIRE(map.count == 24);

  // Reference: replicate the sampling with an identical generator.
  std::vector<double> valid;
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 6; ++x)
      if (rendered_opacity.at(x, y) >= cfg.tau_opaque)
        valid.push_back(rendered_depth.at(x, y));
  REQUIRE(!valid.empty());
  std::vector<double> sorted = valid;
  std::sort(sorted.begin(), sorted.end());
  const double median = sorted[sorted.size() / 2];
  double m = 0.0;
  for (double d : valid) m += d;
  m /= valid.size();
  double var = 0.0;
  for (double d : valid) var += (d - m) * (d - m);
  const double sigma = std::sqrt(var / valid.size());

  std::mt19937_64 ref_rng(cfg.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  int idx = 0;
  for (int y = 0; y < 4; ++y) {
    for (int x = 0; x < 6; ++x, ++idx) {
      double expected;
      if (rendered_opacity.at(x, y) >= cfg.tau_opaque) {
        expected = rendered_depth.at(x, y) +
                   cfg.valid_sigma_factor * sigma * normal(ref_rng);
      } else {
        expected = median + cfg.invalid_sigma_factor * sigma * normal(ref_rng);
      }
      expected = std::max(expected, 2.0 * kEpsilonZ);
      CHECK(map.mean_w[idx].z() == doctest::Approx(expected).epsilon(1e-12));
    }
  }
}

TEST_CASE("prune removes under-observed recent and transparent gaussians") {
  MapConfig cfg;
  GaussianMap map(cfg);
  // id 0: old origin, opaque -> kept.
  map.append({0, 0, 1}, Eigen::Vector3d::Zero(), {1, 0, 0, 0}, logit(0.9),
             Eigen::Vector3d::Zero(), 0);
  // id 1: created one keyframe ago, 1 observer -> removed when window full.
  map.append({0, 0, 2}, Eigen::Vector3d::Zero(), {1, 0, 0, 0}, logit(0.9),
             Eigen::Vector3d::Zero(), 4);
  // id 2: opacity 0.71, old origin, many observers -> kept.
  map.append({0, 0, 3}, Eigen::Vector3d::Zero(), {1, 0, 0, 0}, logit(0.71),
             Eigen::Vector3d::Zero(), 0);
  // id 3: opacity below 0.7 -> removed regardless of window state.
  map.append({0, 0, 4}, Eigen::Vector3d::Zero(), {1, 0, 0, 0}, logit(0.5),
             Eigen::Vector3d::Zero(), 0);

  std::vector<int> observers = {5, 1, 5, 5};

  SUBCASE("window full applies both rules") {
    const PruneResult r = prune(map, observers, 5, true);
    CHECK(r.removed == 2);
    CHECK(map.count == 2);
    CHECK(r.old_to_new == std::vector<int>{0, -1, 1, -1});
    CHECK(map.mean_w[1].z() == doctest::Approx(3.0));
    // Compaction keeps creation order.
    CHECK(map.creation_order[0] < map.creation_order[1]);
  }

  SUBCASE("window not full skips the visibility rule") {
    const PruneResult r = prune(map, observers, 5, false);
    CHECK(r.removed == 1);
    CHECK(map.count == 3);
    CHECK(map.mean_w[1].z() == doctest::Approx(2.0));
  }

  SUBCASE("prune is idempotent") {
    prune(map, observers, 5, true);
    // After compaction the survivors are old (origin 0) and well observed.
    const std::vector<int> observers2 = {5, 5};
    const PruneResult again = prune(map, observers2, 5, true);
    CHECK(again.removed == 0);
  }
}

TEST_CASE("array lengths stay consistent through insert and prune") {
  MapConfig cfg;
  cfg.seed = 5;
  GaussianMap map(cfg);
  Frame f = constant_depth_frame(8, 8, 2.0);
  insert_rgbd(map, f, SE3Pose{}, 2, 0);
  insert_rgbd(map, f, SE3Pose{}, 4, 1);
  std::vector<int> observers(map.count, 0);
  prune(map, observers, 4, true);

  CHECK(map.mean_w.size() == static_cast<size_t>(map.count));
  CHECK(map.log_scale.size() == static_cast<size_t>(map.count));
  CHECK(map.rotation_q.size() == static_cast<size_t>(map.count));
  CHECK(map.opacity_logit.size() == static_cast<size_t>(map.count));
  CHECK(map.colour_logit.size() == static_cast<size_t>(map.count));
  CHECK(map.origin_keyframe.size() == static_cast<size_t>(map.count));
  CHECK(map.creation_order.size() == static_cast<size_t>(map.count));
  CHECK(std::is_sorted(map.creation_order.begin(), map.creation_order.end()));
}

TEST_CASE("snapshot is unaffected by later mutation") {
  GaussianMap map;
  map.append({1, 2, 3}, Eigen::Vector3d::Zero(), {1, 0, 0, 0}, 0.0,
             Eigen::Vector3d::Zero(), 0);
  auto snap = map.snapshot();
  map.mean_w[0] = Eigen::Vector3d(9, 9, 9);
  map.append({4, 5, 6}, Eigen::Vector3d::Zero(), {1, 0, 0, 0}, 0.0,
             Eigen::Vector3d::Zero(), 0);
  CHECK(snap->count == 1);
  CHECK(snap->mean_w[0].isApprox(Eigen::Vector3d(1, 2, 3), 0.0));
}

TEST_CASE("ply round trip is idempotent and preserves parameters") {
  namespace fs = std::filesystem;
  MapConfig cfg;
  cfg.seed = 77;
  GaussianMap map(cfg);
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  for (int i = 0; i < 50; ++i) {
    Eigen::Vector4d q(unit(rng), unit(rng), unit(rng), unit(rng));
    q.normalize();
    map.append({unit(rng), unit(rng), 2.0 + unit(rng)},
               Eigen::Vector3d(0.1 * unit(rng), 0.1 * unit(rng), 0.1 * unit(rng)),
               q, unit(rng), Eigen::Vector3d(unit(rng), unit(rng), unit(rng)), 0);
  }

  const std::string dir = fs::temp_directory_path() / "splatslam_ply_test";
  fs::create_directories(dir);
  const std::string p1 = dir + "/a.ply";
  const std::string p2 = dir + "/b.ply";

  write_ply(map, p1);
  const GaussianMap loaded = read_ply(p1);
  REQUIRE(loaded.count == map.count);
  for (int i = 0; i < map.count; ++i) {
    CHECK((loaded.mean_w[i] - map.mean_w[i]).norm() < 1e-6);
    CHECK((loaded.log_scale[i] - map.log_scale[i]).norm() < 1e-6);
    CHECK(std::abs(loaded.opacity_logit[i] - map.opacity_logit[i]) < 1e-6);
    CHECK((loaded.colour(i) - map.colour(i)).norm() < 1e-6);
    CHECK((loaded.rotation_q[i] - map.rotation_q[i]).norm() < 1e-6);
  }

  // A second round trip is exact: the quantization is a projection.
  write_ply(loaded, p2);
  std::ifstream f1(p1, std::ios::binary), f2(p2, std::ios::binary);
  const std::string b1((std::istreambuf_iterator<char>(f1)), {});
  const std::string b2((std::istreambuf_iterator<char>(f2)), {});
  CHECK(b1 == b2);
}
