// Copyright Contributors to the splatslam project
// SPDX-License-Identifier: Apache-2.0
#include "splatslam/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "splatslam/errors.hpp"
#include "splatslam/png_io.hpp"

namespace splatslam {

namespace {

struct IndexedFile {
  double timestamp;
  std::string path;
};

std::vector<IndexedFile> read_index(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw MissingIndexFile(path);
  std::vector<IndexedFile> out;
  std::string line;
  while (std::getline(is, line)) {
    const size_t first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ls(line);
    IndexedFile entry;
    if (!(ls >> entry.timestamp >> entry.path)) continue;
    out.push_back(entry);
  }
  std::sort(out.begin(), out.end(),
            [](const IndexedFile& a, const IndexedFile& b) {
              return a.timestamp < b.timestamp;
            });
  return out;
}

// Index of the nearest timestamp, or -1 when none is within max_dt.
int nearest_within(const std::vector<IndexedFile>& sorted, double t,
                   double max_dt) {
  if (sorted.empty()) return -1;
  auto it = std::lower_bound(
      sorted.begin(), sorted.end(), t,
      [](const IndexedFile& e, double v) { return e.timestamp < v; });
  int best = -1;
  double best_dt = max_dt;
  if (it != sorted.end() && std::abs(it->timestamp - t) <= best_dt) {
    best = static_cast<int>(it - sorted.begin());
    best_dt = std::abs(it->timestamp - t);
  }
  if (it != sorted.begin()) {
    auto prev = std::prev(it);
    if (std::abs(prev->timestamp - t) < best_dt ||
        (best < 0 && std::abs(prev->timestamp - t) <= max_dt)) {
      best = static_cast<int>(prev - sorted.begin());
    }
  }
  return best;
}

SE3Pose pose_from_tum_line(double tx, double ty, double tz, double qx,
                           double qy, double qz, double qw) {
  Eigen::Quaterniond q(qw, qx, qy, qz);
  q.normalize();
  return {q.toRotationMatrix(), Eigen::Vector3d(tx, ty, tz)};
}

}  // namespace

std::optional<SE3Pose> SequenceSource::ground_truth_at(double timestamp,
                                                       double max_dt) const {
  const TrajectoryEntry* best = nullptr;
  double best_dt = max_dt;
  for (const auto& e : ground_truth) {
    const double dt = std::abs(e.timestamp - timestamp);
    if (dt <= best_dt) {
      best_dt = dt;
      best = &e;
    }
  }
  if (!best) return std::nullopt;
  return best->pose_wc;
}

SequenceSource load_tum(const std::string& dir, const DatasetConfig& config) {
  namespace fs = std::filesystem;
  SequenceSource seq;

  const auto rgb_index = read_index(dir + "/rgb.txt");

  std::vector<IndexedFile> depth_index;
  if (fs::exists(dir + "/depth.txt")) {
    depth_index = read_index(dir + "/depth.txt");
  }

  // TUM fr1 default calibration; overridable via intrinsics.txt.
  seq.intrinsics = {517.3, 516.5, 318.6, 255.3, 640, 480};
  if (fs::exists(dir + "/intrinsics.txt")) {
    std::ifstream is(dir + "/intrinsics.txt");
    double fx, fy, cx, cy;
    if (is >> fx >> fy >> cx >> cy) {
      seq.intrinsics.fx = fx;
      seq.intrinsics.fy = fy;
      seq.intrinsics.cx = cx;
      seq.intrinsics.cy = cy;
    }
  }

  for (const auto& entry : rgb_index) {
    Frame frame;
    frame.timestamp = entry.timestamp;
    frame.rgb = read_png8(dir + "/" + entry.path);
    if (frame.rgb.channels == 1) {
      // Promote grayscale input to three channels.
      Image rgb(frame.rgb.width, frame.rgb.height, 3);
      for (int y = 0; y < rgb.height; ++y)
        for (int x = 0; x < rgb.width; ++x)
          for (int c = 0; c < 3; ++c) rgb.at(x, y, c) = frame.rgb.at(x, y);
      frame.rgb = std::move(rgb);
    }

    const int di =
        nearest_within(depth_index, entry.timestamp, config.association_max_dt);
    if (di >= 0) {
      frame.depth =
          read_png16_depth(dir + "/" + depth_index[di].path, config.depth_scale);
    }

    frame.intrinsics = seq.intrinsics;
    frame.intrinsics.width = frame.rgb.width;
    frame.intrinsics.height = frame.rgb.height;
    seq.frames.push_back(std::move(frame));
  }
  if (!seq.frames.empty()) {
    seq.intrinsics = seq.frames.front().intrinsics;
  }

  if (fs::exists(dir + "/groundtruth.txt")) {
    std::ifstream is(dir + "/groundtruth.txt");
    std::string line;
    while (std::getline(is, line)) {
      const size_t first = line.find_first_not_of(" \t\r");
      if (first == std::string::npos || line[first] == '#') continue;
      std::istringstream ls(line);
      double t, tx, ty, tz, qx, qy, qz, qw;
      if (ls >> t >> tx >> ty >> tz >> qx >> qy >> qz >> qw) {
        seq.ground_truth.push_back({t, pose_from_tum_line(tx, ty, tz, qx, qy, qz, qw)});
      }
    }
  }
  return seq;
}

void save_trajectory(const std::vector<TrajectoryEntry>& trajectory,
                     const std::string& path) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open for writing: " + path);
  char buf[256];
  for (const auto& e : trajectory) {
    const Eigen::Quaterniond q(e.pose_wc.rotation);
    const Eigen::Vector3d& t = e.pose_wc.translation;
    std::snprintf(buf, sizeof(buf), "%.6f %.6f %.6f %.6f %.6f %.6f %.6f %.6f\n",
                  e.timestamp, t.x(), t.y(), t.z(), q.x(), q.y(), q.z(), q.w());
    os << buf;
  }
  if (!os) throw IoError("write failure: " + path);
}

std::vector<TrajectoryEntry> load_trajectory(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open: " + path);
  std::vector<TrajectoryEntry> out;
  std::string line;
  while (std::getline(is, line)) {
    const size_t first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ls(line);
    double t, tx, ty, tz, qx, qy, qz, qw;
    if (ls >> t >> tx >> ty >> tz >> qx >> qy >> qz >> qw) {
      out.push_back({t, pose_from_tum_line(tx, ty, tz, qx, qy, qz, qw)});
    }
  }
  return out;
}

}  // namespace splatslam
