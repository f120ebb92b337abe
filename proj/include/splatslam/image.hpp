// Copyright Contributors to the splatslam project
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cassert>
#include <cstddef>
#include <vector>

namespace splatslam {

/// Row-major image with interleaved channels, double precision.
struct Image {
  int width = 0;
  int height = 0;
  int channels = 1;
  std::vector<double> data;

  Image() = default;
  Image(int w, int h, int c, double fill = 0.0)
      : width(w), height(h), channels(c),
        data(static_cast<size_t>(w) * h * c, fill) {}

  bool empty() const { return data.empty(); }
  size_t size() const { return data.size(); }
  size_t pixel_count() const { return static_cast<size_t>(width) * height; }

  double& at(int x, int y, int c = 0) {
    assert(x >= 0 && x < width && y >= 0 && y < height && c < channels);
    return data[(static_cast<size_t>(y) * width + x) * channels + c];
  }
  double at(int x, int y, int c = 0) const {
    assert(x >= 0 && x < width && y >= 0 && y < height && c < channels);
    return data[(static_cast<size_t>(y) * width + x) * channels + c];
  }

  double* pixel(int x, int y) {
    return data.data() + (static_cast<size_t>(y) * width + x) * channels;
  }
  const double* pixel(int x, int y) const {
    return data.data() + (static_cast<size_t>(y) * width + x) * channels;
  }

  bool same_shape(const Image& other) const {
    return width == other.width && height == other.height &&
           channels == other.channels;
  }
};

/// Per-pixel boolean mask stored as bytes.
struct Mask {
  int width = 0;
  int height = 0;
  std::vector<unsigned char> data;

  Mask() = default;
  Mask(int w, int h, bool fill = false)
      : width(w), height(h), data(static_cast<size_t>(w) * h, fill ? 1 : 0) {}

  bool at(int x, int y) const {
    return data[static_cast<size_t>(y) * width + x] != 0;
  }
  void set(int x, int y, bool v) {
    data[static_cast<size_t>(y) * width + x] = v ? 1 : 0;
  }
  size_t count() const {
    size_t n = 0;
    for (auto b : data) n += b != 0;
    return n;
  }
};

}  // namespace splatslam
