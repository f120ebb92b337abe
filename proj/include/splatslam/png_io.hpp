// Copyright Contributors to the splatslam project
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

#include "splatslam/image.hpp"

namespace splatslam {

/// Writes an RGB (or single-channel) image as 8-bit PNG. Values are clamped
/// to [0,1] and quantized with rounding.
void write_png8(const Image& img, const std::string& path);

/// Writes a single-channel depth image as 16-bit grayscale PNG using the
/// TUM convention: counts = round(depth_m * scale), saturated at 65535.
void write_png16_depth(const Image& depth, const std::string& path,
                       double scale = 5000.0);

/// Reads an 8-bit PNG into a [0,1] image (grayscale expanded as 1 channel,
/// alpha stripped). Throws ImageDecodeError on failure.
Image read_png8(const std::string& path);

/// Reads a 16-bit grayscale PNG into metres: value / scale.
/// Throws ImageDecodeError on failure.
Image read_png16_depth(const std::string& path, double scale = 5000.0);

}  // namespace splatslam
