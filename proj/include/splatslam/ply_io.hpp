// Copyright Contributors to the splatslam project
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

#include "splatslam/gaussian_map.hpp"

namespace splatslam {

/// Binary little-endian PLY in the layout common 3DGS viewers expect:
/// x, y, z, f_dc_0..2, opacity, scale_0..2, rot_0..3 as float32, with
/// pre-activation opacity/scale/rotation and the DC colour encoding
/// (colour - 0.5) / 0.28209479177387814.
void write_ply(const GaussianMap& map, const std::string& path);

/// Reads a PLY written by write_ply. Throws IoError on malformed input.
GaussianMap read_ply(const std::string& path);

}  // namespace splatslam
