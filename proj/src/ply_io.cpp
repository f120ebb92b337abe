// Copyright Contributors to the splatslam project
// SPDX-License-Identifier: Apache-2.0
#include "splatslam/ply_io.hpp"

#include <array>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

#include "splatslam/errors.hpp"

namespace splatslam {

namespace {

constexpr double kShC0 = 0.28209479177387814;

const char* const kPropertyNames[] = {
    "x",       "y",       "z",       "f_dc_0",  "f_dc_1",  "f_dc_2", "opacity",
    "scale_0", "scale_1", "scale_2", "rot_0",   "rot_1",   "rot_2",  "rot_3"};
constexpr int kNumProperties = 14;

void write_float_le(std::ostream& os, float v) {
  static_assert(sizeof(float) == 4);
  std::array<unsigned char, 4> bytes;
  std::memcpy(bytes.data(), &v, 4);
  // Host is little-endian on every platform this builds for; keep the
  // byte-level copy so the on-disk layout is explicit.
  os.write(reinterpret_cast<const char*>(bytes.data()), 4);
}

float read_float_le(std::istream& is) {
  std::array<unsigned char, 4> bytes;
  is.read(reinterpret_cast<char*>(bytes.data()), 4);
  float v;
  std::memcpy(&v, bytes.data(), 4);
  return v;
}

}  // namespace

void write_ply(const GaussianMap& map, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open for writing: " + path);

  os << "ply\nformat binary_little_endian 1.0\n";
  os << "element vertex " << map.count << "\n";
  for (const char* name : kPropertyNames) {
    os << "property float " << name << "\n";
  }
  os << "end_header\n";

  for (int i = 0; i < map.count; ++i) {
    const Eigen::Vector3d c = map.colour(i);
    write_float_le(os, static_cast<float>(map.mean_w[i].x()));
    write_float_le(os, static_cast<float>(map.mean_w[i].y()));
    write_float_le(os, static_cast<float>(map.mean_w[i].z()));
    for (int ch = 0; ch < 3; ++ch) {
      write_float_le(os, static_cast<float>((c[ch] - 0.5) / kShC0));
    }
    write_float_le(os, static_cast<float>(map.opacity_logit[i]));
    for (int axis = 0; axis < 3; ++axis) {
      write_float_le(os, static_cast<float>(map.log_scale[i][axis]));
    }
    for (int comp = 0; comp < 4; ++comp) {
      write_float_le(os, static_cast<float>(map.rotation_q[i][comp]));
    }
  }
  if (!os) throw IoError("write failure: " + path);
}

GaussianMap read_ply(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open: " + path);

  std::string line;
  if (!std::getline(is, line) || line != "ply") {
    throw IoError("not a PLY file: " + path);
  }
  if (!std::getline(is, line) || line != "format binary_little_endian 1.0") {
    throw IoError("unsupported PLY format in " + path);
  }

  long vertex_count = -1;
  std::vector<std::string> properties;
  while (std::getline(is, line)) {
    if (line == "end_header") break;
    std::istringstream ls(line);
    std::string token;
    ls >> token;
    if (token == "comment") continue;
    if (token == "element") {
      std::string kind;
      ls >> kind >> vertex_count;
      if (kind != "vertex") throw IoError("unsupported PLY element in " + path);
    } else if (token == "property") {
      std::string type, name;
      ls >> type >> name;
      if (type != "float") throw IoError("unsupported PLY property type in " + path);
      properties.push_back(name);
    }
  }
  if (vertex_count < 0) throw IoError("missing vertex element in " + path);
  if (properties.size() != kNumProperties) {
    throw IoError("unexpected PLY property layout in " + path);
  }
  for (int i = 0; i < kNumProperties; ++i) {
    if (properties[i] != kPropertyNames[i]) {
      throw IoError("unexpected PLY property layout in " + path);
    }
  }

  GaussianMap map;
  for (long i = 0; i < vertex_count; ++i) {
    std::array<float, kNumProperties> v;
    for (float& f : v) f = read_float_le(is);
    if (!is) throw IoError("truncated PLY payload in " + path);

    const Eigen::Vector3d mean(v[0], v[1], v[2]);
    Eigen::Vector3d colour_logit;
    for (int ch = 0; ch < 3; ++ch) {
      const double c = static_cast<double>(v[3 + ch]) * kShC0 + 0.5;
      colour_logit[ch] = logit(std::clamp(c, 1e-6, 1.0 - 1e-6));
    }
    const Eigen::Vector3d log_scale(v[7], v[8], v[9]);
    const Eigen::Vector4d q(v[10], v[11], v[12], v[13]);
    map.append(mean, log_scale, q, v[6], colour_logit, -1);
  }
  return map;
}

}  // namespace splatslam
