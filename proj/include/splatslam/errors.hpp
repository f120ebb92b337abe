// Copyright Contributors to the splatslam project
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace splatslam {

struct NonPositiveDepth : std::runtime_error {
  explicit NonPositiveDepth(double z)
      : std::runtime_error("point depth " + std::to_string(z) +
                           " is at or behind the camera plane") {}
};

struct EmptyMask : std::runtime_error {
  EmptyMask() : std::runtime_error("loss mask selects no pixels") {}
};

struct EmptyMap : std::runtime_error {
  EmptyMap() : std::runtime_error("operation requires a non-empty map") {}
};

struct DivergedPose : std::runtime_error {
  explicit DivergedPose(const std::string& what) : std::runtime_error(what) {}
};

struct ShapeMismatch : std::runtime_error {
  explicit ShapeMismatch(const std::string& what) : std::runtime_error(what) {}
};

struct MissingContributors : std::runtime_error {
  MissingContributors()
      : std::runtime_error(
            "backward pass needs a render made with record_contributors") {}
};

struct LengthMismatch : std::runtime_error {
  explicit LengthMismatch(const std::string& what) : std::runtime_error(what) {}
};

struct DegenerateGeometry : std::runtime_error {
  explicit DegenerateGeometry(const std::string& what)
      : std::runtime_error(what) {}
};

struct InvalidBudget : std::runtime_error {
  explicit InvalidBudget(int budget)
      : std::runtime_error("mapping budget must be >= 1, got " +
                           std::to_string(budget)) {}
};

struct IoError : std::runtime_error {
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

struct MissingIndexFile : IoError {
  explicit MissingIndexFile(const std::string& path)
      : IoError("missing dataset index file: " + path) {}
};

struct ImageDecodeError : IoError {
  explicit ImageDecodeError(const std::string& path)
      : IoError("cannot decode image: " + path) {}
};

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace splatslam
