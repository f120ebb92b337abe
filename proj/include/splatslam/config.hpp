// Copyright Contributors to the splatslam project
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>

#include "splatslam/dataset.hpp"
#include "splatslam/gaussian_map.hpp"
#include "splatslam/keyframes.hpp"
#include "splatslam/losses.hpp"
#include "splatslam/mapper.hpp"
#include "splatslam/optimizer.hpp"
#include "splatslam/render.hpp"
#include "splatslam/tracker.hpp"

namespace splatslam {

enum class SlamMode { kMonocular, kRgbd };

/// Every tunable of the system with its paper/supplementary default. The
/// file format is "key = value" under [section] headers; '#' starts a
/// comment; unknown keys are rejected. An empty file is a valid config.
struct Config {
  // [general]
  SlamMode mode = SlamMode::kRgbd;
  std::uint64_t seed = 0;
  int downscale = 1;
  std::string output_dir = "out";
  bool interleaved = false;
  int threads = 1;

  // [dataset]
  DatasetConfig dataset;

  // [renderer]
  RenderConfig renderer;

  // [losses]
  LossWeights weights;

  // [optimizer]
  MapLearningRates rates;
  double lr_cam_rotation = 0.003;
  double lr_cam_translation = 0.001;
  double lr_exposure = 0.01;
  double mono_position_lr_scale = 10.0;

  // [tracking]
  int tracking_max_iterations = 100;
  double tracking_early_stop = 1e-4;
  double tracking_opacity_mask = 0.95;
  double tracking_divergence_factor = 10.0;
  int max_consecutive_divergences = 5;

  // [keyframing]
  KeyframeConfig keyframing;

  // [mapping]
  int mapping_iterations = 150;
  int interleaved_mapping_iterations = 60;

  // [insertion] / [pruning]
  MapConfig map;

  // [evaluation]
  int render_metric_interval = 5;

  TrackerConfig tracker_config() const;
  MappingConfig mapping_config() const;
  MapLearningRates effective_rates() const;  // monocular position lr x10
  MapConfig map_config() const;
};

/// Parses a config file over the defaults. Throws ConfigError naming any
/// unknown section or key.
Config parse_config_file(const std::string& path);
Config parse_config_text(const std::string& text);

/// Serializes every field; parse(dump(c)) == c.
std::string dump_config(const Config& config);

}  // namespace splatslam
