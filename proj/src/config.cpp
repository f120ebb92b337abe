// Copyright Contributors to the splatslam project
// SPDX-License-Identifier: Apache-2.0
#include "splatslam/config.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "splatslam/errors.hpp"

namespace splatslam {

TrackerConfig Config::tracker_config() const {
  TrackerConfig t;
  t.max_iterations = tracking_max_iterations;
  t.early_stop_delta = tracking_early_stop;
  t.lr_rotation = lr_cam_rotation;
  t.lr_translation = lr_cam_translation;
  t.lr_exposure = lr_exposure;
  t.lambda_pho = weights.lambda_pho;
  t.opacity_mask_threshold = tracking_opacity_mask;
  t.tau_opaque = map.tau_opaque;
  t.divergence_factor = tracking_divergence_factor;
  t.use_depth = mode == SlamMode::kRgbd;
  return t;
}

MappingConfig Config::mapping_config() const {
  MappingConfig m;
  m.weights = weights;
  m.lr_cam_rotation = lr_cam_rotation;
  m.lr_cam_translation = lr_cam_translation;
  m.use_depth = mode == SlamMode::kRgbd;
  m.tau_opaque = map.tau_opaque;
  return m;
}

MapLearningRates Config::effective_rates() const {
  MapLearningRates r = rates;
  if (mode == SlamMode::kMonocular) r.position *= mono_position_lr_scale;
  return r;
}

MapConfig Config::map_config() const {
  MapConfig m = map;
  m.seed = seed;
  return m;
}

namespace {

// Shortest representation that parses back to the same double.
std::string format_double(double v) {
  char buf[64];
  for (int precision = 1; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof(buf), "%.*g", precision, v);
    if (std::stod(buf) == v) break;
  }
  return buf;
}

struct Binder {
  std::function<void(const std::string&)> set;
  std::function<std::string()> get;
};

Binder bind_double(double* p) {
  return {[p](const std::string& s) { *p = std::stod(s); },
          [p] { return format_double(*p); }};
}
Binder bind_int(int* p) {
  return {[p](const std::string& s) { *p = std::stoi(s); },
          [p] { return std::to_string(*p); }};
}
Binder bind_u64(std::uint64_t* p) {
  return {[p](const std::string& s) { *p = std::stoull(s); },
          [p] { return std::to_string(*p); }};
}
Binder bind_bool(bool* p) {
  return {[p](const std::string& s) {
            if (s == "true" || s == "1") {
              *p = true;
            } else if (s == "false" || s == "0") {
              *p = false;
            } else {
              throw ConfigError("expected true/false, got '" + s + "'");
            }
          },
          [p] { return *p ? "true" : "false"; }};
}
Binder bind_string(std::string* p) {
  return {[p](const std::string& s) { *p = s; }, [p] { return *p; }};
}
Binder bind_mode(SlamMode* p) {
  return {[p](const std::string& s) {
            if (s == "monocular") {
              *p = SlamMode::kMonocular;
            } else if (s == "rgbd") {
              *p = SlamMode::kRgbd;
            } else {
              throw ConfigError("mode must be monocular or rgbd, got '" + s + "'");
            }
          },
          [p] { return *p == SlamMode::kMonocular ? "monocular" : "rgbd"; }};
}

// Ordered schema: section -> ordered (key, binder) list.
using Schema = std::vector<std::pair<std::string, std::vector<std::pair<std::string, Binder>>>>;

Schema make_schema(Config& c) {
  return {
      {"general",
       {{"mode", bind_mode(&c.mode)},
        {"seed", bind_u64(&c.seed)},
        {"downscale", bind_int(&c.downscale)},
        {"output_dir", bind_string(&c.output_dir)},
        {"interleaved", bind_bool(&c.interleaved)},
        {"threads", bind_int(&c.threads)}}},
      {"dataset",
       {{"depth_scale", bind_double(&c.dataset.depth_scale)},
        {"association_max_dt", bind_double(&c.dataset.association_max_dt)}}},
      {"renderer",
       {{"tile_size", bind_int(&c.renderer.tile_size)},
        {"alpha_min", bind_double(&c.renderer.alpha_min)},
        {"transmittance_min", bind_double(&c.renderer.transmittance_min)},
        {"dilation", bind_double(&c.renderer.dilation)},
        {"z_near", bind_double(&c.renderer.z_near)},
        {"visibility_opacity", bind_double(&c.renderer.visibility_opacity)},
        {"max_contributors", bind_int(&c.renderer.max_contributors)}}},
      {"losses",
       {{"lambda_pho", bind_double(&c.weights.lambda_pho)},
        {"lambda_iso", bind_double(&c.weights.lambda_iso)}}},
      {"optimizer",
       {{"lr_position", bind_double(&c.rates.position)},
        {"lr_colour", bind_double(&c.rates.colour)},
        {"lr_opacity", bind_double(&c.rates.opacity)},
        {"lr_scale", bind_double(&c.rates.scale)},
        {"lr_rotation", bind_double(&c.rates.rotation)},
        {"lr_cam_rotation", bind_double(&c.lr_cam_rotation)},
        {"lr_cam_translation", bind_double(&c.lr_cam_translation)},
        {"lr_exposure", bind_double(&c.lr_exposure)},
        {"mono_position_lr_scale", bind_double(&c.mono_position_lr_scale)}}},
      {"tracking",
       {{"max_iterations", bind_int(&c.tracking_max_iterations)},
        {"early_stop", bind_double(&c.tracking_early_stop)},
        {"opacity_mask_threshold", bind_double(&c.tracking_opacity_mask)},
        {"divergence_factor", bind_double(&c.tracking_divergence_factor)},
        {"max_consecutive_divergences",
         bind_int(&c.max_consecutive_divergences)}}},
      {"keyframing",
       {{"kf_cov", bind_double(&c.keyframing.kf_cov)},
        {"kf_m", bind_double(&c.keyframing.kf_m)},
        {"kf_c", bind_double(&c.keyframing.kf_c)},
        {"window_capacity", bind_int(&c.keyframing.window_capacity)}}},
      {"mapping",
       {{"iterations", bind_int(&c.mapping_iterations)},
        {"interleaved_iterations", bind_int(&c.interleaved_mapping_iterations)}}},
      {"insertion",
       {{"stride", bind_int(&c.map.insertion_stride)},
        {"tau_opaque", bind_double(&c.map.tau_opaque)},
        {"bootstrap_depth", bind_double(&c.map.bootstrap_depth_median)},
        {"bootstrap_sigma", bind_double(&c.map.bootstrap_depth_sigma)},
        {"valid_sigma_factor", bind_double(&c.map.valid_sigma_factor)},
        {"invalid_sigma_factor", bind_double(&c.map.invalid_sigma_factor)},
        {"initial_opacity", bind_double(&c.map.initial_opacity)}}},
      {"pruning",
       {{"opacity_threshold", bind_double(&c.map.prune_opacity_threshold)},
        {"recent_keyframes", bind_int(&c.map.prune_recent_keyframes)},
        {"min_observers", bind_int(&c.map.prune_min_observers)}}},
      {"evaluation",
       {{"render_metric_interval", bind_int(&c.render_metric_interval)}}},
  };
}

std::string trim(const std::string& s) {
  const size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

}  // namespace

Config parse_config_text(const std::string& text) {
  Config config;
  Schema schema = make_schema(config);

  std::istringstream is(text);
  std::string line, section;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;

    if (line.front() == '[' && line.back() == ']') {
      section = trim(line.substr(1, line.size() - 2));
      bool known = false;
      for (const auto& [name, keys] : schema) known = known || name == section;
      if (!known) {
        throw ConfigError("unknown config section [" + section + "] at line " +
                          std::to_string(line_no));
      }
      continue;
    }

    const size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("expected key = value at line " + std::to_string(line_no));
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));

    bool found = false;
    for (auto& [name, keys] : schema) {
      if (name != section) continue;
      for (auto& [k, binder] : keys) {
        if (k == key) {
          try {
            binder.set(value);
          } catch (const ConfigError&) {
            throw;
          } catch (const std::exception&) {
            throw ConfigError("invalid value '" + value + "' for " + section +
                              "." + key);
          }
          found = true;
          break;
        }
      }
      break;
    }
    if (!found) {
      throw ConfigError("unknown config key '" + key + "' in section [" +
                        section + "]");
    }
  }
  return config;
}

Config parse_config_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file: " + path);
  std::ostringstream buffer;
  buffer << is.rdbuf();
  return parse_config_text(buffer.str());
}

std::string dump_config(const Config& config) {
  Config copy = config;
  Schema schema = make_schema(copy);
  std::ostringstream os;
  for (const auto& [section, keys] : schema) {
    os << "[" << section << "]\n";
    for (const auto& [key, binder] : keys) {
      os << key << " = " << binder.get() << "\n";
    }
    os << "\n";
  }
  return os.str();
}

}  // namespace splatslam
