// Copyright Contributors to the splatslam project
// SPDX-License-Identifier: Apache-2.0
#include "splatslam/pipeline.hpp"

#include <cmath>
#include <condition_variable>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <thread>

#include "splatslam/errors.hpp"
#include "splatslam/mapper.hpp"
#include "splatslam/ply_io.hpp"
#include "splatslam/tracker.hpp"

namespace splatslam {

void downscale_sequence(SequenceSource& sequence, int factor) {
  if (factor <= 1) return;
  for (Frame& frame : sequence.frames) {
    const int w = frame.rgb.width / factor;
    const int h = frame.rgb.height / factor;
    Image rgb(w, h, 3);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        for (int c = 0; c < 3; ++c) {
          double acc = 0.0;
          for (int dy = 0; dy < factor; ++dy)
            for (int dx = 0; dx < factor; ++dx)
              acc += frame.rgb.at(x * factor + dx, y * factor + dy, c);
          rgb.at(x, y, c) = acc / (factor * factor);
        }
      }
    }
    frame.rgb = std::move(rgb);
    if (frame.has_depth()) {
      Image depth(w, h, 1);
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
          depth.at(x, y) = frame.depth.at(x * factor, y * factor);
      frame.depth = std::move(depth);
    }
    frame.intrinsics.fx /= factor;
    frame.intrinsics.fy /= factor;
    frame.intrinsics.cx /= factor;
    frame.intrinsics.cy /= factor;
    frame.intrinsics.width = w;
    frame.intrinsics.height = h;
  }
  if (!sequence.frames.empty()) {
    sequence.intrinsics = sequence.frames.front().intrinsics;
  }
}

namespace {

struct PreparedSequence {
  std::vector<std::shared_ptr<const Frame>> frames;
};

PreparedSequence prepare_frames(const SequenceSource& sequence,
                                const Config& config) {
  PreparedSequence out;
  for (const Frame& f : sequence.frames) {
    auto frame = std::make_shared<Frame>(f);
    if (config.mode == SlamMode::kMonocular) frame->depth = Image();
    out.frames.push_back(std::move(frame));
  }
  return out;
}

// Registration-time work shared by both modes: insertion, window
// maintenance, mapping and pruning. rendered_depth/opacity may be empty at
// bootstrap.
void register_keyframe(const Config& config, GaussianMap& map, Mapper& mapper,
                       KeyframeRegistry& registry, KeyframeWindow& window,
                       const RenderConfig& render_cfg,
                       std::shared_ptr<Keyframe> kf, const Image& rendered_depth,
                       const Image& rendered_opacity, int budget) {
  const int id = registry.add(kf);
  const Frame& frame = *kf->frame;

  if (config.mode == SlamMode::kRgbd && frame.has_depth()) {
    insert_rgbd(map, frame, kf->pose, map.config.insertion_stride, id);
  } else {
    insert_monocular(map, frame, kf->pose, rendered_depth, rendered_opacity,
                     map.config.insertion_stride, id);
  }

  window.ids.push_back(id);
  maintain_window(window, registry, config.keyframing);
  mapper.run_mapping(map, registry, window, render_cfg, budget);
}

void evaluate_run(const SequenceSource& sequence, const Config& config,
                  const std::vector<SE3Pose>& frame_poses_cw,
                  const std::vector<Eigen::Vector2d>& frame_exposures,
                  SlamResult& result) {
  const RenderConfig render_cfg = config.renderer;

  if (sequence.has_ground_truth()) {
    const bool with_scale = config.mode == SlamMode::kMonocular;
    std::vector<SE3Pose> est_kf, ref_kf;
    for (size_t i = 0; i < result.keyframe_trajectory.size(); ++i) {
      const int frame_idx = result.keyframe_frame_indices[i];
      const auto gt = sequence.ground_truth_at(
          sequence.frames[frame_idx].timestamp, 0.05);
      if (!gt) continue;
      est_kf.push_back(result.keyframe_trajectory[i].pose_wc);
      ref_kf.push_back(*gt);
    }
    if (est_kf.size() >= 2) {
      result.ate_keyframes_rmse = ate_rmse(est_kf, ref_kf, with_scale).rmse;
      result.has_ate = true;
    }
    std::vector<SE3Pose> est_all, ref_all;
    for (size_t i = 0; i < result.trajectory.size(); ++i) {
      const auto gt =
          sequence.ground_truth_at(result.trajectory[i].timestamp, 0.05);
      if (!gt) continue;
      est_all.push_back(result.trajectory[i].pose_wc);
      ref_all.push_back(*gt);
    }
    if (est_all.size() >= 2) {
      result.ate_all_rmse = ate_rmse(est_all, ref_all, with_scale).rmse;
    }
  }

  // Rendering quality on every Nth frame, keyframes (training views) excluded.
  std::vector<bool> is_keyframe(sequence.frames.size(), false);
  for (int idx : result.keyframe_frame_indices) is_keyframe[idx] = true;

  double psnr_sum = 0.0, ssim_sum = 0.0;
  int metric_frames = 0;
  for (size_t i = 0; i < sequence.frames.size(); ++i) {
    if (is_keyframe[i]) continue;
    if (config.render_metric_interval <= 0 ||
        i % static_cast<size_t>(config.render_metric_interval) != 0) {
      continue;
    }
    const Frame& frame = sequence.frames[i];
    RenderOptions options;
    options.with_depth = false;
    RenderOutput out = render(result.map, frame_poses_cw[i], frame.intrinsics,
                              render_cfg, options);
    apply_exposure(out.colour, frame_exposures[i][0], frame_exposures[i][1]);
    for (double& v : out.colour.data) v = std::clamp(v, 0.0, 1.0);
    const double p = psnr(out.colour, frame.rgb);
    if (std::isfinite(p)) {
      psnr_sum += p;
    } else {
      psnr_sum += 100.0;  // identical images: cap the sentinel for averaging
    }
    ssim_sum += ssim(out.colour, frame.rgb);
    ++metric_frames;
  }
  if (metric_frames > 0) {
    result.has_render_metrics = true;
    result.mean_psnr = psnr_sum / metric_frames;
    result.mean_ssim = ssim_sum / metric_frames;
  }
}

SlamResult run_sequential(const SequenceSource& sequence, const Config& config) {
  const PreparedSequence prepared = prepare_frames(sequence, config);
  const int n = static_cast<int>(prepared.frames.size());
  if (n == 0) throw IoError("sequence has no frames");

  RenderConfig render_cfg = config.renderer;
  render_cfg.threads = config.threads;
  const TrackerConfig tracker_cfg = config.tracker_config();

  GaussianMap map(config.map_config());
  Mapper mapper(config.effective_rates(), config.mapping_config());
  KeyframeRegistry registry;
  KeyframeWindow window;
  window.capacity = config.keyframing.window_capacity;

  std::vector<SE3Pose> poses(n);
  std::vector<Eigen::Vector2d> exposures(n, Eigen::Vector2d::Zero());
  std::vector<int> kf_of_frame(n, -1);

  SlamResult result;
  int consecutive_divergences = 0;

  for (int i = 0; i < n; ++i) {
    const auto& frame = prepared.frames[i];

    if (i == 0) {
      poses[0] = SE3Pose();
      auto kf = std::make_shared<Keyframe>();
      kf->frame_index = 0;
      kf->frame = frame;
      kf->pose = poses[0];
      register_keyframe(config, map, mapper, registry, window, render_cfg, kf,
                        Image(), Image(), config.mapping_iterations);
      kf_of_frame[0] = kf->id;
      continue;
    }

    const SE3Pose predicted =
        i >= 2 ? predict_pose(poses[i - 1], poses[i - 2]) : poses[i - 1];

    bool tracked = false;
    TrackingResult tracking;
    try {
      tracking = track(map, *frame, predicted, exposures[i - 1], tracker_cfg,
                       render_cfg);
      tracked = true;
      consecutive_divergences = 0;
    } catch (const DivergedPose&) {
      ++result.total_divergences;
      ++consecutive_divergences;
      if (consecutive_divergences > config.max_consecutive_divergences) {
        throw;
      }
      poses[i] = predicted;
      exposures[i] = exposures[i - 1];
    }
    if (!tracked) continue;

    poses[i] = tracking.pose;
    exposures[i] = tracking.exposure;

    const Keyframe& last_kf = registry.get(registry.size() - 1);
    const RegistrationDecision decision = should_register(
        tracking.visible, last_kf.visible, tracking.pose, last_kf.pose,
        tracking.median_rendered_depth, config.keyframing);
    if (!decision.should_register) continue;

    auto kf = std::make_shared<Keyframe>();
    kf->frame_index = i;
    kf->frame = frame;
    kf->pose = tracking.pose;
    kf->exposure = tracking.exposure;
    kf->visible = tracking.visible;
    register_keyframe(config, map, mapper, registry, window, render_cfg, kf,
                      tracking.rendered_depth, tracking.rendered_opacity,
                      config.mapping_iterations);
    kf_of_frame[i] = kf->id;
  }

  // Final poses: keyframes take their mapped refinement.
  for (int i = 0; i < n; ++i) {
    const SE3Pose final_cw =
        kf_of_frame[i] >= 0 ? registry.get(kf_of_frame[i]).pose : poses[i];
    poses[i] = final_cw;
    result.trajectory.push_back(
        {prepared.frames[i]->timestamp, final_cw.inverse()});
    if (kf_of_frame[i] >= 0) {
      result.keyframe_trajectory.push_back(
          {prepared.frames[i]->timestamp, final_cw.inverse()});
      result.keyframe_frame_indices.push_back(i);
    }
  }
  result.map = std::move(map);
  result.registry = std::move(registry);
  evaluate_run(sequence, config, poses, exposures, result);
  return result;
}

// ---------------------------------------------------------------------------
// Interleaved mode: a mapping thread owns the map and publishes immutable
// snapshots at iteration boundaries; the tracking thread reads only those.

struct KeyframeEvent {
  int frame_index = -1;
  std::shared_ptr<const Frame> frame;
  SE3Pose pose;
  Eigen::Vector2d exposure = Eigen::Vector2d::Zero();
};

struct Published {
  std::shared_ptr<const GaussianMap> map;
  int last_kf_id = -1;
  SE3Pose last_kf_pose;
  VisibleSet last_kf_visible;
};

class InterleavedMapper {
 public:
  InterleavedMapper(const Config& config, const RenderConfig& render_cfg)
      : config_(config),
        render_cfg_(render_cfg),
        map_(config.map_config()),
        mapper_(config.effective_rates(), config.mapping_config()) {
    window_.capacity = config.keyframing.window_capacity;
    worker_ = std::thread([this] { loop(); });
  }

  ~InterleavedMapper() {
    if (worker_.joinable()) {
      stop();
      worker_.join();
    }
  }

  void submit(KeyframeEvent event) {
    std::unique_lock lock(mu_);
    cv_slot_.wait(lock, [this] { return !pending_.has_value(); });
    pending_ = std::move(event);
    cv_event_.notify_all();
  }

  void wait_idle() {
    std::unique_lock lock(mu_);
    cv_idle_.wait(lock, [this] { return !pending_.has_value() && !busy_; });
  }

  Published published() {
    std::scoped_lock lock(mu_);
    return published_;
  }

  void stop() {
    {
      std::scoped_lock lock(mu_);
      stop_ = true;
    }
    cv_event_.notify_all();
  }

  // Valid after the worker has been joined.
  GaussianMap& map() { return map_; }
  KeyframeRegistry& registry() { return registry_; }
  void join() {
    stop();
    if (worker_.joinable()) worker_.join();
  }

 private:
  void publish_locked() {
    published_.map = map_.snapshot();
    if (registry_.size() > 0) {
      const Keyframe& kf = registry_.get(registry_.size() - 1);
      published_.last_kf_id = kf.id;
      published_.last_kf_pose = kf.pose;
      published_.last_kf_visible = kf.visible;
    }
  }

  void loop() {
    while (true) {
      KeyframeEvent event;
      {
        std::unique_lock lock(mu_);
        cv_event_.wait(lock, [this] { return pending_.has_value() || stop_; });
        if (!pending_.has_value() && stop_) return;
        event = std::move(*pending_);
        pending_.reset();
        busy_ = true;
        cv_slot_.notify_all();
      }

      auto kf = std::make_shared<Keyframe>();
      kf->frame_index = event.frame_index;
      kf->frame = event.frame;
      kf->pose = event.pose;
      kf->exposure = event.exposure;

      // Monocular insertion renders from the mapper's own up-to-date map.
      Image rendered_depth, rendered_opacity;
      if (!(config_.mode == SlamMode::kRgbd && event.frame->has_depth()) &&
          map_.count > 0) {
        RenderOptions options;
        options.with_depth = true;
        RenderOutput out =
            render(map_, event.pose, event.frame->intrinsics, render_cfg_, options);
        rendered_depth = std::move(out.depth);
        rendered_opacity = std::move(out.acc_opacity);
      }

      const int id = registry_.add(kf);
      const Frame& frame = *kf->frame;
      if (config_.mode == SlamMode::kRgbd && frame.has_depth()) {
        insert_rgbd(map_, frame, kf->pose, map_.config.insertion_stride, id);
      } else {
        insert_monocular(map_, frame, kf->pose, rendered_depth, rendered_opacity,
                         map_.config.insertion_stride, id);
      }
      window_.ids.push_back(id);
      maintain_window(window_, registry_, config_.keyframing);

      const int budget = config_.interleaved_mapping_iterations;
      for (int it = 0; it < budget; ++it) {
        mapper_.map_step(map_, registry_, window_, render_cfg_);
        std::scoped_lock lock(mu_);
        publish_locked();
      }
      {
        // Prune and republish with the remapped id space.
        const auto observers = count_window_observers(map_, registry_, window_);
        const PruneResult pruned =
            prune(map_, observers, window_.latest(), window_.full());
        if (pruned.removed > 0) {
          mapper_.map_optimizer().on_prune(pruned.old_to_new);
          for (auto& entry : registry_.all) {
            entry->visible = remap_visible(entry->visible, pruned.old_to_new);
          }
        }
        std::scoped_lock lock(mu_);
        publish_locked();
        busy_ = false;
        cv_idle_.notify_all();
      }
    }
  }

  const Config config_;
  const RenderConfig render_cfg_;

  std::mutex mu_;
  std::condition_variable cv_event_, cv_slot_, cv_idle_;
  std::optional<KeyframeEvent> pending_;
  bool stop_ = false;
  bool busy_ = false;
  Published published_;

  GaussianMap map_;
  Mapper mapper_;
  KeyframeRegistry registry_;
  KeyframeWindow window_;
  std::thread worker_;
};

SlamResult run_interleaved(const SequenceSource& sequence, const Config& config) {
  const PreparedSequence prepared = prepare_frames(sequence, config);
  const int n = static_cast<int>(prepared.frames.size());
  if (n == 0) throw IoError("sequence has no frames");

  RenderConfig render_cfg = config.renderer;
  render_cfg.threads = config.threads;
  const TrackerConfig tracker_cfg = config.tracker_config();

  InterleavedMapper mapper(config, render_cfg);

  std::vector<SE3Pose> poses(n);
  std::vector<Eigen::Vector2d> exposures(n, Eigen::Vector2d::Zero());
  std::vector<int> kf_frame_indices;
  SlamResult result;
  int consecutive_divergences = 0;

  for (int i = 0; i < n; ++i) {
    const auto& frame = prepared.frames[i];
    if (i == 0) {
      poses[0] = SE3Pose();
      mapper.submit({0, frame, poses[0], Eigen::Vector2d::Zero()});
      kf_frame_indices.push_back(0);
      mapper.wait_idle();  // a map must exist before tracking starts
      continue;
    }

    const SE3Pose predicted =
        i >= 2 ? predict_pose(poses[i - 1], poses[i - 2]) : poses[i - 1];
    const Published pub = mapper.published();

    bool tracked = false;
    TrackingResult tracking;
    try {
      tracking =
          track(*pub.map, *frame, predicted, exposures[i - 1], tracker_cfg,
                render_cfg);
      tracked = true;
      consecutive_divergences = 0;
    } catch (const DivergedPose&) {
      ++result.total_divergences;
      ++consecutive_divergences;
      if (consecutive_divergences > config.max_consecutive_divergences) {
        mapper.join();
        throw;
      }
      poses[i] = predicted;
      exposures[i] = exposures[i - 1];
    }
    if (!tracked) continue;

    poses[i] = tracking.pose;
    exposures[i] = tracking.exposure;

    const RegistrationDecision decision = should_register(
        tracking.visible, pub.last_kf_visible, tracking.pose, pub.last_kf_pose,
        tracking.median_rendered_depth, config.keyframing);
    if (decision.should_register) {
      mapper.submit({i, frame, tracking.pose, tracking.exposure});
      kf_frame_indices.push_back(i);
    }
  }

  mapper.join();

  std::vector<int> kf_of_frame(n, -1);
  for (int id = 0; id < mapper.registry().size(); ++id) {
    kf_of_frame[mapper.registry().get(id).frame_index] = id;
  }
  for (int i = 0; i < n; ++i) {
    const SE3Pose final_cw = kf_of_frame[i] >= 0
                                 ? mapper.registry().get(kf_of_frame[i]).pose
                                 : poses[i];
    poses[i] = final_cw;
    result.trajectory.push_back(
        {prepared.frames[i]->timestamp, final_cw.inverse()});
    if (kf_of_frame[i] >= 0) {
      result.keyframe_trajectory.push_back(
          {prepared.frames[i]->timestamp, final_cw.inverse()});
      result.keyframe_frame_indices.push_back(i);
    }
  }
  result.map = std::move(mapper.map());
  result.registry = std::move(mapper.registry());
  evaluate_run(sequence, config, poses, exposures, result);
  return result;
}

}  // namespace

SlamResult run_slam(const SequenceSource& sequence, const Config& config) {
  if (config.interleaved) return run_interleaved(sequence, config);
  return run_sequential(sequence, config);
}

void write_slam_artifacts(const SlamResult& result, const Config& config) {
  namespace fs = std::filesystem;
  fs::create_directories(config.output_dir);

  save_trajectory(result.trajectory, config.output_dir + "/trajectory.txt");
  save_trajectory(result.keyframe_trajectory,
                  config.output_dir + "/keyframe_trajectory.txt");
  write_ply(result.map, config.output_dir + "/map.ply");

  std::vector<std::pair<std::string, std::string>> entries;
  char buf[64];
  auto fmt = [&buf](double v) {
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return std::string(buf);
  };
  entries.emplace_back("frames", std::to_string(result.trajectory.size()));
  entries.emplace_back("keyframes",
                       std::to_string(result.keyframe_trajectory.size()));
  entries.emplace_back("gaussians", std::to_string(result.map.count));
  entries.emplace_back("tracking_divergences",
                       std::to_string(result.total_divergences));
  if (result.has_ate) {
    entries.emplace_back("ate_rmse_keyframes", fmt(result.ate_keyframes_rmse));
    entries.emplace_back("ate_rmse_all_frames", fmt(result.ate_all_rmse));
  }
  if (result.has_render_metrics) {
    entries.emplace_back("psnr_mean", fmt(result.mean_psnr));
    entries.emplace_back("ssim_mean", fmt(result.mean_ssim));
  }

  std::ofstream os(config.output_dir + "/metrics.txt");
  os << format_metric_report(entries);
}

GaussianMap train_map_from_views(const std::vector<Frame>& frames,
                                 const std::vector<SE3Pose>& poses,
                                 bool with_depth, int iterations,
                                 const Config& config) {
  if (frames.size() != poses.size() || frames.empty()) {
    throw LengthMismatch("frames/poses mismatch in train_map_from_views");
  }
  RenderConfig render_cfg = config.renderer;
  render_cfg.threads = config.threads;

  GaussianMap map(config.map_config());
  MappingConfig mapping_cfg = config.mapping_config();
  mapping_cfg.use_depth = with_depth;
  mapping_cfg.optimize_poses = false;
  Mapper mapper(config.rates, mapping_cfg);

  KeyframeRegistry registry;
  KeyframeWindow window;
  window.capacity = static_cast<int>(frames.size());

  for (size_t i = 0; i < frames.size(); ++i) {
    auto kf = std::make_shared<Keyframe>();
    kf->frame_index = static_cast<int>(i);
    auto frame = std::make_shared<Frame>(frames[i]);
    if (!with_depth) frame->depth = Image();
    kf->frame = frame;
    kf->pose = poses[i];
    const int id = registry.add(kf);
    if (with_depth && frame->has_depth()) {
      insert_rgbd(map, *frame, kf->pose, map.config.insertion_stride, id);
    } else {
      Image rendered_depth, rendered_opacity;
      if (map.count > 0) {
        RenderOptions options;
        options.with_depth = true;
        RenderOutput out =
            render(map, kf->pose, frame->intrinsics, render_cfg, options);
        rendered_depth = std::move(out.depth);
        rendered_opacity = std::move(out.acc_opacity);
      }
      insert_monocular(map, *frame, kf->pose, rendered_depth, rendered_opacity,
                       map.config.insertion_stride, id);
    }
    window.ids.push_back(id);
  }

  mapper.run_mapping(map, registry, window, render_cfg, iterations);
  return map;
}

}  // namespace splatslam
