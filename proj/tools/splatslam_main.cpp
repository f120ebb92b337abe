// Copyright Contributors to the splatslam project
// SPDX-License-Identifier: Apache-2.0
//
// Command-line entry points: run SLAM on a sequence, render a trained map,
// evaluate trajectories, run the convergence-funnel benchmark, and dump the
// default configuration.

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "splatslam/config.hpp"
#include "splatslam/errors.hpp"
#include "splatslam/evaluation.hpp"
#include "splatslam/pipeline.hpp"
#include "splatslam/ply_io.hpp"
#include "splatslam/png_io.hpp"
#include "splatslam/synthetic.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;
constexpr int kExitDiverged = 4;

using namespace splatslam;

struct CommonFlags {
  std::string config_path;
  std::string mode;
  std::string out;
  std::int64_t seed = -1;
  int downscale = 0;
  bool interleaved = false;
  bool scale_align = false;
};

Config load_config(const CommonFlags& flags) {
  Config config =
      flags.config_path.empty() ? Config{} : parse_config_file(flags.config_path);
  if (!flags.mode.empty()) {
    if (flags.mode == "monocular") {
      config.mode = SlamMode::kMonocular;
    } else if (flags.mode == "rgbd") {
      config.mode = SlamMode::kRgbd;
    } else {
      throw ConfigError("--mode must be monocular or rgbd");
    }
  }
  if (flags.seed >= 0) config.seed = static_cast<std::uint64_t>(flags.seed);
  if (flags.downscale > 0) config.downscale = flags.downscale;
  if (!flags.out.empty()) config.output_dir = flags.out;
  if (flags.interleaved) config.interleaved = true;
  return config;
}

int cmd_run(const std::string& dataset, const CommonFlags& flags) {
  Config config;
  try {
    config = load_config(flags);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }

  SequenceSource sequence;
  try {
    sequence = load_tum(dataset, config.dataset);
    downscale_sequence(sequence, config.downscale);
  } catch (const IoError& e) {
    std::cerr << "dataset error: " << e.what() << "\n";
    return kExitIo;
  }

  try {
    SlamResult result = run_slam(sequence, config);
    write_slam_artifacts(result, config);
    std::cout << "frames=" << result.trajectory.size()
              << " keyframes=" << result.keyframe_trajectory.size()
              << " gaussians=" << result.map.count << "\n";
    if (result.has_ate) {
      std::printf("ate_rmse_keyframes=%.6f\n", result.ate_keyframes_rmse);
    }
    if (result.has_render_metrics) {
      std::printf("psnr_mean=%.6f ssim_mean=%.6f\n", result.mean_psnr,
                  result.mean_ssim);
    }
    return kExitOk;
  } catch (const DivergedPose& e) {
    std::cerr << "tracking diverged beyond the retry policy: " << e.what()
              << "\n";
    return kExitDiverged;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kExitIo;
  }
}

int cmd_render(const std::string& ply, const std::string& poses_file,
               const std::string& out_dir, const CameraIntrinsics& k) {
  GaussianMap map;
  std::vector<TrajectoryEntry> poses;
  try {
    map = read_ply(ply);
    poses = load_trajectory(poses_file);
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kExitIo;
  }

  std::filesystem::create_directories(out_dir);
  RenderConfig render_cfg;
  RenderOptions options;
  options.with_depth = true;
  char name[64];
  for (size_t i = 0; i < poses.size(); ++i) {
    const SE3Pose pose_cw = poses[i].pose_wc.inverse();
    RenderOutput out = render(map, pose_cw, k, render_cfg, options);
    std::snprintf(name, sizeof(name), "/render_%06zu.png", i);
    write_png8(out.colour, out_dir + name);
    std::snprintf(name, sizeof(name), "/depth_%06zu.png", i);
    write_png16_depth(out.depth, out_dir + name);
  }
  std::cout << "rendered " << poses.size() << " view(s)\n";
  return kExitOk;
}

int cmd_eval(const std::string& est_path, const std::string& ref_path,
             bool scale_align, const std::string& csv_path) {
  std::vector<TrajectoryEntry> est, ref;
  try {
    est = load_trajectory(est_path);
    ref = load_trajectory(ref_path);
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kExitIo;
  }

  // Associate by nearest timestamp.
  std::vector<SE3Pose> est_poses, ref_poses;
  for (const auto& e : est) {
    const TrajectoryEntry* best = nullptr;
    double best_dt = 0.05;
    for (const auto& r : ref) {
      const double dt = std::abs(r.timestamp - e.timestamp);
      if (dt <= best_dt) {
        best_dt = dt;
        best = &r;
      }
    }
    if (best) {
      est_poses.push_back(e.pose_wc);
      ref_poses.push_back(best->pose_wc);
    }
  }

  try {
    const AteReport report = ate_rmse(est_poses, ref_poses, scale_align);
    std::printf("ate_rmse=%.6f\n", report.rmse);
    std::printf("matched_poses=%zu\n", est_poses.size());
    std::printf("scale_aligned=%s\n", scale_align ? "true" : "false");
    if (scale_align) std::printf("alignment_scale=%.6f\n", report.alignment_scale);
    if (!csv_path.empty()) {
      std::ofstream csv(csv_path);
      csv << "index,error_m\n";
      for (size_t i = 0; i < report.per_frame_error.size(); ++i) {
        csv << i << "," << report.per_frame_error[i] << "\n";
      }
    }
    return kExitOk;
  } catch (const std::runtime_error& e) {
    std::cerr << "eval error: " << e.what() << "\n";
    return kExitConfig;
  }
}

int cmd_funnel(const CommonFlags& flags, int starts_per_ring, int budget,
               int train_iterations, int n_gaussians, int width, int height) {
  Config config;
  try {
    config = load_config(flags);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }

  SyntheticSpec spec;
  spec.trajectory = TrajectoryKind::kFunnelSquare;
  spec.seed = config.seed;
  spec.n_gaussians = n_gaussians;
  spec.width = width;
  spec.height = height;
  spec.funnel_starts_per_ring = starts_per_ring;

  RenderConfig render_cfg = config.renderer;
  render_cfg.threads = config.threads;
  const SyntheticScene scene = generate_synthetic(spec, render_cfg);

  const bool with_depth = config.mode == SlamMode::kRgbd;
  const GaussianMap trained = train_map_from_views(
      scene.frames, scene.trajectory, with_depth, train_iterations, config);

  // The target view is the square centre (training view 4 of the 3x3 grid).
  const Frame& target_frame = scene.frames[4];

  FunnelConfig funnel_cfg;
  funnel_cfg.budget = budget;
  funnel_cfg.tracker = config.tracker_config();
  const FunnelReport report =
      funnel_analysis(trained, target_frame, scene.funnel_target,
                      scene.funnel_test_poses, scene.funnel_test_radii,
                      funnel_cfg, render_cfg);

  std::printf("success_rate=%.6f\n", report.rate());
  std::printf("attempts=%d\n", report.attempts);
  for (const auto& ring : report.rings) {
    std::printf("ring_%.1fm=%.6f (%d/%d)\n", ring.radius, ring.rate(),
                ring.successes, ring.attempts);
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Incremental SLAM with a 3D Gaussian map"};
  app.require_subcommand(1);

  CommonFlags flags;
  std::string dataset, ply, poses_file, out_dir, est_path, ref_path, csv_path;

  auto add_common = [&flags](CLI::App* cmd) {
    cmd->add_option("--config", flags.config_path, "configuration file");
    cmd->add_option("--mode", flags.mode, "monocular or rgbd");
    cmd->add_option("--seed", flags.seed, "RNG seed");
    cmd->add_option("--downscale", flags.downscale, "resolution divisor");
    cmd->add_option("--out", flags.out, "output directory");
    cmd->add_flag("--interleaved", flags.interleaved,
                  "run tracking and mapping concurrently");
  };

  CLI::App* run = app.add_subcommand("run", "run SLAM on a dataset");
  run->add_option("--dataset", dataset, "TUM-layout dataset directory")
      ->required();
  add_common(run);

  CLI::App* render_cmd = app.add_subcommand("render", "render a PLY map");
  CameraIntrinsics render_k{120.0, 120.0, 80.0, 60.0, 160, 120};
  render_cmd->add_option("--ply", ply, "map PLY file")->required();
  render_cmd->add_option("--poses", poses_file, "trajectory file")->required();
  render_cmd->add_option("--out", out_dir, "output directory")->required();
  render_cmd->add_option("--fx", render_k.fx);
  render_cmd->add_option("--fy", render_k.fy);
  render_cmd->add_option("--cx", render_k.cx);
  render_cmd->add_option("--cy", render_k.cy);
  render_cmd->add_option("--width", render_k.width);
  render_cmd->add_option("--height", render_k.height);

  CLI::App* eval_cmd = app.add_subcommand("eval", "trajectory ATE RMSE");
  eval_cmd->add_option("--est", est_path, "estimated trajectory")->required();
  eval_cmd->add_option("--ref", ref_path, "reference trajectory")->required();
  eval_cmd->add_flag("--scale-align", flags.scale_align,
                     "similarity instead of rigid alignment");
  eval_cmd->add_option("--csv", csv_path, "per-frame error CSV output");

  CLI::App* funnel_cmd =
      app.add_subcommand("funnel", "convergence-basin benchmark");
  int starts_per_ring = 16, budget = 1000, train_iterations = 300;
  int funnel_gaussians = 300, funnel_width = 80, funnel_height = 60;
  funnel_cmd->add_option("--starts-per-ring", starts_per_ring);
  funnel_cmd->add_option("--budget", budget);
  funnel_cmd->add_option("--train-iterations", train_iterations);
  funnel_cmd->add_option("--gaussians", funnel_gaussians);
  funnel_cmd->add_option("--width", funnel_width);
  funnel_cmd->add_option("--height", funnel_height);
  add_common(funnel_cmd);

  CLI::App* dump = app.add_subcommand("dump-config", "print the defaults");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (run->parsed()) return cmd_run(dataset, flags);
    if (render_cmd->parsed())
      return cmd_render(ply, poses_file, out_dir, render_k);
    if (eval_cmd->parsed())
      return cmd_eval(est_path, ref_path, flags.scale_align, csv_path);
    if (funnel_cmd->parsed())
      return cmd_funnel(flags, starts_per_ring, budget, train_iterations,
                        funnel_gaussians, funnel_width, funnel_height);
    if (dump->parsed()) {
      std::cout << dump_config(Config{});
      return kExitOk;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return kExitOk;
}
