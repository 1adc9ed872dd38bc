// Command-line frontend: run / eval / synth / render subcommands.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "gsslam/dataset.hpp"
#include "gsslam/errors.hpp"
#include "gsslam/image_io.hpp"
#include "gsslam/slam_system.hpp"
#include "gsslam/synthetic.hpp"

namespace fs = std::filesystem;
using namespace gsslam;

namespace {

void report_error(const std::string& kind, const std::string& message) {
  std::cerr << "{\"error\": \"" << kind << "\", \"message\": \"" << message << "\"}\n";
}

int run_command(const std::string& config_file, const KeyValueMap& overrides) {
  RunConfig cfg;
  if (!config_file.empty()) cfg.apply_key_values(parse_key_value_file(config_file));
  cfg.apply_key_values(overrides);
  auto source = open_dataset(cfg);
  run_slam(cfg, source);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gaussian-splatting RGB-D SLAM with dynamic-object filtering"};
  app.require_subcommand(1);

  // --- run ---------------------------------------------------------------
  auto* run = app.add_subcommand("run", "run the SLAM pipeline on a dataset");
  std::string run_config, dataset, masks, est_depth, output, frames_range;
  uint64_t seed = 0;
  int threads = 0;
  bool no_robust = false, no_loop = false, debug_masks = false, no_masks = false,
       all_frames = false, seed_set = false, threads_set = false;
  run->add_option("--config", run_config, "key = value config file");
  run->add_option("--dataset", dataset, "TUM-layout sequence root");
  run->add_option("--masks", masks, "directory of per-frame static masks");
  run->add_option("--est-depth", est_depth, "directory of estimated depth maps");
  run->add_option("--output", output, "run output directory");
  run->add_option("--frames", frames_range, "frame range A..B (B exclusive)");
  run->add_option("--seed", seed, "run seed (recorded in the config echo)")
      ->each([&](const std::string&) { seed_set = true; });
  run->add_option("--threads", threads, "rasterizer worker count")
      ->each([&](const std::string&) { threads_set = true; });
  run->add_flag("--no-robust-mask", no_robust, "disable robust residual masking");
  run->add_flag("--no-loop-aware", no_loop, "disable loop-aware keyframe insertion");
  run->add_flag("--no-masks", no_masks, "ignore segmentation masks");
  run->add_flag("--debug-masks", debug_masks, "dump per-round robust masks");
  run->add_flag("--eval-all-frames", all_frames, "evaluate ATE on all frames, not keyframes");

  // --- eval --------------------------------------------------------------
  auto* eval = app.add_subcommand("eval", "evaluate a trajectory (and optional renders)");
  std::string est_path, gt_path, renders_dir, refs_dir, masks_dir, out_json, echo_file;
  double assoc_tol = 0.02;
  eval->add_option("--est", est_path, "estimated trajectory, TUM format")->required();
  eval->add_option("--gt", gt_path, "ground-truth trajectory, TUM format")->required();
  eval->add_option("--renders", renders_dir, "rendered images directory");
  eval->add_option("--refs", refs_dir, "reference images directory");
  eval->add_option("--masks", masks_dir, "static-mask directory for masked metrics");
  eval->add_option("--assoc-tol", assoc_tol, "timestamp association tolerance, seconds");
  eval->add_option("--config-echo", echo_file, "config file to embed in the report");
  eval->add_option("--output", out_json, "metrics JSON path");

  // --- synth -------------------------------------------------------------
  auto* synth = app.add_subcommand("synth", "generate a synthetic TUM-layout dataset");
  std::string scene_file, synth_out;
  uint64_t synth_seed = 0;
  synth->add_option("--scene", scene_file, "scene spec JSON")->required();
  synth->add_option("--output", synth_out, "dataset output directory")->required();
  synth->add_option("--seed", synth_seed, "generator seed");

  // --- render ------------------------------------------------------------
  auto* render = app.add_subcommand("render", "render novel views from a saved map");
  std::string map_path, poses_path, render_out, render_config;
  render->add_option("--map", map_path, "map.bin from a run directory")->required();
  render->add_option("--poses", poses_path, "TUM-format pose list")->required();
  render->add_option("--config", render_config, "config file with camera intrinsics")->required();
  render->add_option("--output", render_out, "image output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand(run)) {
      KeyValueMap overrides;
      if (!dataset.empty()) overrides["dataset"] = dataset;
      if (!masks.empty()) overrides["masks"] = masks;
      if (!est_depth.empty()) overrides["est_depth"] = est_depth;
      if (!output.empty()) overrides["output"] = output;
      if (seed_set) overrides["seed"] = std::to_string(seed);
      if (threads_set) overrides["threads"] = std::to_string(threads);
      if (no_robust) overrides["robust.enabled"] = "false";
      if (no_loop) overrides["loop_aware"] = "false";
      if (no_masks) overrides["use_masks"] = "false";
      if (debug_masks) overrides["debug_masks"] = "true";
      if (all_frames) overrides["eval_all_frames"] = "true";
      if (!frames_range.empty()) {
        const size_t sep = frames_range.find("..");
        if (sep == std::string::npos) {
          throw Error(ErrorKind::BadConfig, "--frames expects A..B");
        }
        overrides["frames.begin"] = frames_range.substr(0, sep);
        overrides["frames.end"] = frames_range.substr(sep + 2);
      }
      return run_command(run_config, overrides);
    }

    if (app.got_subcommand(eval)) {
      std::string echo;
      if (!echo_file.empty()) {
        std::ifstream in(echo_file);
        if (!in) throw Error(ErrorKind::BadConfig, "cannot read " + echo_file);
        std::stringstream ss;
        ss << in.rdbuf();
        echo = ss.str();
      }
      const std::string text = evaluate_files(est_path, gt_path, renders_dir, refs_dir,
                                              masks_dir, assoc_tol, echo, out_json);
      if (out_json.empty()) std::cout << text;
      return 0;
    }

    if (app.got_subcommand(synth)) {
      const SceneSpec spec = scene_spec_from_json_file(scene_file);
      const SyntheticSequence seq = generate_synthetic_sequence(spec, synth_seed);
      export_tum_layout(seq, synth_out);
      std::cout << "[synth] wrote " << seq.frames.size() << " frames to " << synth_out << "\n";
      return 0;
    }

    if (app.got_subcommand(render)) {
      RunConfig cfg;
      cfg.apply_key_values(parse_key_value_file(render_config));
      if (!cfg.camera.valid()) {
        throw Error(ErrorKind::BadConfig, "render config must provide camera intrinsics");
      }
      const GaussianMap map = load_map(map_path);
      const std::vector<TimedPose> poses = read_trajectory_tum(poses_path);
      fs::create_directories(render_out);
      char name[32];
      for (size_t i = 0; i < poses.size(); ++i) {
        std::snprintf(name, sizeof(name), "%06zu.png", i);
        const RenderResult r =
            render_frame(map.span(), poses[i].pose, cfg.camera, cfg.render, map.version());
        write_color_png(fs::path(render_out) / name, r.color);
      }
      std::cout << "[render] wrote " << poses.size() << " views to " << render_out << "\n";
      return 0;
    }
  } catch (const Error& e) {
    report_error(error_kind_name(e.kind()), e.what());
    return e.kind() == ErrorKind::BadConfig ? 2 : 1;
  } catch (const std::exception& e) {
    report_error("Unhandled", e.what());
    return 1;
  }
  return 0;
}
