#include "gsslam/slam_system.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "gsslam/errors.hpp"
#include "gsslam/image_io.hpp"

#ifndef GSSLAM_BUILD_VERSION
#define GSSLAM_BUILD_VERSION "unknown"
#endif

namespace gsslam {

const char* build_version() { return GSSLAM_BUILD_VERSION; }

// ---------------------------------------------------------------------------
// RunConfig serialization

namespace {

std::string fmt_double(double v) {
  std::ostringstream s;
  s.precision(17);
  s << v;
  return s.str();
}

struct KeyReader {
  const KeyValueMap& kv;
  std::vector<std::string> unknown;

  explicit KeyReader(const KeyValueMap& m) : kv(m) {
    for (const auto& [k, v] : kv) unknown.push_back(k);
  }
  void consume(const std::string& key) {
    unknown.erase(std::remove(unknown.begin(), unknown.end(), key), unknown.end());
  }
  void get(const std::string& key, double& out) {
    auto it = kv.find(key);
    if (it == kv.end()) return;
    consume(key);
    try {
      out = std::stod(it->second);
    } catch (...) {
      throw Error(ErrorKind::BadConfig, key + ": expected a number, got '" + it->second + "'");
    }
  }
  void get(const std::string& key, int& out) {
    double d = out;
    get(key, d);
    out = static_cast<int>(d);
  }
  void get(const std::string& key, uint64_t& out) {
    auto it = kv.find(key);
    if (it == kv.end()) return;
    consume(key);
    out = std::stoull(it->second);
  }
  void get(const std::string& key, bool& out) {
    auto it = kv.find(key);
    if (it == kv.end()) return;
    consume(key);
    if (it->second == "true" || it->second == "1") {
      out = true;
    } else if (it->second == "false" || it->second == "0") {
      out = false;
    } else {
      throw Error(ErrorKind::BadConfig, key + ": expected true/false");
    }
  }
  void get(const std::string& key, std::string& out) {
    auto it = kv.find(key);
    if (it == kv.end()) return;
    consume(key);
    out = it->second;
  }
};

}  // namespace

KeyValueMap RunConfig::to_key_values() const {
  KeyValueMap kv;
  kv["dataset"] = dataset_path;
  kv["masks"] = mask_path;
  kv["est_depth"] = est_depth_path;
  kv["output"] = output_path;
  kv["frames.begin"] = std::to_string(frame_begin);
  kv["frames.end"] = std::to_string(frame_end);
  kv["seed"] = std::to_string(seed);
  kv["verbosity"] = std::to_string(verbosity);
  kv["threads"] = std::to_string(threads);
  kv["use_masks"] = use_masks ? "true" : "false";
  kv["loop_aware"] = loop_aware_enabled ? "true" : "false";
  kv["debug_masks"] = debug_masks ? "true" : "false";
  kv["eval_all_frames"] = eval_all_frames ? "true" : "false";
  kv["backend_every"] = std::to_string(backend_every);
  kv["init_iters"] = std::to_string(init_iters);
  kv["keyframe.trans_depth_factor"] = fmt_double(keyframe_trans_depth_factor);
  kv["assoc_tol"] = fmt_double(assoc_tol);

  kv["camera.fx"] = fmt_double(camera.fx);
  kv["camera.fy"] = fmt_double(camera.fy);
  kv["camera.cx"] = fmt_double(camera.cx);
  kv["camera.cy"] = fmt_double(camera.cy);
  kv["camera.width"] = std::to_string(camera.width);
  kv["camera.height"] = std::to_string(camera.height);
  kv["camera.depth_scale"] = fmt_double(camera.depth_scale);

  kv["tracking.alpha"] = fmt_double(tracking.alpha);
  kv["tracking.tau_opacity"] = fmt_double(tracking.tau_opacity);
  kv["tracking.lr_rotation"] = fmt_double(tracking.lr_rotation);
  kv["tracking.lr_translation"] = fmt_double(tracking.lr_translation);
  kv["tracking.max_iters"] = std::to_string(tracking.max_iters);
  kv["tracking.convergence_eps"] = fmt_double(tracking.convergence_eps);
  kv["tracking.max_rejects"] = std::to_string(tracking.max_rejects);

  kv["window.sigma_iou"] = fmt_double(window.sigma_iou);
  kv["window.max_window"] = std::to_string(window.max_window);
  kv["window.trans_thresh"] = fmt_double(window.trans_thresh);
  kv["window.rot_thresh_deg"] = fmt_double(window.rot_thresh_deg);
  kv["window.max_loop_kf"] = std::to_string(window.max_loop_kf);
  kv["window.loop_tally_fraction"] = fmt_double(window.loop_tally_fraction);

  kv["robust.tau"] = fmt_double(robust.tau_robust);
  kv["robust.kernel_size"] = std::to_string(robust.kernel_size);
  kv["robust.gamma"] = fmt_double(robust.gamma);
  kv["robust.n_bins"] = std::to_string(robust.n_bins);
  kv["robust.enabled"] = mapper.robust_mask_enabled ? "true" : "false";

  kv["mapper.alpha"] = fmt_double(mapper.alpha);
  kv["mapper.lambda_iso"] = fmt_double(mapper.lambda_iso);
  kv["mapper.iters_per_round"] = std::to_string(mapper.iters_per_round);
  kv["mapper.lr_mu"] = fmt_double(mapper.lr_mu);
  kv["mapper.lr_color"] = fmt_double(mapper.lr_color);
  kv["mapper.lr_opacity"] = fmt_double(mapper.lr_opacity);
  kv["mapper.lr_scale"] = fmt_double(mapper.lr_scale);
  kv["mapper.lr_quat"] = fmt_double(mapper.lr_quat);
  kv["mapper.lr_rotation"] = fmt_double(mapper.lr_rotation);
  kv["mapper.lr_translation"] = fmt_double(mapper.lr_translation);

  kv["insert.sparse_stride"] = std::to_string(insert.sparse_stride);
  kv["insert.covered_opacity"] = fmt_double(insert.covered_opacity);
  kv["insert.initial_opacity"] = fmt_double(insert.initial_opacity);

  kv["densify.prune_opacity"] = fmt_double(densify.prune_opacity);
  kv["densify.recent_kf_window"] = std::to_string(densify.recent_kf_window);
  kv["densify.min_observing_kfs"] = std::to_string(densify.min_observing_kfs);
  kv["densify.grad_threshold"] = fmt_double(densify.grad_threshold);
  kv["densify.split_scale_fraction"] = fmt_double(densify.split_scale_fraction);
  kv["densify.split_scale_shrink"] = fmt_double(densify.split_scale_shrink);

  kv["render.near_plane"] = fmt_double(render.near_plane);
  kv["render.covariance_reg"] = fmt_double(render.covariance_reg);
  kv["render.support_sigmas"] = fmt_double(render.support_sigmas);
  kv["render.min_power"] = fmt_double(render.min_power);
  kv["render.max_weight"] = fmt_double(render.max_weight);
  kv["render.min_transmittance"] = fmt_double(render.min_transmittance);
  return kv;
}

void RunConfig::apply_key_values(const KeyValueMap& kv) {
  KeyReader r(kv);
  r.get("dataset", dataset_path);
  r.get("masks", mask_path);
  r.get("est_depth", est_depth_path);
  r.get("output", output_path);
  r.get("frames.begin", frame_begin);
  r.get("frames.end", frame_end);
  r.get("seed", seed);
  r.get("verbosity", verbosity);
  r.get("threads", threads);
  r.get("use_masks", use_masks);
  r.get("loop_aware", loop_aware_enabled);
  r.get("debug_masks", debug_masks);
  r.get("eval_all_frames", eval_all_frames);
  r.get("backend_every", backend_every);
  r.get("init_iters", init_iters);
  r.get("keyframe.trans_depth_factor", keyframe_trans_depth_factor);
  r.get("assoc_tol", assoc_tol);

  r.get("camera.fx", camera.fx);
  r.get("camera.fy", camera.fy);
  r.get("camera.cx", camera.cx);
  r.get("camera.cy", camera.cy);
  r.get("camera.width", camera.width);
  r.get("camera.height", camera.height);
  r.get("camera.depth_scale", camera.depth_scale);

  r.get("tracking.alpha", tracking.alpha);
  r.get("tracking.tau_opacity", tracking.tau_opacity);
  r.get("tracking.lr_rotation", tracking.lr_rotation);
  r.get("tracking.lr_translation", tracking.lr_translation);
  r.get("tracking.max_iters", tracking.max_iters);
  r.get("tracking.convergence_eps", tracking.convergence_eps);
  r.get("tracking.max_rejects", tracking.max_rejects);

  r.get("window.sigma_iou", window.sigma_iou);
  r.get("window.max_window", window.max_window);
  r.get("window.trans_thresh", window.trans_thresh);
  r.get("window.rot_thresh_deg", window.rot_thresh_deg);
  r.get("window.max_loop_kf", window.max_loop_kf);
  r.get("window.loop_tally_fraction", window.loop_tally_fraction);

  r.get("robust.tau", robust.tau_robust);
  r.get("robust.kernel_size", robust.kernel_size);
  r.get("robust.gamma", robust.gamma);
  r.get("robust.n_bins", robust.n_bins);
  r.get("robust.enabled", mapper.robust_mask_enabled);

  r.get("mapper.alpha", mapper.alpha);
  r.get("mapper.lambda_iso", mapper.lambda_iso);
  r.get("mapper.iters_per_round", mapper.iters_per_round);
  r.get("mapper.lr_mu", mapper.lr_mu);
  r.get("mapper.lr_color", mapper.lr_color);
  r.get("mapper.lr_opacity", mapper.lr_opacity);
  r.get("mapper.lr_scale", mapper.lr_scale);
  r.get("mapper.lr_quat", mapper.lr_quat);
  r.get("mapper.lr_rotation", mapper.lr_rotation);
  r.get("mapper.lr_translation", mapper.lr_translation);

  r.get("insert.sparse_stride", insert.sparse_stride);
  r.get("insert.covered_opacity", insert.covered_opacity);
  r.get("insert.initial_opacity", insert.initial_opacity);

  r.get("densify.prune_opacity", densify.prune_opacity);
  r.get("densify.recent_kf_window", densify.recent_kf_window);
  r.get("densify.min_observing_kfs", densify.min_observing_kfs);
  r.get("densify.grad_threshold", densify.grad_threshold);
  r.get("densify.split_scale_fraction", densify.split_scale_fraction);
  r.get("densify.split_scale_shrink", densify.split_scale_shrink);

  r.get("render.near_plane", render.near_plane);
  r.get("render.covariance_reg", render.covariance_reg);
  r.get("render.support_sigmas", render.support_sigmas);
  r.get("render.min_power", render.min_power);
  r.get("render.max_weight", render.max_weight);
  r.get("render.min_transmittance", render.min_transmittance);

  if (!r.unknown.empty()) {
    throw Error(ErrorKind::BadConfig, "unknown config key: " + r.unknown.front());
  }
}

RunConfig RunConfig::from_key_values(const KeyValueMap& kv) {
  RunConfig cfg;
  cfg.apply_key_values(kv);
  return cfg;
}

// ---------------------------------------------------------------------------
// Frame sources

Frame ManifestFrameSource::frame(size_t index) const {
  Frame f = load_frame(manifest_, index);
  if (!use_masks_) f.static_mask.fill(1);
  return f;
}

MemoryFrameSource::MemoryFrameSource(const SyntheticSequence& seq, bool use_masks)
    : frames_(seq.frames), gt_(seq.manifest.gt_trajectory),
      intrinsics_(seq.manifest.intrinsics) {
  if (!use_masks) {
    for (Frame& f : frames_) f.static_mask.fill(1);
  }
}

std::shared_ptr<const FrameSource> open_dataset(const RunConfig& cfg) {
  if (!cfg.camera.valid()) {
    throw Error(ErrorKind::BadConfig, "camera intrinsics missing or invalid");
  }
  SequenceManifest manifest =
      load_tum_sequence(cfg.dataset_path, cfg.camera, cfg.assoc_tol);
  if (cfg.use_masks && !cfg.mask_path.empty()) {
    load_masks(manifest, cfg.mask_path);
  }
  if (!cfg.est_depth_path.empty()) {
    attach_est_depth(manifest, cfg.est_depth_path);
  }
  return std::make_shared<ManifestFrameSource>(std::move(manifest), cfg.use_masks);
}

// ---------------------------------------------------------------------------
// Pipeline

SlamSystem::SlamSystem(const RunConfig& cfg, std::shared_ptr<const FrameSource> source)
    : cfg_(cfg), source_(std::move(source)) {
  cfg_.render.threads = cfg_.threads;
  cfg_.mapper.fixed_kf_id = 0;  // gauge: the first registered keyframe never moves
}

std::vector<uint32_t> SlamSystem::keyframe_visible_ids(int kf_id) {
  return visible_ids(map_, keyframes_[static_cast<size_t>(kf_id)].pose,
                     source_->intrinsics(), cfg_.render);
}

void SlamSystem::initialize_first_frame(size_t index) {
  Frame f0 = source_->frame(index);
  const Intrinsics& K = source_->intrinsics();

  // First-frame hole filling from aligned estimated depth, static holes only.
  if (f0.has_est_depth()) {
    MaskImage fit_valid(f0.depth.width(), f0.depth.height(), 0);
    for (int y = 0; y < f0.depth.height(); ++y) {
      for (int x = 0; x < f0.depth.width(); ++x) {
        fit_valid(x, y) =
            (f0.static_mask(x, y) && f0.depth(x, y) > 0.0 && f0.est_depth(x, y) > 0.0) ? 1 : 0;
      }
    }
    try {
      const DepthAlignment fit = align_depth(f0.est_depth, f0.depth, fit_valid);
      for (int y = 0; y < f0.depth.height(); ++y) {
        for (int x = 0; x < f0.depth.width(); ++x) {
          if (f0.depth(x, y) <= 0.0 && f0.static_mask(x, y) && fit.aligned(x, y) > 0.0) {
            f0.depth(x, y) = fit.aligned(x, y);
          }
        }
      }
      if (cfg_.verbosity > 0) {
        std::cout << "[init] depth alignment a=" << fit.a << " b=" << fit.b << "\n";
      }
    } catch (const Error& e) {
      if (cfg_.verbosity > 0) std::cout << "[init] hole filling skipped: " << e.what() << "\n";
    }
  }

  const CameraPose pose0;  // world frame anchored at the first camera
  insert_from_keyframe(map_, f0, pose0, K, 0, InsertMode::Dense, cfg_.insert, cfg_.render);
  init_optimize(map_, f0, pose0, K, cfg_.init_iters, cfg_.mapper, cfg_.render);

  Keyframe kf;
  kf.kf_id = 0;
  kf.frame_index = static_cast<int>(index);
  kf.pose = pose0;
  kf.frame = std::make_shared<Frame>(std::move(f0));
  kf.histogram = ResidualHistogram(cfg_.robust.n_bins);
  keyframes_.push_back(std::move(kf));
  window_ = {0};
  summary_.events.log_insert(0, static_cast<int>(index), 0.0, "init");

  // Auto keyframe translation threshold from the first frame's median depth.
  if (cfg_.window.trans_thresh <= 0.0) {
    std::vector<double> depths;
    const Frame& f = *keyframes_[0].frame;
    for (int y = 0; y < f.depth.height(); ++y) {
      for (int x = 0; x < f.depth.width(); ++x) {
        if (f.static_mask(x, y) && f.depth(x, y) > 0.0) depths.push_back(f.depth(x, y));
      }
    }
    double median = 2.0;
    if (!depths.empty()) {
      std::nth_element(depths.begin(), depths.begin() + static_cast<long>(depths.size() / 2),
                       depths.end());
      median = depths[depths.size() / 2];
    }
    cfg_.window.trans_thresh = cfg_.keyframe_trans_depth_factor * median;
  }
}

void SlamSystem::backend_round() {
  std::vector<Keyframe*> window_kfs;
  for (int kf_id : window_) window_kfs.push_back(&keyframes_[static_cast<size_t>(kf_id)]);

  WindowOptResult res = window_optimize(map_, window_kfs, source_->intrinsics(), cfg_.mapper,
                                        cfg_.robust, cfg_.render);
  if (cfg_.debug_masks && cfg_.mapper.robust_mask_enabled) {
    for (size_t slot = 0; slot < window_.size(); ++slot) {
      robust_records_.push_back({rounds_, window_[slot], std::move(res.robust_union[slot])});
    }
  }
  prune_and_densify(map_, window_, res.stats, cfg_.densify);
  ++rounds_;
  ++summary_.backend_rounds;
}

RunSummary SlamSystem::run() {
  const size_t total = source_->size();
  if (total == 0) throw Error(ErrorKind::EmptySequence, "frame source is empty");
  const size_t begin = static_cast<size_t>(std::max(0, cfg_.frame_begin));
  const size_t end = cfg_.frame_end < 0
                         ? total
                         : std::min(total, static_cast<size_t>(cfg_.frame_end));
  if (begin >= end) throw Error(ErrorKind::EmptySequence, "empty frame range");
  const Intrinsics& K = source_->intrinsics();

  initialize_first_frame(begin);

  std::vector<CameraPose> tracked;  // per processed frame
  tracked.push_back(keyframes_[0].pose);
  summary_.frames.push_back({begin, source_->timestamp(begin), TrackStatus::Converged, true,
                             0.0, 0});

  int frames_since_backend = 0;
  for (size_t i = begin + 1; i < end; ++i) {
    const Frame frame = source_->frame(i);

    // Constant-velocity initialization; identity-relative for the second frame.
    CameraPose T_init = tracked.back();
    if (tracked.size() >= 2) {
      const CameraPose& prev = tracked[tracked.size() - 1];
      const CameraPose& prev2 = tracked[tracked.size() - 2];
      T_init = prev * (prev2.inverse() * prev);
    }

    TrackResult tr = track_frame(map_.span(), frame, T_init, K, cfg_.tracking, cfg_.render,
                                 map_.version());
    const bool failed = track_failed(tr.status);
    const CameraPose pose_i = failed ? T_init : tr.pose;
    tracked.push_back(pose_i);
    if (failed) ++summary_.diverged_frames;

    FrameRecordStatus status;
    status.frame_index = i;
    status.timestamp = frame.timestamp;
    status.status = tr.status;
    status.final_loss = tr.final_loss;
    status.iters = tr.iters;

    bool is_keyframe = false;
    if (!failed) {
      const int last_kf = window_.back();
      const std::vector<uint32_t> cur_visible = tr.final_render.contributing_indices(0.01);
      const std::vector<uint32_t> last_visible = keyframe_visible_ids(last_kf);
      const CameraPose T_rel =
          pose_i * keyframes_[static_cast<size_t>(last_kf)].pose.inverse();
      if (should_insert_keyframe(cur_visible, last_visible, T_rel, cfg_.window)) {
        is_keyframe = true;
        const int kf_id = static_cast<int>(keyframes_.size());
        Keyframe kf;
        kf.kf_id = kf_id;
        kf.frame_index = static_cast<int>(i);
        kf.pose = pose_i;
        kf.frame = std::make_shared<Frame>(frame);
        kf.histogram = ResidualHistogram(cfg_.robust.n_bins);
        keyframes_.push_back(std::move(kf));
        summary_.events.log_insert(kf_id, static_cast<int>(i),
                                   covisibility_iou(cur_visible, last_visible), "covis");

        try {
          insert_from_keyframe(map_, frame, pose_i, K, kf_id, InsertMode::Sparse, cfg_.insert,
                               cfg_.render);
        } catch (const Error& e) {
          if (e.kind() != ErrorKind::EmptyFrame) throw;
        }

        std::map<int, std::vector<uint32_t>> vis_cache;
        auto visible_of = [&](int id) {
          auto it = vis_cache.find(id);
          if (it == vis_cache.end()) {
            it = vis_cache.emplace(id, keyframe_visible_ids(id)).first;
          }
          return it->second;
        };
        const std::vector<int> evicted =
            maintain_window(window_, kf_id, visible_of, cfg_.window);
        for (int ev : evicted) {
          summary_.events.log_evict(ev, covisibility_iou(visible_of(ev), visible_of(kf_id)));
        }

        if (cfg_.loop_aware_enabled) {
          const std::vector<uint32_t> post_visible = visible_ids(map_, pose_i, K, cfg_.render);
          const std::vector<int> loops =
              loop_aware_insert(window_, post_visible, map_, cfg_.window);
          for (int lp : loops) {
            int tally = 0;
            for (uint32_t idx : post_visible) {
              if (map_.gaussians()[idx].origin_kf_id == lp) ++tally;
            }
            summary_.events.log_loop(
                lp, static_cast<double>(tally) / static_cast<double>(post_visible.size()));
            ++summary_.loop_insertions;
          }
        }

        backend_round();
        frames_since_backend = 0;
      }
    }
    if (!is_keyframe && ++frames_since_backend >= cfg_.backend_every) {
      backend_round();
      frames_since_backend = 0;
    }

    status.is_keyframe = is_keyframe;
    summary_.frames.push_back(status);
    if (cfg_.verbosity > 1) {
      std::cout << "[frame " << i << "] iters=" << tr.iters << " loss=" << tr.final_loss
                << (is_keyframe ? " KF" : "") << " map=" << map_.size() << "\n";
    }
  }

  // Final trajectories; keyframe entries carry backend-refined poses.
  std::map<size_t, int> kf_by_frame;
  for (const Keyframe& kf : keyframes_) kf_by_frame[static_cast<size_t>(kf.frame_index)] = kf.kf_id;
  for (size_t local = 0; local < tracked.size(); ++local) {
    const size_t i = begin + local;
    const auto it = kf_by_frame.find(i);
    const CameraPose pose =
        it != kf_by_frame.end() ? keyframes_[static_cast<size_t>(it->second)].pose
                                : tracked[local];
    summary_.trajectory_all.push_back({source_->timestamp(i), pose});
  }
  for (const Keyframe& kf : keyframes_) {
    summary_.trajectory_kf.push_back(
        {source_->timestamp(static_cast<size_t>(kf.frame_index)), kf.pose});
  }
  return summary_;
}

// ---------------------------------------------------------------------------
// Run directory writing + file-based evaluation

std::string evaluate_files(const std::filesystem::path& est_trajectory,
                           const std::filesystem::path& gt_trajectory,
                           const std::filesystem::path& renders_dir,
                           const std::filesystem::path& refs_dir,
                           const std::filesystem::path& masks_dir, double assoc_tol,
                           const std::string& config_echo,
                           const std::filesystem::path& output_json) {
  nlohmann::json j;
  j["version"] = build_version();

  const std::vector<TimedPose> est = read_trajectory_tum(est_trajectory);
  const std::vector<TimedPose> gt = read_trajectory_tum(gt_trajectory);
  const TrajectoryReport traj = ate(est, gt, assoc_tol);
  j["ate_rmse_cm"] = traj.ate_rmse_cm;
  j["ate_std_cm"] = traj.ate_std_cm;
  j["matched_pairs"] = traj.matched_pairs;

  if (std::filesystem::is_directory(renders_dir)) {
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(renders_dir)) {
      if (entry.is_regular_file()) files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());

    nlohmann::json per_frame = nlohmann::json::array();
    double psnr_sum = 0.0;
    double ssim_sum = 0.0;
    for (const auto& file : files) {
      const ColorImage rendered = read_color_png(file);
      const ColorImage reference = read_color_png(refs_dir / file.filename());
      MaskImage mask(rendered.width(), rendered.height(), 1);
      const std::filesystem::path mask_file = masks_dir / file.filename();
      if (std::filesystem::exists(mask_file)) mask = read_mask_png(mask_file);

      const RenderReport rep = masked_image_metrics(rendered, reference, mask);
      per_frame.push_back({{"name", file.filename().string()},
                           {"psnr_db", rep.psnr_db},
                           {"ssim", rep.ssim},
                           {"degenerate", rep.degenerate}});
      psnr_sum += rep.psnr_db;
      ssim_sum += rep.ssim;
    }
    if (!files.empty()) {
      j["mean_psnr_db"] = psnr_sum / static_cast<double>(files.size());
      j["mean_ssim"] = ssim_sum / static_cast<double>(files.size());
      j["per_frame"] = per_frame;
    }
  }
  if (!config_echo.empty()) j["config_echo"] = config_echo;

  const std::string text = j.dump(2) + "\n";
  if (!output_json.empty()) {
    std::ofstream out(output_json);
    out << text;
  }
  return text;
}

std::filesystem::path run_slam(const RunConfig& cfg,
                               std::shared_ptr<const FrameSource> source) {
  namespace fs = std::filesystem;
  const fs::path out_dir = cfg.output_path;
  fs::create_directories(out_dir);
  fs::create_directories(out_dir / "renders");
  fs::create_directories(out_dir / "refs");
  fs::create_directories(out_dir / "masks_eval");

  write_key_value_file(out_dir / "config.txt", cfg.to_key_values());

  SlamSystem system(cfg, source);
  const RunSummary summary = system.run();

  write_trajectory_tum(out_dir / "trajectory.txt", summary.trajectory_all);
  write_trajectory_tum(out_dir / "keyframes.txt", summary.trajectory_kf);
  summary.events.write(out_dir / "events.log");
  save_map(system.map(), out_dir / "map.bin", out_dir / "map_summary.txt");

  if (cfg.debug_masks) {
    fs::create_directories(out_dir / "debug_masks");
    char name[64];
    for (const RobustMaskRecord& rec : system.robust_mask_records()) {
      std::snprintf(name, sizeof(name), "round_%04d_kf_%04d.png", rec.round, rec.kf_id);
      write_mask_png(out_dir / "debug_masks" / name, rec.mask_union);
    }
  }

  // Per-frame renders from the final map at the estimated poses, plus the
  // reference images and evaluation masks; the metrics JSON is computed
  // from these files so a standalone eval reproduces it exactly.
  RenderConfig rc = cfg.render;
  rc.threads = cfg.threads;
  const Intrinsics& K = source->intrinsics();
  char name[32];
  for (size_t local = 0; local < summary.trajectory_all.size(); ++local) {
    const size_t i = static_cast<size_t>(cfg.frame_begin) + local;
    std::snprintf(name, sizeof(name), "%06zu.png", i);
    const RenderResult render = render_frame(system.map().span(), summary.trajectory_all[local].pose,
                                             K, rc, system.map().version());
    write_color_png(out_dir / "renders" / name, render.color);
    const Frame frame = source->frame(i);
    write_color_png(out_dir / "refs" / name, frame.rgb);
    write_mask_png(out_dir / "masks_eval" / name, frame.static_mask);
  }

  if (!source->ground_truth().empty()) {
    write_trajectory_tum(out_dir / "gt.txt", source->ground_truth());
    const fs::path est = cfg.eval_all_frames ? out_dir / "trajectory.txt"
                                             : out_dir / "keyframes.txt";
    std::ifstream cfg_in(out_dir / "config.txt");
    std::stringstream echo;
    echo << cfg_in.rdbuf();
    std::ofstream cmd(out_dir / "eval_command.txt");
    cmd << "gsslam eval --est " << est.filename().string()
        << " --gt gt.txt --renders renders --refs refs --masks masks_eval"
        << " --assoc-tol " << cfg.assoc_tol << " --config-echo config.txt"
        << " --output metrics.json\n";
    try {
      evaluate_files(est, out_dir / "gt.txt", out_dir / "renders", out_dir / "refs",
                     out_dir / "masks_eval", cfg.assoc_tol, echo.str(),
                     out_dir / "metrics.json");
    } catch (const Error& e) {
      nlohmann::json err;
      err["error"] = e.what();
      std::ofstream out(out_dir / "metrics.json");
      out << err.dump(2) << "\n";
    }
  }

  if (cfg.verbosity > 0) {
    std::cout << "[run] frames=" << summary.trajectory_all.size()
              << " keyframes=" << summary.trajectory_kf.size()
              << " map=" << system.map().size()
              << " diverged=" << summary.diverged_frames
              << " loops=" << summary.loop_insertions << "\n";
  }
  return out_dir;
}

}  // namespace gsslam
