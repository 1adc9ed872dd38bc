#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "gsslam/config_file.hpp"
#include "gsslam/dataset.hpp"
#include "gsslam/gaussian_map.hpp"
#include "gsslam/keyframing.hpp"
#include "gsslam/mapper.hpp"
#include "gsslam/metrics.hpp"
#include "gsslam/synthetic.hpp"
#include "gsslam/tracker.hpp"

namespace gsslam {

const char* build_version();

// Everything a run needs; round-trips through the key=value config format
// so an output directory always carries the exact configuration used.
struct RunConfig {
  std::string dataset_path;
  std::string mask_path;
  std::string est_depth_path;
  std::string output_path = "out";
  int frame_begin = 0;
  int frame_end = -1;  // exclusive; -1 = to the end
  uint64_t seed = 0;
  int verbosity = 1;
  int threads = 1;
  bool use_masks = true;
  bool loop_aware_enabled = true;
  bool debug_masks = false;
  bool eval_all_frames = false;
  int backend_every = 5;
  int init_iters = 500;
  double keyframe_trans_depth_factor = 0.08;
  double assoc_tol = 0.02;

  Intrinsics camera;
  TrackingConfig tracking;
  WindowConfig window;
  RobustConfig robust;
  MapperConfig mapper;
  InsertConfig insert;
  DensifyConfig densify;
  RenderConfig render;

  KeyValueMap to_key_values() const;
  static RunConfig from_key_values(const KeyValueMap& kv);  // throws BadConfig
  void apply_key_values(const KeyValueMap& kv);
};

// Sequential frame access; lets the pipeline run off disk datasets and
// in-memory synthetic sequences alike.
class FrameSource {
 public:
  virtual ~FrameSource() = default;
  virtual size_t size() const = 0;
  virtual Frame frame(size_t index) const = 0;
  virtual double timestamp(size_t index) const = 0;
  virtual const std::vector<TimedPose>& ground_truth() const = 0;
  virtual const Intrinsics& intrinsics() const = 0;
};

class ManifestFrameSource : public FrameSource {
 public:
  explicit ManifestFrameSource(SequenceManifest manifest, bool use_masks = true)
      : manifest_(std::move(manifest)), use_masks_(use_masks) {}
  size_t size() const override { return manifest_.frames.size(); }
  Frame frame(size_t index) const override;
  double timestamp(size_t index) const override { return manifest_.frames[index].timestamp; }
  const std::vector<TimedPose>& ground_truth() const override { return manifest_.gt_trajectory; }
  const Intrinsics& intrinsics() const override { return manifest_.intrinsics; }

 private:
  SequenceManifest manifest_;
  bool use_masks_;
};

class MemoryFrameSource : public FrameSource {
 public:
  explicit MemoryFrameSource(const SyntheticSequence& seq, bool use_masks = true);
  size_t size() const override { return frames_.size(); }
  Frame frame(size_t index) const override { return frames_[index]; }
  double timestamp(size_t index) const override { return frames_[index].timestamp; }
  const std::vector<TimedPose>& ground_truth() const override { return gt_; }
  const Intrinsics& intrinsics() const override { return intrinsics_; }

 private:
  std::vector<Frame> frames_;
  std::vector<TimedPose> gt_;
  Intrinsics intrinsics_;
};

struct FrameRecordStatus {
  size_t frame_index = 0;
  double timestamp = 0.0;
  TrackStatus status = TrackStatus::NoConstraint;
  bool is_keyframe = false;
  double final_loss = 0.0;
  int iters = 0;
};

struct RobustMaskRecord {
  int round = 0;
  int kf_id = 0;
  MaskImage mask_union;  // union over the round's iterations
};

struct RunSummary {
  std::vector<FrameRecordStatus> frames;
  std::vector<TimedPose> trajectory_all;  // keyframe entries carry refined poses
  std::vector<TimedPose> trajectory_kf;
  KeyframeEventLog events;
  int diverged_frames = 0;
  int loop_insertions = 0;
  int backend_rounds = 0;
};

// Interleaved single-process frontend/backend pipeline: first-frame map
// initialization, then per frame tracking, keyframe logic, loop-aware
// window updates, windowed joint optimization, and pruning.
class SlamSystem {
 public:
  SlamSystem(const RunConfig& cfg, std::shared_ptr<const FrameSource> source);

  RunSummary run();

  const GaussianMap& map() const { return map_; }
  const std::vector<Keyframe>& keyframes() const { return keyframes_; }
  const std::vector<int>& window() const { return window_; }
  const std::vector<RobustMaskRecord>& robust_mask_records() const { return robust_records_; }

 private:
  void initialize_first_frame(size_t index);
  void backend_round();
  std::vector<uint32_t> keyframe_visible_ids(int kf_id);

  RunConfig cfg_;
  std::shared_ptr<const FrameSource> source_;
  GaussianMap map_;
  std::vector<Keyframe> keyframes_;
  std::vector<int> window_;
  RunSummary summary_;
  std::vector<RobustMaskRecord> robust_records_;
  int rounds_ = 0;
};

// Runs the pipeline and writes the run directory: config echo, TUM
// trajectories, keyframe event log, map dump, per-frame renders/references/
// masks, and a metrics JSON when ground truth exists. Returns the output
// directory.
std::filesystem::path run_slam(const RunConfig& cfg, std::shared_ptr<const FrameSource> source);

// Loads a dataset per the config (TUM layout + optional masks/est depth).
std::shared_ptr<const FrameSource> open_dataset(const RunConfig& cfg);

// Standalone file-based evaluation: ATE between two TUM trajectories plus
// masked PSNR/SSIM over a renders/references/masks directory triple.
// Returns the metrics JSON text (also written to output_json when given).
std::string evaluate_files(const std::filesystem::path& est_trajectory,
                           const std::filesystem::path& gt_trajectory,
                           const std::filesystem::path& renders_dir,
                           const std::filesystem::path& refs_dir,
                           const std::filesystem::path& masks_dir, double assoc_tol,
                           const std::string& config_echo,
                           const std::filesystem::path& output_json);

}  // namespace gsslam
