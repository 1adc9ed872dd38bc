#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "gsslam/frame.hpp"
#include "gsslam/gaussian_map.hpp"
#include "gsslam/pose.hpp"
#include "gsslam/robust_mask.hpp"

namespace gsslam {

struct Keyframe {
  int kf_id = 0;
  int frame_index = 0;  // position in the input sequence
  CameraPose pose;      // optimizable while the keyframe sits in the window
  std::shared_ptr<const Frame> frame;
  ResidualHistogram histogram;
};

struct WindowConfig {
  double sigma_iou = 0.9;
  int max_window = 8;
  double trans_thresh = 0.1;   // meters; pipeline scales by median scene depth
  double rot_thresh_deg = 10.0;
  int max_loop_kf = 2;
  double loop_tally_fraction = 0.05;  // of the visible count
};

// |a intersect b| / |a union b| on sorted index sets; 1 when both empty.
double covisibility_iou(const std::vector<uint32_t>& ids_a, const std::vector<uint32_t>& ids_b);

// Registration rule: covisibility dropped below sigma_iou, or the relative
// pose moved beyond the translation/rotation thresholds.
bool should_insert_keyframe(const std::vector<uint32_t>& current_ids,
                            const std::vector<uint32_t>& last_kf_ids, const CameraPose& T_rel,
                            const WindowConfig& cfg);

// Appends new_kf_id and evicts the most redundant members (highest IoU to
// the newest, ties to the lowest kf_id) until the window fits. The newest
// and the oldest member survive every call. visible_ids_of provides the
// current visibility set of a window keyframe.
std::vector<int> maintain_window(std::vector<int>& window, int new_kf_id,
                                 const std::function<std::vector<uint32_t>(int)>& visible_ids_of,
                                 const WindowConfig& cfg);

// Tallies origin keyframe IDs over the currently visible Gaussians and
// re-inserts up to max_loop_kf past keyframes whose share of the visible
// count exceeds loop_tally_fraction. Returns the inserted IDs.
std::vector<int> loop_aware_insert(std::vector<int>& window,
                                   const std::vector<uint32_t>& visible,
                                   const GaussianMap& map, const WindowConfig& cfg);

// One line per keyframe event; written alongside run outputs.
class KeyframeEventLog {
 public:
  void log_insert(int kf_id, int frame_index, double iou, const std::string& reason);
  void log_evict(int kf_id, double iou_to_newest);
  void log_loop(int kf_id, double tally_fraction);
  const std::vector<std::string>& lines() const { return lines_; }
  void write(const std::filesystem::path& path) const;

 private:
  std::vector<std::string> lines_;
};

}  // namespace gsslam
