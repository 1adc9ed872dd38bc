#include "gsslam/keyframing.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace gsslam {

double covisibility_iou(const std::vector<uint32_t>& ids_a, const std::vector<uint32_t>& ids_b) {
  if (ids_a.empty() && ids_b.empty()) return 1.0;
  size_t inter = 0;
  size_t i = 0, j = 0;
  while (i < ids_a.size() && j < ids_b.size()) {
    if (ids_a[i] == ids_b[j]) {
      ++inter;
      ++i;
      ++j;
    } else if (ids_a[i] < ids_b[j]) {
      ++i;
    } else {
      ++j;
    }
  }
  const size_t uni = ids_a.size() + ids_b.size() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

bool should_insert_keyframe(const std::vector<uint32_t>& current_ids,
                            const std::vector<uint32_t>& last_kf_ids, const CameraPose& T_rel,
                            const WindowConfig& cfg) {
  if (covisibility_iou(current_ids, last_kf_ids) < cfg.sigma_iou) return true;
  if (T_rel.translation().norm() > cfg.trans_thresh) return true;
  const double rot_deg = rotation_angle(T_rel) * 180.0 / M_PI;
  return rot_deg > cfg.rot_thresh_deg;
}

std::vector<int> maintain_window(std::vector<int>& window, int new_kf_id,
                                 const std::function<std::vector<uint32_t>(int)>& visible_ids_of,
                                 const WindowConfig& cfg) {
  window.push_back(new_kf_id);
  std::vector<int> evicted;
  if (static_cast<int>(window.size()) <= cfg.max_window) return evicted;

  const int newest = new_kf_id;
  const int oldest = *std::min_element(window.begin(), window.end());
  const std::vector<uint32_t> newest_ids = visible_ids_of(newest);

  // IoU against the newest, computed once per member.
  std::map<int, double> iou;
  for (int kf : window) {
    if (kf == newest || kf == oldest) continue;
    iou[kf] = covisibility_iou(visible_ids_of(kf), newest_ids);
  }

  while (static_cast<int>(window.size()) > cfg.max_window) {
    int victim = -1;
    double best = -1.0;
    for (int kf : window) {
      if (kf == newest || kf == oldest) continue;
      const double v = iou[kf];
      if (v > best || (v == best && kf < victim)) {
        best = v;
        victim = kf;
      }
    }
    if (victim < 0) break;  // only protected members left
    window.erase(std::find(window.begin(), window.end(), victim));
    iou.erase(victim);
    evicted.push_back(victim);
  }
  return evicted;
}

std::vector<int> loop_aware_insert(std::vector<int>& window,
                                   const std::vector<uint32_t>& visible,
                                   const GaussianMap& map, const WindowConfig& cfg) {
  std::vector<int> inserted;
  if (visible.empty()) return inserted;

  std::map<int, int> tally;
  for (uint32_t idx : visible) tally[map.gaussians()[idx].origin_kf_id]++;

  const double threshold = cfg.loop_tally_fraction * static_cast<double>(visible.size());
  std::vector<std::pair<int, int>> candidates;  // (tally, kf_id)
  for (const auto& [kf, count] : tally) {
    if (static_cast<double>(count) <= threshold) continue;
    if (std::find(window.begin(), window.end(), kf) != window.end()) continue;
    candidates.emplace_back(count, kf);
  }
  // Highest tally first; ties to the lower kf_id.
  std::sort(candidates.begin(), candidates.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });

  for (const auto& [count, kf] : candidates) {
    if (static_cast<int>(inserted.size()) >= cfg.max_loop_kf) break;
    window.push_back(kf);
    inserted.push_back(kf);
  }
  return inserted;
}

void KeyframeEventLog::log_insert(int kf_id, int frame_index, double iou,
                                  const std::string& reason) {
  std::ostringstream s;
  s << "INSERT kf=" << kf_id << " frame=" << frame_index << " iou=" << iou
    << " reason=" << reason;
  lines_.push_back(s.str());
}

void KeyframeEventLog::log_evict(int kf_id, double iou_to_newest) {
  std::ostringstream s;
  s << "EVICT kf=" << kf_id << " iou=" << iou_to_newest;
  lines_.push_back(s.str());
}

void KeyframeEventLog::log_loop(int kf_id, double tally_fraction) {
  std::ostringstream s;
  s << "LOOP kf=" << kf_id << " tally=" << tally_fraction;
  lines_.push_back(s.str());
}

void KeyframeEventLog::write(const std::filesystem::path& path) const {
  std::ofstream f(path);
  for (const std::string& line : lines_) f << line << "\n";
}

}  // namespace gsslam
