#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "gsslam/frame.hpp"
#include "gsslam/gaussian.hpp"
#include "gsslam/rasterizer.hpp"

namespace gsslam {

// Owns the Gaussian collection. Every mutation goes through mutate() /
// add / remove_if_indexed so the version counter can invalidate render
// contexts taken before the change.
class GaussianMap {
 public:
  const std::vector<Gaussian3D>& gaussians() const { return gaussians_; }
  std::span<const Gaussian3D> span() const { return gaussians_; }
  size_t size() const { return gaussians_.size(); }
  bool empty() const { return gaussians_.empty(); }
  uint64_t version() const { return version_; }
  int next_kf_id() const { return next_kf_id_; }

  // Declares a keyframe ID as used; keeps origin_kf_id < next_kf_id.
  void register_keyframe_id(int kf_id) { next_kf_id_ = std::max(next_kf_id_, kf_id + 1); }

  std::vector<Gaussian3D>& mutate() {
    ++version_;
    return gaussians_;
  }

  void add(const Gaussian3D& g) { mutate().push_back(g); }

  // Removes the listed indices (must be sorted ascending); returns count.
  size_t remove_indices(const std::vector<size_t>& indices);

  // Midpoint of the position bounding box diagonal; densification scale
  // reference.
  double scene_extent() const;

 private:
  std::vector<Gaussian3D> gaussians_;
  uint64_t version_ = 0;
  int next_kf_id_ = 0;
};

struct DepthAlignment {
  double a = 1.0;
  double b = 0.0;
  GrayImage aligned;
};

// Closed-form least squares of a*d_est + b onto d_gt over valid pixels.
// Requires >= 100 valid pixels and a non-constant d_est on them; throws
// Error(DegenerateFit) otherwise. The aligned map is evaluated everywhere.
DepthAlignment align_depth(const GrayImage& d_est, const GrayImage& d_gt,
                           const MaskImage& valid);

enum class InsertMode { Dense, Sparse };

struct InsertConfig {
  int sparse_stride = 4;          // sparse mode samples a 1/stride^2 subgrid
  double covered_opacity = 0.95;  // sparse mode skips pixels already this opaque
  double initial_opacity = 0.5;
  double min_scale = 1e-4;        // meters, floor for the isotropic init scale
};

// Creates Gaussians by unprojecting sampled pixels with valid depth and a
// static mask. Initial scale is isotropic, median_static_depth / fx.
// Returns the number inserted; throws Error(EmptyFrame) if no pixel
// qualifies.
int insert_from_keyframe(GaussianMap& map, const Frame& frame, const CameraPose& T,
                         const Intrinsics& K, int kf_id, InsertMode mode,
                         const InsertConfig& cfg = {}, const RenderConfig& render_cfg = {});

// Accumulated per-Gaussian statistics from one backend round.
struct MapRenderStats {
  std::vector<double> pos_grad_sum;   // sum of screen-space |dL/dmu2d| over observations
  std::vector<int> obs_count;         // observations with nonzero visibility
  std::vector<uint32_t> kf_seen_bits; // bitmask over window slots that saw the Gaussian

  void resize(size_t n) {
    pos_grad_sum.assign(n, 0.0);
    obs_count.assign(n, 0);
    kf_seen_bits.assign(n, 0);
  }
  size_t size() const { return pos_grad_sum.size(); }
  int kf_seen_count(size_t i) const;
};

struct DensifyConfig {
  double prune_opacity = 0.05;
  int recent_kf_window = 3;    // insertion recency for the observation rule
  int min_observing_kfs = 3;   // window keyframes that must see a recent Gaussian
  double grad_threshold = 2e-4;
  double split_scale_fraction = 0.01;  // of scene extent
  double split_scale_shrink = 1.6;
};

struct PruneStats {
  int pruned = 0;
  int cloned = 0;
};

// Opacity pruning, the recent-insertion observation rule, and gradient
// driven clone/split. stats must be aligned with the map indexing.
PruneStats prune_and_densify(GaussianMap& map, const std::vector<int>& window_kf_ids,
                             const MapRenderStats& stats, const DensifyConfig& cfg = {});

// Indices of Gaussians contributing weight > 0.01 to at least one pixel
// before transmittance exhaustion.
std::vector<uint32_t> visible_ids(const GaussianMap& map, const CameraPose& T,
                                  const Intrinsics& K, const RenderConfig& cfg = {});

// Binary map dump plus human-readable summary (documented in README).
void save_map(const GaussianMap& map, const std::filesystem::path& bin_path,
              const std::filesystem::path& summary_path);
GaussianMap load_map(const std::filesystem::path& bin_path);

}  // namespace gsslam
