#pragma once

#include <span>
#include <vector>

#include "gsslam/gaussian_map.hpp"
#include "gsslam/keyframing.hpp"
#include "gsslam/robust_mask.hpp"

namespace gsslam {

struct MapperConfig {
  double alpha = 0.9;
  double lambda_iso = 0.1;
  int iters_per_round = 30;
  // Per-group learning rates; position is scaled by the scene extent.
  double lr_mu = 1.6e-4;
  double lr_color = 2.5e-3;
  double lr_opacity = 5e-2;
  double lr_scale = 5e-3;
  double lr_quat = 1e-3;
  double lr_rotation = 0.003;     // keyframe pose
  double lr_translation = 0.001;
  bool robust_mask_enabled = true;
  int fixed_kf_id = 0;            // gauge fix: this pose never moves
};

// L1 anisotropy penalty: sum_i || s_i - mean(s_i) * 1 ||_1 with
// s_i = exp(log_scale_i), over the listed Gaussians.
double isotropic_loss(std::span<const Gaussian3D> map, const std::vector<uint32_t>& active);

// Gradient w.r.t. log_scale of one Gaussian's isotropy term.
Eigen::Vector3d isotropic_loss_grad(const Gaussian3D& g);

struct LossTraceRow {
  int iteration = 0;
  double total = 0.0;
  double color = 0.0;
  double depth = 0.0;
  double iso = 0.0;
};

struct WindowOptResult {
  std::vector<LossTraceRow> trace;
  MapRenderStats stats;                   // densification statistics for the round
  std::vector<MaskImage> robust_union;    // per window slot, union over iterations
  int pruned_corrupt = 0;
};

// Joint refinement of the map and the window keyframe poses under the
// combined segmentation (x) (1 - robust) mask with isotropic
// regularization. Each iteration renders every window keyframe, refreshes
// that keyframe's residual histogram and robust mask, and applies one Adam
// step to all Gaussian parameters and all window poses except the gauge
// fixed keyframe. Throws Error(MapCorrupted) if non-finite parameters
// survive one prune-and-retry.
WindowOptResult window_optimize(GaussianMap& map, std::vector<Keyframe*>& window,
                                const Intrinsics& K, const MapperConfig& cfg,
                                const RobustConfig& robust_cfg,
                                const RenderConfig& render_cfg = {});

// First-frame map initialization: optimizes Gaussian parameters only, pose
// held fixed, masked by the segmentation alone.
std::vector<LossTraceRow> init_optimize(GaussianMap& map, const Frame& frame,
                                        const CameraPose& pose, const Intrinsics& K,
                                        int iterations, const MapperConfig& cfg,
                                        const RenderConfig& render_cfg = {});

}  // namespace gsslam
