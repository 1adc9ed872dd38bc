#pragma once

#include <span>

#include "gsslam/frame.hpp"
#include "gsslam/pose.hpp"
#include "gsslam/rasterizer.hpp"

namespace gsslam {

struct TrackingConfig {
  double alpha = 0.9;          // color/depth loss weight
  double tau_opacity = 0.95;   // well-mapped threshold for the tracking mask
  double lr_rotation = 0.003;
  double lr_translation = 0.001;
  int max_iters = 100;
  double convergence_eps = 1e-5;
  int max_rejects = 10;        // consecutive rolled-back steps before giving up
};

enum class TrackStatus {
  Converged,     // step norm fell below convergence_eps
  MaxIters,
  Stalled,       // every trust level rejected; pose kept at last accepted
  Diverged,      // final masked loss above 2x the initial loss
  NoConstraint,  // tracking mask empty, nothing to optimize
};

struct TrackResult {
  CameraPose pose;
  double initial_loss = 0.0;
  double final_loss = 0.0;
  int iters = 0;
  TrackStatus status = TrackStatus::NoConstraint;
  std::vector<double> accepted_losses;  // loss after each accepted step
  RenderResult final_render;            // render at the returned pose
};

inline bool track_failed(TrackStatus s) {
  return s == TrackStatus::Diverged || s == TrackStatus::NoConstraint;
}

// mask(p) = static(p) AND rendered accumulated opacity(p) > tau_opacity.
MaskImage build_tracking_mask(std::span<const Gaussian3D> map, const CameraPose& T,
                              const Intrinsics& K, const MaskImage& static_mask,
                              double tau_opacity, const RenderConfig& render_cfg = {});
MaskImage tracking_mask_from_render(const RenderResult& render, const MaskImage& static_mask,
                                    double tau_opacity);

// Minimizes the masked photometric+depth loss over a left-multiplied pose
// twist with Adam (separate rotation/translation rates). The mask is
// rebuilt at every evaluated pose; steps that increase the loss are rolled
// back, so the accepted-loss sequence is non-increasing.
TrackResult track_frame(std::span<const Gaussian3D> map, const Frame& frame,
                        const CameraPose& T_init, const Intrinsics& K,
                        const TrackingConfig& cfg, const RenderConfig& render_cfg = {},
                        uint64_t map_version = 0);

}  // namespace gsslam
