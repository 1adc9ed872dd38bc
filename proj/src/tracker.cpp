#include "gsslam/tracker.hpp"

#include <array>
#include <cmath>

#include "gsslam/adam.hpp"
#include "gsslam/losses.hpp"

namespace gsslam {

MaskImage tracking_mask_from_render(const RenderResult& render, const MaskImage& static_mask,
                                    double tau_opacity) {
  MaskImage mask(static_mask.width(), static_mask.height(), 0);
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      mask(x, y) = (static_mask(x, y) && render.opacity(x, y) > tau_opacity) ? 1 : 0;
    }
  }
  return mask;
}

MaskImage build_tracking_mask(std::span<const Gaussian3D> map, const CameraPose& T,
                              const Intrinsics& K, const MaskImage& static_mask,
                              double tau_opacity, const RenderConfig& render_cfg) {
  const RenderResult r = render_frame(map, T, K, render_cfg);
  return tracking_mask_from_render(r, static_mask, tau_opacity);
}

namespace {

struct Evaluation {
  RenderResult render;
  MaskImage mask;
  FrameLoss loss;
};

Evaluation evaluate(std::span<const Gaussian3D> map, const Frame& frame, const CameraPose& T,
                    const Intrinsics& K, const TrackingConfig& cfg,
                    const RenderConfig& render_cfg, uint64_t map_version) {
  Evaluation e;
  e.render = render_frame(map, T, K, render_cfg, map_version);
  e.mask = tracking_mask_from_render(e.render, frame.static_mask, cfg.tau_opacity);
  e.loss = masked_photometric_loss(e.render, frame, e.mask, cfg.alpha);
  return e;
}

}  // namespace

TrackResult track_frame(std::span<const Gaussian3D> map, const Frame& frame,
                        const CameraPose& T_init, const Intrinsics& K,
                        const TrackingConfig& cfg, const RenderConfig& render_cfg,
                        uint64_t map_version) {
  TrackResult out;
  out.pose = T_init;

  Evaluation cur = evaluate(map, frame, T_init, K, cfg, render_cfg, map_version);
  out.initial_loss = cur.loss.total;
  out.final_loss = cur.loss.total;
  if (cur.loss.masked_pixels == 0) {
    out.status = TrackStatus::NoConstraint;
    out.final_render = std::move(cur.render);
    return out;
  }

  Adam adam(6);
  std::array<double, 6> lr_base{};
  for (int i = 0; i < 3; ++i) {
    lr_base[static_cast<size_t>(i)] = cfg.lr_rotation;
    lr_base[static_cast<size_t>(i) + 3] = cfg.lr_translation;
  }

  out.status = TrackStatus::MaxIters;
  double trust = 1.0;
  int rejects_in_row = 0;
  for (int it = 0; it < cfg.max_iters; ++it) {
    ColorImage dC;
    GrayImage dD;
    masked_photometric_loss(cur.render, frame, cur.mask, cfg.alpha, &dC, &dD);
    GrayImage dO(K.width, K.height, 0.0);
    const MapGradients g =
        render_backward(cur.render, map, out.pose, K, dC, dD, dO, render_cfg, map_version);

    std::array<double, 6> grad{g.pose.omega.x(), g.pose.omega.y(), g.pose.omega.z(),
                               g.pose.v.x(),     g.pose.v.y(),     g.pose.v.z()};
    std::array<double, 6> lr = lr_base;
    for (double& l : lr) l *= trust;
    std::array<double, 6> delta{};
    Adam adam_backup = adam;
    adam.compute_step(grad, lr, delta);

    const Twist step(Eigen::Vector3d(delta[0], delta[1], delta[2]),
                     Eigen::Vector3d(delta[3], delta[4], delta[5]));
    const CameraPose candidate = se3_exp(step) * out.pose;
    Evaluation next = evaluate(map, frame, candidate, K, cfg, render_cfg, map_version);

    ++out.iters;
    const bool acceptable = next.loss.masked_pixels > 0 && next.loss.total <= cur.loss.total;
    if (acceptable) {
      out.pose = candidate;
      cur = std::move(next);
      out.accepted_losses.push_back(cur.loss.total);
      trust = std::min(1.0, trust * 2.0);
      rejects_in_row = 0;
      if (step.norm() < cfg.convergence_eps) {
        out.status = TrackStatus::Converged;
        break;
      }
    } else {
      adam = adam_backup;
      trust *= 0.5;
      if (++rejects_in_row > cfg.max_rejects) {
        out.status = TrackStatus::Stalled;
        break;
      }
    }
  }

  out.final_loss = cur.loss.total;
  if (out.final_loss > 2.0 * out.initial_loss) out.status = TrackStatus::Diverged;
  out.final_render = std::move(cur.render);
  return out;
}

}  // namespace gsslam
