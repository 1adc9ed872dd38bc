#include "gsslam/mapper.hpp"

#include <algorithm>
#include <cmath>

#include "gsslam/adam.hpp"
#include "gsslam/errors.hpp"
#include "gsslam/losses.hpp"

namespace gsslam {

double isotropic_loss(std::span<const Gaussian3D> map, const std::vector<uint32_t>& active) {
  double loss = 0.0;
  for (uint32_t idx : active) {
    const Eigen::Vector3d s = map[idx].scales();
    const double mean = s.mean();
    loss += (s.array() - mean).abs().sum();
  }
  return loss;
}

Eigen::Vector3d isotropic_loss_grad(const Gaussian3D& g) {
  const Eigen::Vector3d s = g.scales();
  const double mean = s.mean();
  Eigen::Vector3d sgn;
  for (int j = 0; j < 3; ++j) {
    const double d = s[j] - mean;
    sgn[j] = d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0);
  }
  const double sgn_sum = sgn.sum();
  Eigen::Vector3d grad;
  for (int j = 0; j < 3; ++j) {
    grad[j] = (sgn[j] - sgn_sum / 3.0) * s[j];  // chain through s = exp(log_scale)
  }
  return grad;
}

namespace {

constexpr int kParamsPerGaussian = 14;  // mu(3) scale(3) q(4) opacity(1) color(3)

void gather_params(const std::vector<Gaussian3D>& gs, std::vector<double>& flat) {
  flat.resize(gs.size() * kParamsPerGaussian);
  size_t k = 0;
  for (const Gaussian3D& g : gs) {
    for (int i = 0; i < 3; ++i) flat[k++] = g.mu[i];
    for (int i = 0; i < 3; ++i) flat[k++] = g.log_scale[i];
    for (int i = 0; i < 4; ++i) flat[k++] = g.q[i];
    flat[k++] = g.opacity_logit;
    for (int i = 0; i < 3; ++i) flat[k++] = g.color[i];
  }
}

void scatter_params(const std::vector<double>& flat, std::vector<Gaussian3D>& gs) {
  size_t k = 0;
  for (Gaussian3D& g : gs) {
    for (int i = 0; i < 3; ++i) g.mu[i] = flat[k++];
    for (int i = 0; i < 3; ++i) g.log_scale[i] = flat[k++];
    for (int i = 0; i < 4; ++i) g.q[i] = flat[k++];
    g.opacity_logit = flat[k++];
    for (int i = 0; i < 3; ++i) g.color[i] = flat[k++];
  }
}

void gather_grads(const MapGradients& g, std::vector<double>& flat) {
  const size_t n = g.mu.size();
  flat.resize(n * kParamsPerGaussian);
  size_t k = 0;
  for (size_t i = 0; i < n; ++i) {
    for (int j = 0; j < 3; ++j) flat[k++] = g.mu[i][j];
    for (int j = 0; j < 3; ++j) flat[k++] = g.log_scale[i][j];
    for (int j = 0; j < 4; ++j) flat[k++] = g.q[i][j];
    flat[k++] = g.opacity_logit[i];
    for (int j = 0; j < 3; ++j) flat[k++] = g.color[i][j];
  }
}

std::vector<double> per_coord_lr(size_t n, const MapperConfig& cfg, double extent) {
  std::vector<double> lr(n * kParamsPerGaussian);
  size_t k = 0;
  for (size_t i = 0; i < n; ++i) {
    for (int j = 0; j < 3; ++j) lr[k++] = cfg.lr_mu * extent;
    for (int j = 0; j < 3; ++j) lr[k++] = cfg.lr_scale;
    for (int j = 0; j < 4; ++j) lr[k++] = cfg.lr_quat;
    lr[k++] = cfg.lr_opacity;
    for (int j = 0; j < 3; ++j) lr[k++] = cfg.lr_color;
  }
  return lr;
}

std::vector<size_t> finite_violations(const std::vector<Gaussian3D>& gs) {
  std::vector<size_t> bad;
  for (size_t i = 0; i < gs.size(); ++i) {
    if (!gs[i].is_finite()) bad.push_back(i);
  }
  return bad;
}

}  // namespace

WindowOptResult window_optimize(GaussianMap& map, std::vector<Keyframe*>& window,
                                const Intrinsics& K, const MapperConfig& cfg,
                                const RobustConfig& robust_cfg,
                                const RenderConfig& render_cfg) {
  WindowOptResult result;
  if (window.empty() || map.empty()) return result;

  const double extent = map.scene_extent();
  const size_t n_slots = window.size();
  result.stats.resize(map.size());
  result.robust_union.assign(n_slots, MaskImage(K.width, K.height, 0));

  Adam gaussian_adam(map.size() * kParamsPerGaussian);
  std::vector<double> gaussian_lr = per_coord_lr(map.size(), cfg, extent);
  std::vector<Adam> pose_adam(n_slots, Adam(6));
  std::array<double, 6> pose_lr{cfg.lr_rotation,    cfg.lr_rotation,    cfg.lr_rotation,
                                cfg.lr_translation, cfg.lr_translation, cfg.lr_translation};

  std::vector<double> flat_params, flat_grads, flat_step;
  GrayImage zero_dO(K.width, K.height, 0.0);

  int iter = 0;
  int retries_left = 1;
  while (iter < cfg.iters_per_round) {
    const size_t n = map.size();
    MapGradients total;
    total.resize(n);
    std::vector<Twist> pose_grads(n_slots);
    std::vector<uint8_t> active(n, 0);

    LossTraceRow row;
    row.iteration = iter;
    for (size_t slot = 0; slot < n_slots; ++slot) {
      Keyframe& kf = *window[slot];
      const Frame& frame = *kf.frame;
      const RenderResult render =
          render_frame(map.span(), kf.pose, K, render_cfg, map.version());

      MaskImage mask = frame.static_mask;
      if (cfg.robust_mask_enabled) {
        const GrayImage residual = color_residual(render.color, frame.rgb);
        update_histogram(kf.histogram, residual, frame.static_mask, robust_cfg.gamma);
        const double eps = compute_threshold(kf.histogram, robust_cfg.tau_robust);
        const MaskImage robust = build_robust_mask(residual, eps, robust_cfg.kernel_size);
        MaskImage& uni = result.robust_union[slot];
        for (size_t i = 0; i < mask.size(); ++i) {
          if (robust[i]) {
            mask[i] = 0;
            uni[i] = 1;
          }
        }
      }

      ColorImage dC;
      GrayImage dD;
      const FrameLoss loss = masked_photometric_loss(render, frame, mask, cfg.alpha, &dC, &dD);
      row.color += loss.color;
      row.depth += loss.depth;
      row.total += loss.total;
      if (loss.masked_pixels == 0) continue;

      const MapGradients g = render_backward(render, map.span(), kf.pose, K, dC, dD, zero_dO,
                                             render_cfg, map.version());
      total.accumulate(g);
      pose_grads[slot] = g.pose;

      for (const uint32_t idx : render.contributing_indices(0.0)) {
        active[idx] = 1;
        result.stats.kf_seen_bits[idx] |= 1u << slot;
        result.stats.obs_count[idx] += 1;
        result.stats.pos_grad_sum[idx] += g.mu2d_norm[idx];
      }
    }

    // Isotropic regularization over Gaussians touched this iteration.
    std::vector<uint32_t> active_ids;
    for (uint32_t i = 0; i < n; ++i) {
      if (active[i]) active_ids.push_back(i);
    }
    row.iso = isotropic_loss(map.span(), active_ids);
    row.total += cfg.lambda_iso * row.iso;
    for (uint32_t idx : active_ids) {
      total.log_scale[idx] += cfg.lambda_iso * isotropic_loss_grad(map.gaussians()[idx]);
    }
    result.trace.push_back(row);

    gather_params(map.gaussians(), flat_params);
    gather_grads(total, flat_grads);
    flat_step.resize(flat_params.size());
    gaussian_adam.compute_step(flat_grads, gaussian_lr, flat_step);
    for (size_t i = 0; i < flat_params.size(); ++i) flat_params[i] += flat_step[i];
    scatter_params(flat_params, map.mutate());

    for (size_t slot = 0; slot < n_slots; ++slot) {
      Keyframe& kf = *window[slot];
      if (kf.kf_id == cfg.fixed_kf_id) continue;
      std::array<double, 6> grad{pose_grads[slot].omega.x(), pose_grads[slot].omega.y(),
                                 pose_grads[slot].omega.z(), pose_grads[slot].v.x(),
                                 pose_grads[slot].v.y(),     pose_grads[slot].v.z()};
      std::array<double, 6> delta{};
      pose_adam[slot].compute_step(grad, pose_lr, delta);
      const Twist step(Eigen::Vector3d(delta[0], delta[1], delta[2]),
                       Eigen::Vector3d(delta[3], delta[4], delta[5]));
      kf.pose = se3_exp(step) * kf.pose;
    }

    const std::vector<size_t> bad = finite_violations(map.gaussians());
    if (!bad.empty()) {
      if (retries_left-- <= 0) {
        throw Error(ErrorKind::MapCorrupted,
                    "non-finite Gaussian parameters after prune-and-retry");
      }
      result.pruned_corrupt += static_cast<int>(bad.size());
      std::vector<uint8_t> drop(map.size(), 0);
      for (size_t i : bad) drop[i] = 1;
      std::vector<size_t> keep_flat;
      std::vector<size_t> keep_idx;
      for (size_t i = 0; i < map.size(); ++i) {
        if (drop[i]) continue;
        keep_idx.push_back(i);
        for (int j = 0; j < kParamsPerGaussian; ++j) {
          keep_flat.push_back(i * kParamsPerGaussian + static_cast<size_t>(j));
        }
      }
      map.remove_indices(bad);
      gaussian_adam.compact(keep_flat);
      gaussian_lr = per_coord_lr(map.size(), cfg, extent);
      MapRenderStats compacted;
      compacted.resize(keep_idx.size());
      for (size_t w = 0; w < keep_idx.size(); ++w) {
        compacted.pos_grad_sum[w] = result.stats.pos_grad_sum[keep_idx[w]];
        compacted.obs_count[w] = result.stats.obs_count[keep_idx[w]];
        compacted.kf_seen_bits[w] = result.stats.kf_seen_bits[keep_idx[w]];
      }
      result.stats = std::move(compacted);
      continue;  // retry this iteration on the pruned map
    }
    ++iter;
  }
  return result;
}

std::vector<LossTraceRow> init_optimize(GaussianMap& map, const Frame& frame,
                                        const CameraPose& pose, const Intrinsics& K,
                                        int iterations, const MapperConfig& cfg,
                                        const RenderConfig& render_cfg) {
  std::vector<LossTraceRow> trace;
  if (map.empty()) return trace;

  const double extent = map.scene_extent();
  Adam adam(map.size() * kParamsPerGaussian);
  const std::vector<double> lr = per_coord_lr(map.size(), cfg, extent);
  std::vector<double> flat_params, flat_grads, flat_step;
  GrayImage zero_dO(K.width, K.height, 0.0);

  for (int it = 0; it < iterations; ++it) {
    const RenderResult render = render_frame(map.span(), pose, K, render_cfg, map.version());
    ColorImage dC;
    GrayImage dD;
    const FrameLoss loss =
        masked_photometric_loss(render, frame, frame.static_mask, cfg.alpha, &dC, &dD);
    trace.push_back({it, loss.total, loss.color, loss.depth, 0.0});
    if (loss.masked_pixels == 0) break;

    const MapGradients g = render_backward(render, map.span(), pose, K, dC, dD, zero_dO,
                                           render_cfg, map.version());
    gather_params(map.gaussians(), flat_params);
    gather_grads(g, flat_grads);
    flat_step.resize(flat_params.size());
    adam.compute_step(flat_grads, lr, flat_step);
    for (size_t i = 0; i < flat_params.size(); ++i) flat_params[i] += flat_step[i];
    scatter_params(flat_params, map.mutate());
  }
  return trace;
}

}  // namespace gsslam
