#pragma once

#include <random>
#include <vector>

#include "gsslam/gaussian.hpp"
#include "gsslam/image.hpp"
#include "gsslam/pose.hpp"
#include "gsslam/rasterizer.hpp"

namespace gsslam::testing {

inline Intrinsics test_intrinsics(int w = 16, int h = 16, double f = 16.0) {
  Intrinsics K;
  K.fx = f;
  K.fy = f;
  K.cx = (w - 1) / 2.0;
  K.cy = (h - 1) / 2.0;
  K.width = w;
  K.height = h;
  return K;
}

// Random upstream gradient fields; combined with render outputs they give a
// scalar loss whose analytic gradient render_backward must reproduce.
struct UpstreamFields {
  ColorImage dC;
  GrayImage dD;
  GrayImage dO;
};

inline UpstreamFields random_upstream(int w, int h, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  UpstreamFields f;
  f.dC = ColorImage(w, h);
  f.dD = GrayImage(w, h);
  f.dO = GrayImage(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      f.dC(x, y) = Eigen::Vector3d(u(rng), u(rng), u(rng));
      f.dD(x, y) = u(rng);
      f.dO(x, y) = u(rng);
    }
  }
  return f;
}

inline double weighted_render_loss(std::span<const Gaussian3D> map, const CameraPose& T,
                                   const Intrinsics& K, const RenderConfig& cfg,
                                   const UpstreamFields& f) {
  const RenderResult r = render_frame(map, T, K, cfg);
  double loss = 0.0;
  for (int y = 0; y < K.height; ++y) {
    for (int x = 0; x < K.width; ++x) {
      loss += f.dC(x, y).dot(r.color(x, y)) + f.dD(x, y) * r.depth(x, y) +
              f.dO(x, y) * r.opacity(x, y);
    }
  }
  return loss;
}

// Scene of well-conditioned random Gaussians in front of the camera;
// opacities kept away from the weight clamp and the contribution cutoff.
inline std::vector<Gaussian3D> random_scene(size_t count, const Intrinsics& K,
                                            std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::uniform_real_distribution<double> sym(-1.0, 1.0);
  std::vector<Gaussian3D> out;
  for (size_t i = 0; i < count; ++i) {
    Gaussian3D g;
    const double depth = 1.0 + 2.0 * u01(rng);
    const double span_x = 0.8 * depth * K.width / (2.0 * K.fx);
    const double span_y = 0.8 * depth * K.height / (2.0 * K.fy);
    g.mu = Eigen::Vector3d(sym(rng) * span_x, sym(rng) * span_y, depth);
    g.log_scale = Eigen::Vector3d(std::log(0.05 + 0.1 * u01(rng)),
                                  std::log(0.05 + 0.1 * u01(rng)),
                                  std::log(0.05 + 0.1 * u01(rng)));
    Eigen::Vector4d q(1.0 + sym(rng), 0.4 * sym(rng), 0.4 * sym(rng), 0.4 * sym(rng));
    g.q = q;  // raw, renderer normalizes
    g.opacity_logit = 0.5 + 2.0 * u01(rng);
    g.color = Eigen::Vector3d(u01(rng), u01(rng), u01(rng));
    g.origin_kf_id = 0;
    out.push_back(g);
  }
  return out;
}

inline bool close_rel(double a, double b, double rel = 1e-3, double abs_floor = 1e-8) {
  const double diff = std::abs(a - b);
  if (diff < abs_floor) return true;
  return diff / std::max({std::abs(a), std::abs(b), 1e-30}) < rel;
}

}  // namespace gsslam::testing
