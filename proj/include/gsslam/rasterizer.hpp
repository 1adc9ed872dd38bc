#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <span>
#include <vector>

#include "gsslam/gaussian.hpp"
#include "gsslam/image.hpp"
#include "gsslam/pose.hpp"
#include "gsslam/projection.hpp"

namespace gsslam {

struct RenderConfig {
  double near_plane = kNearPlane;
  double covariance_reg = 0.3;      // pixel^2 added to sigma2d before inversion
  double support_sigmas = 3.0;      // splat bounding box half-extent, marginal sigmas
  double min_power = -12.5;         // contributions with log-weight below this are culled
  double max_weight = 0.9999;       // per-splat weight clamp
  double min_transmittance = 1e-4;  // front-to-back early stop
  int threads = 1;
};

// Screen-space splat retained for the backward pass.
struct Splat {
  uint32_t index;           // position in the rendered map
  Eigen::Vector2d mu2d;
  Eigen::Vector3d conic;    // (a,b,c) of the regularized inverse 2D covariance
  Eigen::Vector3d x_cam;    // camera-frame mean; depth = z
  double opacity;
  int x0, x1, y0, y1;       // inclusive pixel bounds of the support box
};

// Per-pixel compositing record: weight g_i(p) and the transmittance
// accumulated in front of the contributor.
struct Contribution {
  uint32_t splat;   // index into RenderResult::splats
  double weight;
  double transmittance;
};

struct RenderResult {
  ColorImage color;
  GrayImage depth;
  GrayImage opacity;

  // Saved compositing state (forward order, early-terminated prefix only).
  std::vector<Splat> splats;
  std::vector<Contribution> contribs;
  std::vector<uint32_t> pixel_offset;  // size W*H+1, CSR ranges into contribs

  uint64_t map_version = 0;
  size_t map_size = 0;

  // Map indices contributing at least min_weight to some composited pixel.
  // Returned sorted ascending.
  std::vector<uint32_t> contributing_indices(double min_weight) const;
};

struct MapGradients {
  std::vector<Eigen::Vector3d> mu;
  std::vector<Eigen::Vector3d> log_scale;
  std::vector<Eigen::Vector4d> q;
  std::vector<double> opacity_logit;
  std::vector<Eigen::Vector3d> color;
  Twist pose;

  void resize(size_t n);
  void set_zero();
  void accumulate(const MapGradients& other);

  // Mean screen-space positional gradient magnitudes drive densification.
  std::vector<double> mu2d_norm;
};

// Front-to-back alpha compositing of the map into color, depth, and
// accumulated opacity. Contributors at each pixel are depth-sorted with
// index tie-breaks; compositing stops once transmittance falls below
// cfg.min_transmittance. Empty maps yield all-zero output.
RenderResult render_frame(std::span<const Gaussian3D> map, const CameraPose& T,
                          const Intrinsics& K, const RenderConfig& cfg = {},
                          uint64_t map_version = 0);

// Analytic gradients of the compositing equations w.r.t. every Gaussian
// parameter group and the camera pose (left-multiplied twist convention:
// T <- se3_exp(xi) * T). Throws Error(StaleContext) if map_version or map
// size changed since the forward pass that produced ctx.
MapGradients render_backward(const RenderResult& ctx, std::span<const Gaussian3D> map,
                             const CameraPose& T, const Intrinsics& K,
                             const ColorImage& dL_dcolor, const GrayImage& dL_ddepth,
                             const GrayImage& dL_dopacity, const RenderConfig& cfg = {},
                             uint64_t map_version = 0);

// Weight of a projected splat at a pixel: o * exp(-1/2 * d^T conic d),
// clamped to [0, max_weight]. conic must come from the regularized 2D
// covariance.
double eval_splat_weight(const Eigen::Vector2d& mu2d, const Eigen::Vector3d& conic,
                         double opacity, const Eigen::Vector2d& p,
                         double max_weight = 0.9999);

// (a,b,c) of the inverse of sigma2d + reg*I.
Eigen::Vector3d regularized_conic(const Eigen::Matrix2d& sigma2d, double reg);

}  // namespace gsslam
