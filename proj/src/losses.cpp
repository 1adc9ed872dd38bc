#include "gsslam/losses.hpp"

#include <cmath>

namespace gsslam {

namespace {
inline double sign(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }
}  // namespace

FrameLoss masked_photometric_loss(const RenderResult& render, const Frame& frame,
                                  const MaskImage& mask, double alpha, ColorImage* dL_dcolor,
                                  GrayImage* dL_ddepth) {
  const int W = frame.rgb.width();
  const int H = frame.rgb.height();
  FrameLoss out;
  out.masked_pixels = count_set(mask);
  if (dL_dcolor) *dL_dcolor = ColorImage(W, H, Eigen::Vector3d::Zero());
  if (dL_ddepth) *dL_ddepth = GrayImage(W, H, 0.0);
  if (out.masked_pixels == 0) return out;

  const double inv_n = 1.0 / static_cast<double>(out.masked_pixels);
  double color_sum = 0.0;
  double depth_sum = 0.0;
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      if (!mask(x, y)) continue;
      const Eigen::Vector3d diff = render.color(x, y) - frame.rgb(x, y);
      color_sum += diff.cwiseAbs().sum() / 3.0;
      if (dL_dcolor) {
        (*dL_dcolor)(x, y) = Eigen::Vector3d(sign(diff.x()), sign(diff.y()), sign(diff.z())) *
                             (alpha * inv_n / 3.0);
      }
      const double d_ref = frame.depth(x, y);
      if (d_ref > 0.0) {
        const double d_diff = render.depth(x, y) - d_ref;
        depth_sum += std::abs(d_diff);
        if (dL_ddepth) (*dL_ddepth)(x, y) = sign(d_diff) * ((1.0 - alpha) * inv_n);
      }
    }
  }
  out.color = color_sum * inv_n;
  out.depth = depth_sum * inv_n;
  out.total = alpha * out.color + (1.0 - alpha) * out.depth;
  return out;
}

GrayImage color_residual(const ColorImage& rendered, const ColorImage& reference) {
  GrayImage out(rendered.width(), rendered.height(), 0.0);
  for (size_t i = 0; i < out.size(); ++i) {
    const double r = (rendered[i] - reference[i]).cwiseAbs().sum() / 3.0;
    out[i] = std::min(1.0, r);
  }
  return out;
}

}  // namespace gsslam
