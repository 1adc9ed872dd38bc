#pragma once

#include "gsslam/frame.hpp"
#include "gsslam/image.hpp"
#include "gsslam/rasterizer.hpp"

namespace gsslam {

struct FrameLoss {
  double total = 0.0;
  double color = 0.0;
  double depth = 0.0;
  size_t masked_pixels = 0;
};

// Masked photometric + depth objective shared by tracking, initialization,
// and window optimization:
//   mean over masked pixels of  alpha * L1_color + (1-alpha) * L1_depth
// The color residual is the 3-channel mean absolute difference; depth
// residuals are skipped wherever the sensor depth is invalid (<= 0). When
// the gradient outputs are non-null they receive dL/d(rendered color) and
// dL/d(rendered depth); pixels outside the mask contribute exactly zero.
FrameLoss masked_photometric_loss(const RenderResult& render, const Frame& frame,
                                  const MaskImage& mask, double alpha,
                                  ColorImage* dL_dcolor = nullptr,
                                  GrayImage* dL_ddepth = nullptr);

// Per-pixel 3-channel mean absolute color residual, clamped to [0,1].
GrayImage color_residual(const ColorImage& rendered, const ColorImage& reference);

}  // namespace gsslam
