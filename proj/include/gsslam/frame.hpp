#pragma once

#include "gsslam/image.hpp"

namespace gsslam {

// One RGB-D observation. static_mask is 1 where the segmentation labels
// the pixel static; depth uses 0 for invalid. est_depth is an optional
// relative depth map used only for first-frame hole filling.
struct Frame {
  double timestamp = 0.0;
  ColorImage rgb;
  GrayImage depth;
  MaskImage static_mask;
  GrayImage est_depth;

  bool has_est_depth() const { return !est_depth.empty(); }
};

}  // namespace gsslam
