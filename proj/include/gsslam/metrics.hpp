#pragma once

#include <vector>

#include "gsslam/image.hpp"
#include "gsslam/pose.hpp"

namespace gsslam {

struct TimedPose {
  double timestamp = 0.0;
  CameraPose pose;  // world-to-camera
};

struct TrajectoryReport {
  double ate_rmse_cm = 0.0;
  double ate_std_cm = 0.0;
  int matched_pairs = 0;
  CameraPose alignment;  // rigid transform applied to the estimate
};

struct RenderReport {
  double psnr_db = 0.0;  // capped at 99 dB for identical content
  double ssim = 0.0;
  long evaluated_pixels = 0;
  bool degenerate = false;  // nothing left to compare (e.g. all-dynamic mask)
};

// Least-squares rigid alignment (no scale): returns (R,t) minimizing
// sum ||dst_i - (R * src_i + t)||^2.
CameraPose umeyama_rigid(const std::vector<Eigen::Vector3d>& src,
                         const std::vector<Eigen::Vector3d>& dst);

// Absolute trajectory error of camera centers after nearest-timestamp
// association (within assoc_tol seconds) and rigid alignment of the
// estimate onto the ground truth. Reported in centimeters. Throws
// Error(TooFewMatches) with fewer than 3 associated pairs.
TrajectoryReport ate(const std::vector<TimedPose>& estimated,
                     const std::vector<TimedPose>& ground_truth, double assoc_tol = 0.02);

// PSNR and channel-averaged SSIM after blacking out non-static pixels in
// both images (static_mask: 1 = static). PSNR is computed over all pixels
// with peak 1.0; SSIM uses an 11x11 Gaussian window (sigma 1.5), K1=0.01,
// K2=0.03, averaged over the valid interior.
RenderReport masked_image_metrics(const ColorImage& rendered, const ColorImage& reference,
                                  const MaskImage& static_mask);

}  // namespace gsslam
