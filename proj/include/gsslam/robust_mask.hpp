#pragma once

#include <vector>

#include "gsslam/image.hpp"

namespace gsslam {

// Binned photometric-residual counts over [0,1]. Bin masses are reals so
// the exponential decay of update_histogram keeps exact fractional mass.
struct ResidualHistogram {
  explicit ResidualHistogram(int n_bins = 256) : bins(static_cast<size_t>(n_bins), 0.0) {}

  std::vector<double> bins;
  bool initialized = false;

  int n_bins() const { return static_cast<int>(bins.size()); }
  double total() const;
  int bin_for(double residual) const;
  double upper_edge(int bin) const { return static_cast<double>(bin + 1) / n_bins(); }
};

struct RobustConfig {
  double tau_robust = 0.9;
  int kernel_size = 7;
  double gamma = 0.3;
  int n_bins = 256;
};

// h_t = (1-gamma) * h_{t-1} + hist(residuals on valid pixels); the first
// call replaces the histogram outright. The new term is deliberately
// unweighted: the percentile threshold is invariant to total mass.
void update_histogram(ResidualHistogram& h, const GrayImage& residuals, const MaskImage& valid,
                      double gamma);

// Smallest bin upper edge whose cumulative mass reaches tau_robust of the
// total. Throws Error(EmptyHistogram) when the histogram has no mass.
double compute_threshold(const ResidualHistogram& h, double tau_robust);

// 1{ boxfilter(1{residual > epsilon}, kernel_size) > 0.5 } with zero-padded
// borders. Returned mask is 1 = outlier.
MaskImage build_robust_mask(const GrayImage& residuals, double epsilon, int kernel_size);

}  // namespace gsslam
