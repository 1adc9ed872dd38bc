#include "gsslam/robust_mask.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "gsslam/errors.hpp"

namespace gsslam {

double ResidualHistogram::total() const {
  return std::accumulate(bins.begin(), bins.end(), 0.0);
}

int ResidualHistogram::bin_for(double residual) const {
  const double clamped = std::clamp(residual, 0.0, 1.0);
  return std::min(n_bins() - 1, static_cast<int>(clamped * n_bins()));
}

void update_histogram(ResidualHistogram& h, const GrayImage& residuals, const MaskImage& valid,
                      double gamma) {
  if (h.initialized) {
    for (double& b : h.bins) b *= (1.0 - gamma);
  } else {
    std::fill(h.bins.begin(), h.bins.end(), 0.0);
  }
  for (int y = 0; y < residuals.height(); ++y) {
    for (int x = 0; x < residuals.width(); ++x) {
      if (!valid(x, y)) continue;
      h.bins[static_cast<size_t>(h.bin_for(residuals(x, y)))] += 1.0;
    }
  }
  h.initialized = true;
}

double compute_threshold(const ResidualHistogram& h, double tau_robust) {
  const double total = h.total();
  if (total <= 0.0) {
    throw Error(ErrorKind::EmptyHistogram, "residual histogram has no mass");
  }
  const double target = tau_robust * total;
  double cumulative = 0.0;
  for (int i = 0; i < h.n_bins(); ++i) {
    cumulative += h.bins[static_cast<size_t>(i)];
    if (cumulative >= target) return h.upper_edge(i);
  }
  return 1.0;
}

MaskImage build_robust_mask(const GrayImage& residuals, double epsilon, int kernel_size) {
  const int W = residuals.width();
  const int H = residuals.height();
  const int r = kernel_size / 2;
  const double norm = 1.0 / (static_cast<double>(kernel_size) * kernel_size);

  // Summed-area table of the raw outlier indicator; zero padding falls out
  // of clamping the box to the image.
  std::vector<double> sat(static_cast<size_t>(W + 1) * (H + 1), 0.0);
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      const double raw = residuals(x, y) > epsilon ? 1.0 : 0.0;
      sat[static_cast<size_t>(y + 1) * (W + 1) + (x + 1)] =
          raw + sat[static_cast<size_t>(y) * (W + 1) + (x + 1)] +
          sat[static_cast<size_t>(y + 1) * (W + 1) + x] -
          sat[static_cast<size_t>(y) * (W + 1) + x];
    }
  }
  auto box_sum = [&](int x0, int y0, int x1, int y1) {  // inclusive, clamped
    x0 = std::max(x0, 0);
    y0 = std::max(y0, 0);
    x1 = std::min(x1, W - 1);
    y1 = std::min(y1, H - 1);
    return sat[static_cast<size_t>(y1 + 1) * (W + 1) + (x1 + 1)] -
           sat[static_cast<size_t>(y0) * (W + 1) + (x1 + 1)] -
           sat[static_cast<size_t>(y1 + 1) * (W + 1) + x0] +
           sat[static_cast<size_t>(y0) * (W + 1) + x0];
  };

  MaskImage mask(W, H, 0);
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      const double smoothed = box_sum(x - r, y - r, x + r, y + r) * norm;
      mask(x, y) = smoothed > 0.5 ? 1 : 0;
    }
  }
  return mask;
}

}  // namespace gsslam
