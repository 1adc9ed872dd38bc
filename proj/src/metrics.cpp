#include "gsslam/metrics.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "gsslam/errors.hpp"

namespace gsslam {

CameraPose umeyama_rigid(const std::vector<Eigen::Vector3d>& src,
                         const std::vector<Eigen::Vector3d>& dst) {
  const size_t n = src.size();
  Eigen::Vector3d mean_src = Eigen::Vector3d::Zero();
  Eigen::Vector3d mean_dst = Eigen::Vector3d::Zero();
  for (size_t i = 0; i < n; ++i) {
    mean_src += src[i];
    mean_dst += dst[i];
  }
  mean_src /= static_cast<double>(n);
  mean_dst /= static_cast<double>(n);

  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (size_t i = 0; i < n; ++i) {
    cov += (dst[i] - mean_dst) * (src[i] - mean_src).transpose();
  }
  cov /= static_cast<double>(n);

  Eigen::JacobiSVD<Eigen::Matrix3d> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d S = Eigen::Matrix3d::Identity();
  if (svd.matrixU().determinant() * svd.matrixV().determinant() < 0.0) S(2, 2) = -1.0;
  const Eigen::Matrix3d R = svd.matrixU() * S * svd.matrixV().transpose();
  const Eigen::Vector3d t = mean_dst - R * mean_src;
  return CameraPose(Eigen::Quaterniond(R), t);
}

TrajectoryReport ate(const std::vector<TimedPose>& estimated,
                     const std::vector<TimedPose>& ground_truth, double assoc_tol) {
  // Nearest-timestamp association; both inputs time-ordered.
  std::vector<Eigen::Vector3d> est_pts, gt_pts;
  size_t j = 0;
  for (const TimedPose& e : estimated) {
    while (j + 1 < ground_truth.size() &&
           std::abs(ground_truth[j + 1].timestamp - e.timestamp) <=
               std::abs(ground_truth[j].timestamp - e.timestamp)) {
      ++j;
    }
    if (ground_truth.empty()) break;
    if (std::abs(ground_truth[j].timestamp - e.timestamp) <= assoc_tol) {
      est_pts.push_back(e.pose.center());
      gt_pts.push_back(ground_truth[j].pose.center());
    }
  }
  if (est_pts.size() < 3) {
    throw Error(ErrorKind::TooFewMatches,
                "need at least 3 associated pose pairs, got " + std::to_string(est_pts.size()));
  }

  TrajectoryReport report;
  report.matched_pairs = static_cast<int>(est_pts.size());
  report.alignment = umeyama_rigid(est_pts, gt_pts);

  double sq_sum = 0.0;
  double err_sum = 0.0;
  std::vector<double> errors(est_pts.size());
  for (size_t i = 0; i < est_pts.size(); ++i) {
    const double err = (gt_pts[i] - report.alignment.apply(est_pts[i])).norm();
    errors[i] = err;
    sq_sum += err * err;
    err_sum += err;
  }
  const double inv_n = 1.0 / static_cast<double>(errors.size());
  const double rmse = std::sqrt(sq_sum * inv_n);
  const double mean = err_sum * inv_n;
  double var = 0.0;
  for (double e : errors) var += (e - mean) * (e - mean);
  report.ate_rmse_cm = rmse * 100.0;
  report.ate_std_cm = std::sqrt(var * inv_n) * 100.0;
  return report;
}

namespace {

// 1D Gaussian taps for the 11x11 SSIM window, sigma 1.5, normalized.
std::vector<double> ssim_kernel() {
  std::vector<double> k(11);
  double sum = 0.0;
  for (int i = 0; i < 11; ++i) {
    const double x = i - 5.0;
    k[static_cast<size_t>(i)] = std::exp(-x * x / (2.0 * 1.5 * 1.5));
    sum += k[static_cast<size_t>(i)];
  }
  for (double& v : k) v /= sum;
  return k;
}

double ssim_channel(const GrayImage& a, const GrayImage& b) {
  const int W = a.width();
  const int H = a.height();
  const std::vector<double> k = ssim_kernel();
  constexpr double C1 = 0.01 * 0.01;
  constexpr double C2 = 0.03 * 0.03;

  double total = 0.0;
  long count = 0;
  for (int y = 5; y < H - 5; ++y) {
    for (int x = 5; x < W - 5; ++x) {
      double mu_a = 0.0, mu_b = 0.0, aa = 0.0, bb = 0.0, ab = 0.0;
      for (int dy = -5; dy <= 5; ++dy) {
        for (int dx = -5; dx <= 5; ++dx) {
          const double w = k[static_cast<size_t>(dy + 5)] * k[static_cast<size_t>(dx + 5)];
          const double va = a(x + dx, y + dy);
          const double vb = b(x + dx, y + dy);
          mu_a += w * va;
          mu_b += w * vb;
          aa += w * va * va;
          bb += w * vb * vb;
          ab += w * va * vb;
        }
      }
      const double var_a = aa - mu_a * mu_a;
      const double var_b = bb - mu_b * mu_b;
      const double cov = ab - mu_a * mu_b;
      const double num = (2.0 * mu_a * mu_b + C1) * (2.0 * cov + C2);
      const double den = (mu_a * mu_a + mu_b * mu_b + C1) * (var_a + var_b + C2);
      total += num / den;
      ++count;
    }
  }
  return count > 0 ? total / static_cast<double>(count) : 1.0;
}

}  // namespace

RenderReport masked_image_metrics(const ColorImage& rendered, const ColorImage& reference,
                                  const MaskImage& static_mask) {
  const int W = rendered.width();
  const int H = rendered.height();
  RenderReport report;
  report.evaluated_pixels = static_cast<long>(count_set(static_mask));
  report.degenerate = report.evaluated_pixels == 0;

  // Dynamic pixels go black in both images before any comparison.
  ColorImage a = rendered;
  ColorImage b = reference;
  for (size_t i = 0; i < a.size(); ++i) {
    if (!static_mask[i]) {
      a[i].setZero();
      b[i].setZero();
    }
  }

  double mse = 0.0;
  for (size_t i = 0; i < a.size(); ++i) mse += (a[i] - b[i]).squaredNorm();
  mse /= static_cast<double>(a.size()) * 3.0;
  report.psnr_db = mse > 0.0 ? std::min(99.0, 10.0 * std::log10(1.0 / mse)) : 99.0;

  double ssim_sum = 0.0;
  for (int ch = 0; ch < 3; ++ch) {
    GrayImage ga(W, H), gb(W, H);
    for (size_t i = 0; i < a.size(); ++i) {
      ga[i] = a[i][ch];
      gb[i] = b[i][ch];
    }
    ssim_sum += ssim_channel(ga, gb);
  }
  report.ssim = ssim_sum / 3.0;
  return report;
}

}  // namespace gsslam
