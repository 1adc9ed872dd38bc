#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <cmath>

namespace gsslam {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
inline double logit(double p) { return std::log(p / (1.0 - p)); }

// One anisotropic splat. Opacity and scales are reparameterized so that
// o in (0,1) and exp(log_scale) > 0 hold by construction; the orientation
// quaternion is stored raw (w,x,y,z) and normalized on use, which keeps
// gradients w.r.t. all four components well defined.
struct Gaussian3D {
  Eigen::Vector3d mu = Eigen::Vector3d::Zero();         // world position, meters
  Eigen::Vector3d log_scale = Eigen::Vector3d::Zero();  // per-axis log standard deviation
  Eigen::Vector4d q = Eigen::Vector4d(1, 0, 0, 0);      // orientation (w,x,y,z)
  double opacity_logit = 0.0;
  Eigen::Vector3d color = Eigen::Vector3d::Zero();      // RGB in [0,1]
  int origin_kf_id = 0;                                 // immutable after insertion

  double opacity() const { return sigmoid(opacity_logit); }
  Eigen::Vector3d scales() const { return log_scale.array().exp(); }

  Eigen::Matrix3d rotation() const {
    const Eigen::Vector4d qn = q / q.norm();
    return Eigen::Quaterniond(qn[0], qn[1], qn[2], qn[3]).toRotationMatrix();
  }

  // Sigma = R * diag(exp(2*log_scale)) * R^T
  Eigen::Matrix3d covariance() const {
    const Eigen::Matrix3d R = rotation();
    const Eigen::Vector3d s2 = (2.0 * log_scale).array().exp();
    return R * s2.asDiagonal() * R.transpose();
  }

  bool is_finite() const {
    return mu.allFinite() && log_scale.allFinite() && q.allFinite() &&
           std::isfinite(opacity_logit) && color.allFinite() && q.squaredNorm() > 1e-12;
  }
};

}  // namespace gsslam
