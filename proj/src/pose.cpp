#include "gsslam/pose.hpp"

#include <cmath>

namespace gsslam {

Eigen::Matrix3d skew(const Eigen::Vector3d& w) {
  Eigen::Matrix3d m;
  m << 0.0, -w.z(), w.y(), w.z(), 0.0, -w.x(), -w.y(), w.x(), 0.0;
  return m;
}

CameraPose se3_exp(const Twist& xi) {
  const double theta_sq = xi.omega.squaredNorm();
  const double theta = std::sqrt(theta_sq);

  Eigen::Quaterniond q;
  double v_coef1;  // (1 - cos t) / t^2
  double v_coef2;  // (t - sin t) / t^3
  if (theta < 1e-8) {
    q = Eigen::Quaterniond(1.0, 0.5 * xi.omega.x(), 0.5 * xi.omega.y(), 0.5 * xi.omega.z());
    q.normalize();
    v_coef1 = 0.5 - theta_sq / 24.0;
    v_coef2 = 1.0 / 6.0 - theta_sq / 120.0;
  } else {
    const Eigen::Vector3d axis = xi.omega / theta;
    q = Eigen::Quaterniond(Eigen::AngleAxisd(theta, axis));
    v_coef1 = (1.0 - std::cos(theta)) / theta_sq;
    v_coef2 = (theta - std::sin(theta)) / (theta_sq * theta);
  }

  const Eigen::Matrix3d omega_hat = skew(xi.omega);
  const Eigen::Matrix3d V =
      Eigen::Matrix3d::Identity() + v_coef1 * omega_hat + v_coef2 * omega_hat * omega_hat;
  return CameraPose(q, V * xi.v);
}

Twist se3_log(const CameraPose& pose) {
  Eigen::Quaterniond q = pose.rotation();
  if (q.w() < 0.0) q.coeffs() = -q.coeffs();

  const double vec_norm = q.vec().norm();
  const double theta = 2.0 * std::atan2(vec_norm, q.w());

  Eigen::Vector3d omega;
  if (vec_norm < 1e-12) {
    omega = 2.0 * q.vec();  // first-order inverse
  } else {
    omega = q.vec() * (theta / vec_norm);
  }

  const double theta_sq = theta * theta;
  const Eigen::Matrix3d omega_hat = skew(omega);
  double coef;  // 1/t^2 - (1 + cos t) / (2 t sin t)
  if (theta < 1e-5) {
    coef = 1.0 / 12.0 + theta_sq / 720.0;
  } else {
    coef = (1.0 - 0.5 * theta * std::sin(theta) / (1.0 - std::cos(theta))) / theta_sq;
  }
  const Eigen::Matrix3d V_inv =
      Eigen::Matrix3d::Identity() - 0.5 * omega_hat + coef * omega_hat * omega_hat;
  return Twist(omega, V_inv * pose.translation());
}

double rotation_angle(const CameraPose& pose) {
  Eigen::Quaterniond q = pose.rotation();
  const double w = std::min(1.0, std::abs(q.w()));
  return 2.0 * std::acos(w);
}

}  // namespace gsslam
