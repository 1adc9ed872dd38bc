#include "gsslam/projection.hpp"

#include <cmath>

#include "gsslam/errors.hpp"

namespace gsslam {

Eigen::Matrix<double, 2, 3> perspective_jacobian(const Eigen::Vector3d& x_cam,
                                                 const Intrinsics& K) {
  const double z = x_cam.z();
  const double inv_z = 1.0 / z;
  const double inv_z2 = inv_z * inv_z;
  Eigen::Matrix<double, 2, 3> J;
  J << K.fx * inv_z, 0.0, -K.fx * x_cam.x() * inv_z2,
       0.0, K.fy * inv_z, -K.fy * x_cam.y() * inv_z2;
  return J;
}

std::optional<ProjectedGaussian> project_gaussian(const Gaussian3D& g, const CameraPose& T,
                                                  const Intrinsics& K, double near_plane) {
  const Eigen::Vector3d x_cam = T.apply(g.mu);
  const double d = x_cam.z();
  if (!(d > near_plane)) return std::nullopt;

  ProjectedGaussian out;
  out.depth = d;
  out.mu2d = Eigen::Vector2d(K.fx * x_cam.x() / d + K.cx, K.fy * x_cam.y() / d + K.cy);

  const Eigen::Matrix<double, 2, 3> J = perspective_jacobian(x_cam, K);
  const Eigen::Matrix3d W = T.rotation_matrix();
  const Eigen::Matrix<double, 2, 3> JW = J * W;
  out.sigma2d = JW * g.covariance() * JW.transpose();
  return out;
}

Eigen::Vector3d unproject_pixel(const Eigen::Vector2d& p, double depth, const CameraPose& T,
                                const Intrinsics& K) {
  if (!std::isfinite(depth) || depth <= 0.0) {
    throw Error(ErrorKind::InvalidDepth, "unproject_pixel requires positive finite depth");
  }
  const Eigen::Vector3d x_cam((p.x() - K.cx) / K.fx * depth, (p.y() - K.cy) / K.fy * depth, depth);
  return T.inverse().apply(x_cam);
}

}  // namespace gsslam
