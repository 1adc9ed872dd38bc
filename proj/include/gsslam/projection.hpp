#pragma once

#include <Eigen/Core>
#include <optional>

#include "gsslam/gaussian.hpp"
#include "gsslam/pose.hpp"

namespace gsslam {

// Gaussians closer than this to the image plane are culled; avoids the
// perspective-Jacobian singularity at depth -> 0.
inline constexpr double kNearPlane = 0.01;

struct ProjectedGaussian {
  Eigen::Vector2d mu2d;     // pixel coordinates
  Eigen::Matrix2d sigma2d;  // J * R_cw * Sigma * R_cw^T * J^T, unregularized
  double depth = 0.0;       // camera-frame z, meters
};

// Jacobian of the perspective projection (u,v) at camera point x_cam.
Eigen::Matrix<double, 2, 3> perspective_jacobian(const Eigen::Vector3d& x_cam,
                                                 const Intrinsics& K);

// Affine-approximation projection of a 3D Gaussian at its mean.
// Returns nullopt when the mean is behind the near plane; caller skips.
std::optional<ProjectedGaussian> project_gaussian(const Gaussian3D& g, const CameraPose& T,
                                                  const Intrinsics& K,
                                                  double near_plane = kNearPlane);

// World position of the back-projected pixel: T^-1 * (K^-1 * p_homog * depth).
// Throws Error(InvalidDepth) for non-positive or non-finite depth.
Eigen::Vector3d unproject_pixel(const Eigen::Vector2d& p, double depth, const CameraPose& T,
                                const Intrinsics& K);

}  // namespace gsslam
