#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace gsslam {

// Tangent-space increment of an SE(3) pose: rotation part in radians,
// translation part in meters.
struct Twist {
  Eigen::Vector3d omega = Eigen::Vector3d::Zero();
  Eigen::Vector3d v = Eigen::Vector3d::Zero();

  Twist() = default;
  Twist(const Eigen::Vector3d& omega_in, const Eigen::Vector3d& v_in) : omega(omega_in), v(v_in) {}

  double norm() const { return std::sqrt(omega.squaredNorm() + v.squaredNorm()); }

  Eigen::Matrix<double, 6, 1> vec() const {
    Eigen::Matrix<double, 6, 1> out;
    out << omega, v;
    return out;
  }
  static Twist from_vec(const Eigen::Matrix<double, 6, 1>& x) {
    return Twist(x.head<3>(), x.tail<3>());
  }
};

// World-to-camera rigid transform: x_cam = R * x_world + t.
// The quaternion is renormalized after every update.
class CameraPose {
 public:
  CameraPose() : rotation_(Eigen::Quaterniond::Identity()), translation_(Eigen::Vector3d::Zero()) {}
  CameraPose(const Eigen::Quaterniond& rotation, const Eigen::Vector3d& translation)
      : rotation_(rotation.normalized()), translation_(translation) {}

  static CameraPose identity() { return CameraPose(); }

  const Eigen::Quaterniond& rotation() const { return rotation_; }
  const Eigen::Vector3d& translation() const { return translation_; }
  Eigen::Matrix3d rotation_matrix() const { return rotation_.toRotationMatrix(); }

  Eigen::Matrix4d matrix() const {
    Eigen::Matrix4d T = Eigen::Matrix4d::Identity();
    T.topLeftCorner<3, 3>() = rotation_matrix();
    T.topRightCorner<3, 1>() = translation_;
    return T;
  }

  Eigen::Vector3d apply(const Eigen::Vector3d& x_world) const {
    return rotation_ * x_world + translation_;
  }

  CameraPose inverse() const {
    Eigen::Quaterniond rot_inv = rotation_.conjugate();
    return CameraPose(rot_inv, -(rot_inv * translation_));
  }

  // this * rhs: apply rhs first, then this.
  CameraPose compose(const CameraPose& rhs) const {
    return CameraPose(rotation_ * rhs.rotation_, rotation_ * rhs.translation_ + translation_);
  }
  friend CameraPose operator*(const CameraPose& a, const CameraPose& b) { return a.compose(b); }

  // Camera position in world coordinates.
  Eigen::Vector3d center() const { return -(rotation_.conjugate() * translation_); }

  bool is_finite() const {
    return rotation_.coeffs().allFinite() && translation_.allFinite();
  }

 private:
  Eigen::Quaterniond rotation_;
  Eigen::Vector3d translation_;
};

Eigen::Matrix3d skew(const Eigen::Vector3d& w);

// Exact SE(3) exponential map. Total over finite inputs.
CameraPose se3_exp(const Twist& xi);

// Inverse of se3_exp for rotation angles below pi.
Twist se3_log(const CameraPose& pose);

// Rotation angle of the pose in radians, in [0, pi].
double rotation_angle(const CameraPose& pose);

// Pinhole camera model. depth_scale converts raw 16-bit depth to meters.
struct Intrinsics {
  double fx = 0.0;
  double fy = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 0;
  int height = 0;
  double depth_scale = 5000.0;

  bool valid() const {
    return fx > 0.0 && fy > 0.0 && cx >= 0.0 && cx < width && cy >= 0.0 && cy < height &&
           depth_scale > 0.0 && width > 0 && height > 0;
  }
};

}  // namespace gsslam
