#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <unsupported/Eigen/MatrixFunctions>

#include "gsslam/pose.hpp"

using namespace gsslam;

namespace {

// Truncated matrix-exponential series of the 4x4 twist matrix; independent
// oracle for se3_exp.
Eigen::Matrix4d series_exp(const Twist& xi, int terms = 10) {
  Eigen::Matrix4d hat = Eigen::Matrix4d::Zero();
  hat.topLeftCorner<3, 3>() = skew(xi.omega);
  hat.topRightCorner<3, 1>() = xi.v;
  Eigen::Matrix4d sum = Eigen::Matrix4d::Identity();
  Eigen::Matrix4d term = Eigen::Matrix4d::Identity();
  for (int k = 1; k <= terms; ++k) {
    term = term * hat / static_cast<double>(k);
    sum += term;
  }
  return sum;
}

}  // namespace

TEST_CASE("se3_exp of zero twist is the identity") {
  const CameraPose p = se3_exp(Twist());
  CHECK(p.matrix().isApprox(Eigen::Matrix4d::Identity(), 1e-15));
}

TEST_CASE("se3_exp quarter turn about z") {
  const CameraPose p = se3_exp(Twist(Eigen::Vector3d(0, 0, M_PI / 2), Eigen::Vector3d::Zero()));
  CHECK(p.translation().norm() == doctest::Approx(0.0).epsilon(1e-12));
  const Eigen::Vector3d rotated = p.rotation() * Eigen::Vector3d::UnitX();
  CHECK((rotated - Eigen::Vector3d::UnitY()).norm() < 1e-12);
}

TEST_CASE("se3_exp matches the truncated series oracle") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    Twist xi(Eigen::Vector3d(u(rng), u(rng), u(rng)), Eigen::Vector3d(u(rng), u(rng), u(rng)));
    const double norm = xi.vec().norm();
    if (norm > 0.5) {
      xi = Twist::from_vec(xi.vec() * (0.45 / norm));
    }
    const Eigen::Matrix4d expected = series_exp(xi);
    CHECK((se3_exp(xi).matrix() - expected).norm() < 1e-9);
  }
}

TEST_CASE("se3_exp is first-order consistent for small twists") {
  const Twist xi(Eigen::Vector3d(0.2, -0.1, 0.3), Eigen::Vector3d(0.5, 0.1, -0.2));
  const double eps = 1e-6;
  const Twist scaled = Twist::from_vec(xi.vec() * eps);
  Eigen::Matrix4d hat = Eigen::Matrix4d::Zero();
  hat.topLeftCorner<3, 3>() = skew(xi.omega);
  hat.topRightCorner<3, 1>() = xi.v;
  const Eigen::Matrix4d first_order = Eigen::Matrix4d::Identity() + eps * hat;
  CHECK((se3_exp(scaled).matrix() - first_order).norm() < 10 * eps * eps);
}

TEST_CASE("se3_log inverts se3_exp below pi") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    Eigen::Vector3d omega(u(rng), u(rng), u(rng));
    omega *= 2.9 / std::max(1.0, omega.norm());  // keep below pi
    const Twist xi(omega, Eigen::Vector3d(u(rng), u(rng), u(rng)));
    const Twist back = se3_log(se3_exp(xi));
    CHECK((back.vec() - xi.vec()).norm() < 1e-8);
  }
}

TEST_CASE("se3_exp produces rigid transforms") {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int trial = 0; trial < 100; ++trial) {
    const Twist xi(Eigen::Vector3d(u(rng), u(rng), u(rng)),
                   Eigen::Vector3d(u(rng), u(rng), u(rng)));
    const Eigen::Matrix3d R = se3_exp(xi).rotation_matrix();
    CHECK((R.transpose() * R - Eigen::Matrix3d::Identity()).norm() < 1e-9);
    CHECK(R.determinant() == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("compose with inverse gives the identity") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int trial = 0; trial < 20; ++trial) {
    const CameraPose p = se3_exp(
        Twist(Eigen::Vector3d(u(rng), u(rng), u(rng)), Eigen::Vector3d(u(rng), u(rng), u(rng))));
    const Eigen::Matrix4d I = p.compose(p.inverse()).matrix();
    CHECK((I - Eigen::Matrix4d::Identity()).norm() < 1e-9);
    CHECK(p.rotation().norm() == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("pose center is the camera position in world") {
  const CameraPose p = se3_exp(Twist(Eigen::Vector3d(0.1, 0.2, 0.3), Eigen::Vector3d(1, 2, 3)));
  CHECK(p.apply(p.center()).norm() < 1e-12);
}

TEST_CASE("rotation_angle") {
  CHECK(rotation_angle(CameraPose()) == doctest::Approx(0.0));
  const CameraPose quarter =
      se3_exp(Twist(Eigen::Vector3d(0, 0, M_PI / 2), Eigen::Vector3d::Zero()));
  CHECK(rotation_angle(quarter) == doctest::Approx(M_PI / 2).epsilon(1e-12));
}

TEST_CASE("intrinsics validity") {
  Intrinsics K;
  CHECK_FALSE(K.valid());
  K.fx = 64;
  K.fy = 64;
  K.cx = 31.5;
  K.cy = 31.5;
  K.width = 64;
  K.height = 64;
  CHECK(K.valid());
  K.cx = 64;  // out of range
  CHECK_FALSE(K.valid());
}
