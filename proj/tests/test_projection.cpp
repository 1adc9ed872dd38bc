#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <random>

#include "gsslam/errors.hpp"
#include "gsslam/projection.hpp"
#include "helpers.hpp"

using namespace gsslam;
using gsslam::testing::test_intrinsics;

namespace {

Intrinsics vga_intrinsics() {
  Intrinsics K;
  K.fx = 525.0;
  K.fy = 525.0;
  K.cx = 320.0;
  K.cy = 240.0;
  K.width = 640;
  K.height = 480;
  return K;
}

CameraPose random_pose(std::mt19937_64& rng, double scale = 0.3) {
  std::uniform_real_distribution<double> u(-scale, scale);
  return se3_exp(
      Twist(Eigen::Vector3d(u(rng), u(rng), u(rng)), Eigen::Vector3d(u(rng), u(rng), u(rng))));
}

}  // namespace

TEST_CASE("on-axis point projects to the principal point") {
  Gaussian3D g;
  g.mu = Eigen::Vector3d(0, 0, 2);
  const auto proj = project_gaussian(g, CameraPose(), vga_intrinsics());
  REQUIRE(proj.has_value());
  CHECK(proj->mu2d.x() == doctest::Approx(320.0).epsilon(1e-12));
  CHECK(proj->mu2d.y() == doctest::Approx(240.0).epsilon(1e-12));
  CHECK(proj->depth == doctest::Approx(2.0));
}

TEST_CASE("isotropic covariance projects to (fx*sigma/d)^2 on the diagonal") {
  const double sigma = 0.05;
  const double d = 2.5;
  Gaussian3D g;
  g.mu = Eigen::Vector3d(0, 0, d);
  g.log_scale = Eigen::Vector3d::Constant(std::log(sigma));
  const Intrinsics K = vga_intrinsics();
  const auto proj = project_gaussian(g, CameraPose(), K);
  REQUIRE(proj.has_value());
  const double expected = (K.fx * sigma / d) * (K.fx * sigma / d);
  CHECK(proj->sigma2d(0, 0) == doctest::Approx(expected).epsilon(1e-9));
  CHECK(proj->sigma2d(1, 1) == doctest::Approx(expected).epsilon(1e-9));
  CHECK(std::abs(proj->sigma2d(0, 1)) < 1e-12);
}

TEST_CASE("projected mean moves by J*delta under small perturbations") {
  std::mt19937_64 rng(3);
  const Intrinsics K = vga_intrinsics();
  const CameraPose T = random_pose(rng);
  Gaussian3D g;
  g.mu = Eigen::Vector3d(0.3, -0.2, 2.0);

  const auto base = project_gaussian(g, T, K);
  REQUIRE(base.has_value());
  const Eigen::Matrix<double, 2, 3> J = perspective_jacobian(T.apply(g.mu), K);
  const double h = 1e-5;
  for (int axis = 0; axis < 3; ++axis) {
    Gaussian3D gp = g, gm = g;
    gp.mu[axis] += h;
    gm.mu[axis] -= h;
    const Eigen::Vector2d fd =
        (project_gaussian(gp, T, K)->mu2d - project_gaussian(gm, T, K)->mu2d) / (2 * h);
    const Eigen::Vector2d analytic = J * T.rotation_matrix().col(axis);
    CHECK((fd - analytic).norm() < 1e-6 * std::max(1.0, analytic.norm()));
  }
}

TEST_CASE("behind-camera gaussian is culled") {
  Gaussian3D g;
  g.mu = Eigen::Vector3d(0, 0, -1);
  CHECK_FALSE(project_gaussian(g, CameraPose(), vga_intrinsics()).has_value());
  g.mu = Eigen::Vector3d(0, 0, 0.005);  // inside the near plane
  CHECK_FALSE(project_gaussian(g, CameraPose(), vga_intrinsics()).has_value());
}

TEST_CASE("principal ray unprojects to (0,0,depth)") {
  const Intrinsics K = vga_intrinsics();
  const Eigen::Vector3d p = unproject_pixel(Eigen::Vector2d(K.cx, K.cy), 1.0, CameraPose(), K);
  CHECK((p - Eigen::Vector3d(0, 0, 1)).norm() < 1e-12);
}

TEST_CASE("pinhole similar triangles: one focal length right of center") {
  const Intrinsics K = vga_intrinsics();
  const Eigen::Vector3d p =
      unproject_pixel(Eigen::Vector2d(K.cx + K.fx, K.cy), 2.0, CameraPose(), K);
  CHECK((p - Eigen::Vector3d(2, 0, 2)).norm() < 1e-12);
}

TEST_CASE("unproject rejects invalid depth") {
  const Intrinsics K = vga_intrinsics();
  CHECK_THROWS_AS(unproject_pixel(Eigen::Vector2d(1, 1), 0.0, CameraPose(), K), Error);
  CHECK_THROWS_AS(unproject_pixel(Eigen::Vector2d(1, 1), -2.0, CameraPose(), K), Error);
  CHECK_THROWS_AS(
      unproject_pixel(Eigen::Vector2d(1, 1), std::nan(""), CameraPose(), K), Error);
}

TEST_CASE("unproject then project round-trips within 1e-6 px") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> px(0.0, 639.0);
  std::uniform_real_distribution<double> py(0.0, 479.0);
  std::uniform_real_distribution<double> pd(0.2, 5.0);
  const Intrinsics K = vga_intrinsics();
  for (int trial = 0; trial < 100; ++trial) {
    const CameraPose T = random_pose(rng);
    const Eigen::Vector2d pixel(px(rng), py(rng));
    const double depth = pd(rng);
    Gaussian3D g;
    g.mu = unproject_pixel(pixel, depth, T, K);
    const auto proj = project_gaussian(g, T, K);
    REQUIRE(proj.has_value());
    CHECK((proj->mu2d - pixel).norm() < 1e-6);
    CHECK(proj->depth == doctest::Approx(depth).epsilon(1e-9));
  }
}

TEST_CASE("projected covariance stays positive semi-definite") {
  std::mt19937_64 rng(9);
  const Intrinsics K = test_intrinsics(64, 64, 64.0);
  const auto scene = gsslam::testing::random_scene(50, K, rng);
  const CameraPose T = random_pose(rng, 0.2);
  for (const Gaussian3D& g : scene) {
    const auto proj = project_gaussian(g, T, K);
    if (!proj) continue;
    const Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eigs(proj->sigma2d);
    CHECK(eigs.eigenvalues().minCoeff() >= -1e-12);
  }
}
