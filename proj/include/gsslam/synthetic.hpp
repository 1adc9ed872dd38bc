#pragma once

#include <filesystem>
#include <vector>

#include "gsslam/dataset.hpp"
#include "gsslam/gaussian.hpp"
#include "gsslam/rasterizer.hpp"

namespace gsslam {

// Static geometry: a rectangle of dense Gaussians with a procedurally
// jittered (optionally checkered) texture.
struct TexturedPlane {
  Eigen::Vector3d origin = Eigen::Vector3d::Zero();  // corner
  Eigen::Vector3d u_axis = Eigen::Vector3d::UnitX(); // full edge vectors
  Eigen::Vector3d v_axis = Eigen::Vector3d::UnitY();
  int nu = 40;
  int nv = 40;
  Eigen::Vector3d base_color = Eigen::Vector3d(0.6, 0.6, 0.6);
  Eigen::Vector3d checker_color = Eigen::Vector3d(0.3, 0.3, 0.3);
  int checker_cells = 0;      // 0 disables the checker pattern
  double color_jitter = 0.3;
};

// A rigid box of Gaussians translating along a per-frame track:
// offset(t) = velocity * t + osc_amplitude * sin(2*pi*osc_freq_hz*t).
// masked=false keeps the box out of M_seg (exercises the robust mask).
struct BoxDistractor {
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  Eigen::Vector3d half_extent = Eigen::Vector3d(0.1, 0.1, 0.1);
  int res = 6;  // gaussians per face edge
  Eigen::Vector3d color = Eigen::Vector3d(0.85, 0.2, 0.15);
  double color_jitter = 0.15;
  Eigen::Vector3d velocity = Eigen::Vector3d::Zero();
  Eigen::Vector3d osc_amplitude = Eigen::Vector3d::Zero();
  double osc_freq_hz = 0.5;
  bool masked = true;
};

struct TrajectorySpec {
  enum class Mode { Waypoints, ConstantTwist };
  Mode mode = Mode::Waypoints;

  // Waypoints: piecewise-linear positions and look-at targets over time.
  std::vector<Eigen::Vector3d> positions;
  std::vector<Eigen::Vector3d> look_at;
  Eigen::Vector3d world_up = Eigen::Vector3d(0, 1, 0);

  // ConstantTwist: T_k = T_{k-1} * se3_exp(per_frame), constant body-frame
  // velocity, exact for the constant-velocity motion model.
  CameraPose start;  // world-to-camera
  Twist per_frame;
};

struct SceneSpec {
  int width = 64;
  int height = 64;
  double fx = 64.0;
  double fy = 64.0;
  double fps = 30.0;
  int frame_count = 50;
  std::vector<TexturedPlane> planes;
  std::vector<BoxDistractor> distractors;
  TrajectorySpec trajectory;
  double surface_opacity = 0.995;
  double scale_factor = 0.7;  // gaussian scale = factor * grid spacing
};

struct SyntheticSequence {
  SequenceManifest manifest;          // in-memory: record paths stay empty
  std::vector<Frame> frames;
  std::vector<MaskImage> footprints;  // 1 = covered by any distractor
  std::vector<Gaussian3D> static_gaussians;  // ground-truth static scene
};

// World-to-camera pose looking from eye toward target.
CameraPose look_at_pose(const Eigen::Vector3d& eye, const Eigen::Vector3d& target,
                        const Eigen::Vector3d& world_up = Eigen::Vector3d(0, 1, 0));

// Appends the six faces of an axis-aligned box as textured planes.
void add_static_box(SceneSpec& spec, const Eigen::Vector3d& center,
                    const Eigen::Vector3d& half_extent, const Eigen::Vector3d& color,
                    int res = 12);

// Renders the scene along the trajectory. Fully deterministic for a fixed
// seed: frames, masks, and ground truth are reproducible bit for bit.
SyntheticSequence generate_synthetic_sequence(const SceneSpec& spec, uint64_t seed,
                                              const RenderConfig& render_cfg = {});

// Writes the sequence as a TUM-layout dataset (rgb.txt/depth.txt/
// groundtruth.txt, masks/, 16-bit depth with divisor 5000) plus a run
// config stub carrying the camera intrinsics.
void export_tum_layout(const SyntheticSequence& seq, const std::filesystem::path& dir);

// Declarative scene description (documented in README): planes, box
// distractors, trajectory waypoints or constant twist.
SceneSpec scene_spec_from_json_file(const std::filesystem::path& file);

}  // namespace gsslam
