#include "gsslam/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include <json.hpp>

#include "gsslam/errors.hpp"
#include "gsslam/image_io.hpp"

namespace gsslam {

CameraPose look_at_pose(const Eigen::Vector3d& eye, const Eigen::Vector3d& target,
                        const Eigen::Vector3d& world_up) {
  const Eigen::Vector3d forward = (target - eye).normalized();
  Eigen::Vector3d right = world_up.cross(forward);
  if (right.norm() < 1e-9) {
    right = Eigen::Vector3d::UnitX();  // degenerate up/forward pair
  }
  right.normalize();
  const Eigen::Vector3d down = forward.cross(right);
  Eigen::Matrix3d R_wc;  // camera axes in world coordinates
  R_wc.col(0) = right;
  R_wc.col(1) = down;
  R_wc.col(2) = forward;
  const Eigen::Matrix3d R_cw = R_wc.transpose();
  return CameraPose(Eigen::Quaterniond(R_cw), -(R_cw * eye));
}

void add_static_box(SceneSpec& spec, const Eigen::Vector3d& center,
                    const Eigen::Vector3d& half_extent, const Eigen::Vector3d& color,
                    int res) {
  const Eigen::Vector3d h = half_extent;
  auto face = [&](const Eigen::Vector3d& origin, const Eigen::Vector3d& u,
                  const Eigen::Vector3d& v) {
    TexturedPlane p;
    p.origin = origin;
    p.u_axis = u;
    p.v_axis = v;
    p.nu = res;
    p.nv = res;
    p.base_color = color;
    p.color_jitter = 0.2;
    spec.planes.push_back(p);
  };
  const Eigen::Vector3d c = center;
  face(c + Eigen::Vector3d(-h.x(), -h.y(), -h.z()), Eigen::Vector3d(2 * h.x(), 0, 0),
       Eigen::Vector3d(0, 2 * h.y(), 0));  // z-
  face(c + Eigen::Vector3d(-h.x(), -h.y(), h.z()), Eigen::Vector3d(2 * h.x(), 0, 0),
       Eigen::Vector3d(0, 2 * h.y(), 0));  // z+
  face(c + Eigen::Vector3d(-h.x(), -h.y(), -h.z()), Eigen::Vector3d(0, 2 * h.y(), 0),
       Eigen::Vector3d(0, 0, 2 * h.z()));  // x-
  face(c + Eigen::Vector3d(h.x(), -h.y(), -h.z()), Eigen::Vector3d(0, 2 * h.y(), 0),
       Eigen::Vector3d(0, 0, 2 * h.z()));  // x+
  face(c + Eigen::Vector3d(-h.x(), -h.y(), -h.z()), Eigen::Vector3d(2 * h.x(), 0, 0),
       Eigen::Vector3d(0, 0, 2 * h.z()));  // y-
  face(c + Eigen::Vector3d(-h.x(), h.y(), -h.z()), Eigen::Vector3d(2 * h.x(), 0, 0),
       Eigen::Vector3d(0, 0, 2 * h.z()));  // y+
}

namespace {

Eigen::Vector3d clamp01(const Eigen::Vector3d& c) {
  return c.cwiseMax(0.02).cwiseMin(0.98);
}

std::vector<Gaussian3D> plane_gaussians(const TexturedPlane& p, double opacity,
                                        double scale_factor, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> jitter(-0.5, 0.5);
  std::vector<Gaussian3D> out;
  out.reserve(static_cast<size_t>(p.nu) * p.nv);
  const double du = p.u_axis.norm() / p.nu;
  const double dv = p.v_axis.norm() / p.nv;
  const double scale = scale_factor * std::max(du, dv);
  for (int j = 0; j < p.nv; ++j) {
    for (int i = 0; i < p.nu; ++i) {
      Gaussian3D g;
      const double fu = (i + 0.5) / p.nu;
      const double fv = (j + 0.5) / p.nv;
      g.mu = p.origin + fu * p.u_axis + fv * p.v_axis;
      g.log_scale = Eigen::Vector3d::Constant(std::log(scale));
      g.q = Eigen::Vector4d(1, 0, 0, 0);
      g.opacity_logit = logit(opacity);
      Eigen::Vector3d base = p.base_color;
      if (p.checker_cells > 0) {
        const int cu = static_cast<int>(fu * p.checker_cells);
        const int cv = static_cast<int>(fv * p.checker_cells);
        if ((cu + cv) % 2 == 1) base = p.checker_color;
      }
      const Eigen::Vector3d noise(jitter(rng), jitter(rng), jitter(rng));
      g.color = clamp01(base + p.color_jitter * noise);
      g.origin_kf_id = 0;
      out.push_back(g);
    }
  }
  return out;
}

std::vector<Gaussian3D> box_gaussians(const BoxDistractor& d, double opacity,
                                      double scale_factor, std::mt19937_64& rng) {
  SceneSpec tmp;
  TexturedPlane proto;
  add_static_box(tmp, d.center, d.half_extent, d.color, d.res);
  std::vector<Gaussian3D> out;
  for (TexturedPlane& p : tmp.planes) {
    p.color_jitter = d.color_jitter;
    const std::vector<Gaussian3D> face = plane_gaussians(p, opacity, scale_factor, rng);
    out.insert(out.end(), face.begin(), face.end());
  }
  return out;
}

CameraPose trajectory_pose(const TrajectorySpec& traj, int frame, int frame_count) {
  if (traj.mode == TrajectorySpec::Mode::ConstantTwist) {
    CameraPose T = traj.start;
    const CameraPose delta = se3_exp(traj.per_frame);
    for (int k = 0; k < frame; ++k) T = T * delta;
    return T;
  }
  const size_t n = traj.positions.size();
  if (n == 0) return CameraPose();
  if (n == 1) return look_at_pose(traj.positions[0], traj.look_at[0], traj.world_up);
  const double t = frame_count > 1
                       ? static_cast<double>(frame) / (frame_count - 1) * (n - 1)
                       : 0.0;
  const size_t seg = std::min(static_cast<size_t>(t), n - 2);
  const double f = t - static_cast<double>(seg);
  const Eigen::Vector3d eye = (1.0 - f) * traj.positions[seg] + f * traj.positions[seg + 1];
  const Eigen::Vector3d target = (1.0 - f) * traj.look_at[seg] + f * traj.look_at[seg + 1];
  return look_at_pose(eye, target, traj.world_up);
}

}  // namespace

SyntheticSequence generate_synthetic_sequence(const SceneSpec& spec, uint64_t seed,
                                              const RenderConfig& render_cfg) {
  SyntheticSequence seq;
  std::mt19937_64 rng(seed);

  for (const TexturedPlane& p : spec.planes) {
    const std::vector<Gaussian3D> gs =
        plane_gaussians(p, spec.surface_opacity, spec.scale_factor, rng);
    seq.static_gaussians.insert(seq.static_gaussians.end(), gs.begin(), gs.end());
  }
  std::vector<std::vector<Gaussian3D>> distractor_templates;
  for (const BoxDistractor& d : spec.distractors) {
    distractor_templates.push_back(box_gaussians(d, spec.surface_opacity, spec.scale_factor, rng));
  }

  Intrinsics K;
  K.fx = spec.fx;
  K.fy = spec.fy;
  K.cx = (spec.width - 1) / 2.0;
  K.cy = (spec.height - 1) / 2.0;
  K.width = spec.width;
  K.height = spec.height;
  seq.manifest.intrinsics = K;

  for (int k = 0; k < spec.frame_count; ++k) {
    const double time = static_cast<double>(k) / spec.fps;
    const CameraPose T = trajectory_pose(spec.trajectory, k, spec.frame_count);

    // Full scene: static set followed by per-frame distractor instances.
    std::vector<Gaussian3D> scene = seq.static_gaussians;
    const size_t static_count = scene.size();
    std::vector<uint8_t> from_masked;  // per distractor gaussian, in order
    for (size_t di = 0; di < spec.distractors.size(); ++di) {
      const BoxDistractor& d = spec.distractors[di];
      const Eigen::Vector3d offset =
          d.velocity * time +
          d.osc_amplitude * std::sin(2.0 * M_PI * d.osc_freq_hz * time);
      for (Gaussian3D g : distractor_templates[di]) {
        g.mu += offset;
        scene.push_back(g);
        from_masked.push_back(d.masked ? 1 : 0);
      }
    }

    const RenderResult render = render_frame(scene, T, K, render_cfg);

    Frame frame;
    frame.timestamp = time;
    frame.rgb = render.color;
    frame.depth = GrayImage(spec.width, spec.height, 0.0);
    frame.static_mask = MaskImage(spec.width, spec.height, 1);
    MaskImage footprint(spec.width, spec.height, 0);

    // Per-pixel distractor coverage from the compositing records.
    GrayImage dyn_weight(spec.width, spec.height, 0.0);
    GrayImage masked_weight(spec.width, spec.height, 0.0);
    for (int y = 0; y < spec.height; ++y) {
      for (int x = 0; x < spec.width; ++x) {
        const size_t p = static_cast<size_t>(y) * spec.width + x;
        for (size_t c = render.pixel_offset[p]; c < render.pixel_offset[p + 1]; ++c) {
          const Contribution& rec = render.contribs[c];
          const uint32_t idx = render.splats[rec.splat].index;
          if (idx >= static_count) {
            const double w = rec.weight * rec.transmittance;
            dyn_weight(x, y) += w;
            if (from_masked[idx - static_count]) masked_weight(x, y) += w;
          }
        }
        frame.depth(x, y) = render.opacity(x, y) > 0.5 ? render.depth(x, y) : 0.0;
        footprint(x, y) = dyn_weight(x, y) > 0.5 ? 1 : 0;
        frame.static_mask(x, y) = masked_weight(x, y) > 0.5 ? 0 : 1;
      }
    }

    seq.frames.push_back(std::move(frame));
    seq.footprints.push_back(std::move(footprint));
    FrameRecord rec;
    rec.timestamp = time;
    seq.manifest.frames.push_back(rec);
    seq.manifest.gt_trajectory.push_back({time, T});
  }
  return seq;
}

void export_tum_layout(const SyntheticSequence& seq, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir / "rgb");
  fs::create_directories(dir / "depth");
  fs::create_directories(dir / "masks");

  const double depth_scale = seq.manifest.intrinsics.depth_scale;
  std::ofstream rgb_idx(dir / "rgb.txt");
  std::ofstream depth_idx(dir / "depth.txt");
  rgb_idx << "# timestamp path\n";
  depth_idx << "# timestamp path\n";
  rgb_idx.precision(6);
  depth_idx.precision(6);
  rgb_idx << std::fixed;
  depth_idx << std::fixed;

  char name[32];
  for (size_t i = 0; i < seq.frames.size(); ++i) {
    std::snprintf(name, sizeof(name), "%06zu.png", i);
    const Frame& f = seq.frames[i];
    write_color_png(dir / "rgb" / name, f.rgb);
    write_depth_png(dir / "depth" / name, f.depth, depth_scale);
    write_mask_png(dir / "masks" / name, f.static_mask);
    rgb_idx << f.timestamp << " rgb/" << name << "\n";
    depth_idx << f.timestamp << " depth/" << name << "\n";
  }
  write_trajectory_tum(dir / "groundtruth.txt", seq.manifest.gt_trajectory);

  const Intrinsics& K = seq.manifest.intrinsics;
  std::ofstream cfg(dir / "camera.txt");
  cfg.precision(17);
  cfg << "camera.fx = " << K.fx << "\n"
      << "camera.fy = " << K.fy << "\n"
      << "camera.cx = " << K.cx << "\n"
      << "camera.cy = " << K.cy << "\n"
      << "camera.width = " << K.width << "\n"
      << "camera.height = " << K.height << "\n"
      << "camera.depth_scale = " << K.depth_scale << "\n";
}

namespace {

Eigen::Vector3d vec3(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 3) {
    throw Error(ErrorKind::BadConfig, "expected a 3-element array");
  }
  return Eigen::Vector3d(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

}  // namespace

SceneSpec scene_spec_from_json_file(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw Error(ErrorKind::MissingIndex, "cannot read scene spec " + file.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::BadConfig, "scene spec parse error: " + std::string(e.what()));
  }

  SceneSpec spec;
  spec.width = j.value("width", spec.width);
  spec.height = j.value("height", spec.height);
  spec.fx = j.value("fx", spec.fx);
  spec.fy = j.value("fy", spec.fy);
  spec.fps = j.value("fps", spec.fps);
  spec.frame_count = j.value("frames", spec.frame_count);
  spec.surface_opacity = j.value("surface_opacity", spec.surface_opacity);

  for (const auto& pj : j.value("planes", nlohmann::json::array())) {
    TexturedPlane p;
    p.origin = vec3(pj.at("origin"));
    p.u_axis = vec3(pj.at("u"));
    p.v_axis = vec3(pj.at("v"));
    p.nu = pj.value("nu", p.nu);
    p.nv = pj.value("nv", p.nv);
    if (pj.contains("color")) p.base_color = vec3(pj["color"]);
    if (pj.contains("checker_color")) p.checker_color = vec3(pj["checker_color"]);
    p.checker_cells = pj.value("checker", p.checker_cells);
    p.color_jitter = pj.value("jitter", p.color_jitter);
    spec.planes.push_back(p);
  }
  for (const auto& bj : j.value("boxes", nlohmann::json::array())) {
    add_static_box(spec, vec3(bj.at("center")), vec3(bj.at("half_extent")),
                   bj.contains("color") ? vec3(bj["color"]) : Eigen::Vector3d(0.5, 0.5, 0.5),
                   bj.value("res", 12));
  }
  for (const auto& dj : j.value("distractors", nlohmann::json::array())) {
    BoxDistractor d;
    d.center = vec3(dj.at("center"));
    d.half_extent = vec3(dj.at("half_extent"));
    d.res = dj.value("res", d.res);
    if (dj.contains("color")) d.color = vec3(dj["color"]);
    if (dj.contains("velocity")) d.velocity = vec3(dj["velocity"]);
    if (dj.contains("osc_amplitude")) d.osc_amplitude = vec3(dj["osc_amplitude"]);
    d.osc_freq_hz = dj.value("osc_freq", d.osc_freq_hz);
    d.masked = dj.value("masked", true);
    spec.distractors.push_back(d);
  }

  const auto& tj = j.at("trajectory");
  const std::string mode = tj.value("mode", "waypoints");
  if (mode == "waypoints") {
    spec.trajectory.mode = TrajectorySpec::Mode::Waypoints;
    for (const auto& pj : tj.at("positions")) spec.trajectory.positions.push_back(vec3(pj));
    for (const auto& pj : tj.at("look_at")) spec.trajectory.look_at.push_back(vec3(pj));
    if (spec.trajectory.positions.size() != spec.trajectory.look_at.size() ||
        spec.trajectory.positions.empty()) {
      throw Error(ErrorKind::BadConfig, "trajectory positions/look_at must match and be non-empty");
    }
    if (tj.contains("world_up")) spec.trajectory.world_up = vec3(tj["world_up"]);
  } else if (mode == "constant_twist") {
    spec.trajectory.mode = TrajectorySpec::Mode::ConstantTwist;
    spec.trajectory.start =
        look_at_pose(vec3(tj.at("start_position")), vec3(tj.at("start_look_at")));
    spec.trajectory.per_frame =
        Twist(vec3(tj.value("omega", nlohmann::json::array({0, 0, 0}))),
              vec3(tj.value("v", nlohmann::json::array({0, 0, 0}))));
  } else {
    throw Error(ErrorKind::BadConfig, "unknown trajectory mode: " + mode);
  }
  return spec;
}

}  // namespace gsslam
