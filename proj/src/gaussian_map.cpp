#include "gsslam/gaussian_map.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include "gsslam/errors.hpp"
#include "gsslam/projection.hpp"

namespace gsslam {

size_t GaussianMap::remove_indices(const std::vector<size_t>& indices) {
  if (indices.empty()) return 0;
  std::vector<uint8_t> drop(gaussians_.size(), 0);
  for (size_t i : indices) drop[i] = 1;
  auto& g = mutate();
  size_t w = 0;
  for (size_t r = 0; r < g.size(); ++r) {
    if (!drop[r]) g[w++] = g[r];
  }
  const size_t removed = g.size() - w;
  g.resize(w);
  return removed;
}

double GaussianMap::scene_extent() const {
  if (gaussians_.empty()) return 1.0;
  Eigen::Vector3d lo = gaussians_.front().mu;
  Eigen::Vector3d hi = lo;
  for (const Gaussian3D& g : gaussians_) {
    lo = lo.cwiseMin(g.mu);
    hi = hi.cwiseMax(g.mu);
  }
  return std::max(0.5 * (hi - lo).norm(), 1e-6);
}

DepthAlignment align_depth(const GrayImage& d_est, const GrayImage& d_gt,
                           const MaskImage& valid) {
  double n = 0.0, se = 0.0, sg = 0.0, see = 0.0, seg = 0.0;
  for (int y = 0; y < d_est.height(); ++y) {
    for (int x = 0; x < d_est.width(); ++x) {
      if (!valid(x, y)) continue;
      const double e = d_est(x, y);
      const double g = d_gt(x, y);
      n += 1.0;
      se += e;
      sg += g;
      see += e * e;
      seg += e * g;
    }
  }
  if (n < 100.0) {
    throw Error(ErrorKind::DegenerateFit, "fewer than 100 valid pixels for depth alignment");
  }
  const double var = see - se * se / n;
  if (var <= 1e-12 * n) {
    throw Error(ErrorKind::DegenerateFit, "estimated depth is constant on the valid set");
  }
  DepthAlignment out;
  out.a = (seg - se * sg / n) / var;
  out.b = (sg - out.a * se) / n;
  out.aligned = GrayImage(d_est.width(), d_est.height(), 0.0);
  for (size_t i = 0; i < out.aligned.size(); ++i) out.aligned[i] = out.a * d_est[i] + out.b;
  return out;
}

int insert_from_keyframe(GaussianMap& map, const Frame& frame, const CameraPose& T,
                         const Intrinsics& K, int kf_id, InsertMode mode,
                         const InsertConfig& cfg, const RenderConfig& render_cfg) {
  const int W = frame.depth.width();
  const int H = frame.depth.height();

  // Median static valid depth drives the isotropic init scale.
  std::vector<double> depths;
  depths.reserve(frame.depth.size() / 4);
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      if (frame.static_mask(x, y) && frame.depth(x, y) > 0.0) depths.push_back(frame.depth(x, y));
    }
  }
  if (depths.empty()) {
    throw Error(ErrorKind::EmptyFrame, "no static pixel with valid depth to insert from");
  }
  const size_t mid = depths.size() / 2;
  std::nth_element(depths.begin(), depths.begin() + static_cast<long>(mid), depths.end());
  const double median_depth = depths[mid];
  const double scale = std::max(cfg.min_scale, median_depth / K.fx);
  const Eigen::Vector3d log_scale = Eigen::Vector3d::Constant(std::log(scale));
  const double opl = logit(cfg.initial_opacity);

  // Sparse mode skips pixels the current map already covers.
  GrayImage covered;
  if (mode == InsertMode::Sparse && !map.empty()) {
    covered = render_frame(map.span(), T, K, render_cfg, map.version()).opacity;
  }

  const int stride = mode == InsertMode::Dense ? 1 : cfg.sparse_stride;
  map.register_keyframe_id(kf_id);
  int inserted = 0;
  auto& gs = map.mutate();
  for (int y = 0; y < H; y += stride) {
    for (int x = 0; x < W; x += stride) {
      if (!frame.static_mask(x, y)) continue;
      const double d = frame.depth(x, y);
      if (!(d > 0.0)) continue;
      if (!covered.empty() && covered(x, y) > cfg.covered_opacity) continue;

      Gaussian3D g;
      g.mu = unproject_pixel(Eigen::Vector2d(x, y), d, T, K);
      g.log_scale = log_scale;
      g.q = Eigen::Vector4d(1, 0, 0, 0);
      g.opacity_logit = opl;
      g.color = frame.rgb(x, y);
      g.origin_kf_id = kf_id;
      gs.push_back(g);
      ++inserted;
    }
  }
  if (inserted == 0) {
    throw Error(ErrorKind::EmptyFrame, "no pixel qualified for insertion");
  }
  return inserted;
}

int MapRenderStats::kf_seen_count(size_t i) const {
  uint32_t bits = kf_seen_bits[i];
  int n = 0;
  while (bits) {
    n += bits & 1u;
    bits >>= 1;
  }
  return n;
}

PruneStats prune_and_densify(GaussianMap& map, const std::vector<int>& window_kf_ids,
                             const MapRenderStats& stats, const DensifyConfig& cfg) {
  PruneStats out;
  const size_t n = map.size();
  const double extent = map.scene_extent();
  const int newest_kf = map.next_kf_id() - 1;
  const bool obs_rule = static_cast<int>(window_kf_ids.size()) >= cfg.min_observing_kfs;

  std::vector<size_t> to_prune;
  std::vector<size_t> to_densify;
  for (size_t i = 0; i < n; ++i) {
    const Gaussian3D& g = map.gaussians()[i];
    if (!g.is_finite() || g.opacity() < cfg.prune_opacity) {
      to_prune.push_back(i);
      continue;
    }
    if (obs_rule && i < stats.size() && g.origin_kf_id > newest_kf - cfg.recent_kf_window &&
        stats.kf_seen_count(i) < cfg.min_observing_kfs) {
      to_prune.push_back(i);
      continue;
    }
    if (i < stats.size() && stats.obs_count[i] > 0 &&
        stats.pos_grad_sum[i] / stats.obs_count[i] > cfg.grad_threshold) {
      to_densify.push_back(i);
    }
  }

  // Clone/split before pruning so indices stay valid, then prune.
  std::vector<Gaussian3D> born;
  auto& gs = map.mutate();
  for (size_t i : to_densify) {
    Gaussian3D& g = gs[i];
    const Eigen::Vector3d s = g.scales();
    int axis = 0;
    s.maxCoeff(&axis);
    if (s[axis] > cfg.split_scale_fraction * extent) {
      // Split: shrink both copies and separate them along the major axis.
      const Eigen::Vector3d dir = g.rotation().col(axis) * (0.5 * s[axis]);
      Gaussian3D sibling = g;
      g.log_scale.array() -= std::log(cfg.split_scale_shrink);
      sibling.log_scale = g.log_scale;
      g.mu -= dir;
      sibling.mu += dir;
      born.push_back(sibling);
    } else {
      born.push_back(g);  // clone in place; optimization separates them
    }
    ++out.cloned;
  }
  for (const Gaussian3D& g : born) gs.push_back(g);

  out.pruned = static_cast<int>(map.remove_indices(to_prune));
  return out;
}

std::vector<uint32_t> visible_ids(const GaussianMap& map, const CameraPose& T,
                                  const Intrinsics& K, const RenderConfig& cfg) {
  if (map.empty()) return {};
  const RenderResult r = render_frame(map.span(), T, K, cfg, map.version());
  return r.contributing_indices(0.01);
}

void save_map(const GaussianMap& map, const std::filesystem::path& bin_path,
              const std::filesystem::path& summary_path) {
  std::ofstream bin(bin_path, std::ios::binary);
  if (!bin) throw Error(ErrorKind::MissingIndex, "cannot write " + bin_path.string());
  const char magic[8] = {'G', 'S', 'M', 'A', 'P', '0', '0', '1'};
  bin.write(magic, 8);
  const uint64_t count = map.size();
  bin.write(reinterpret_cast<const char*>(&count), sizeof(count));
  for (const Gaussian3D& g : map.gaussians()) {
    double rec[14] = {g.mu.x(),        g.mu.y(),        g.mu.z(),        g.log_scale.x(),
                      g.log_scale.y(), g.log_scale.z(), g.q[0],          g.q[1],
                      g.q[2],          g.q[3],          g.opacity_logit, g.color.x(),
                      g.color.y(),     g.color.z()};
    bin.write(reinterpret_cast<const char*>(rec), sizeof(rec));
    const int32_t kf = g.origin_kf_id;
    bin.write(reinterpret_cast<const char*>(&kf), sizeof(kf));
  }

  std::ofstream txt(summary_path);
  txt << "gaussians: " << map.size() << "\n";
  txt << "scene_extent_m: " << map.scene_extent() << "\n";
  std::map<int, int> per_kf;
  for (const Gaussian3D& g : map.gaussians()) per_kf[g.origin_kf_id]++;
  for (const auto& [kf, cnt] : per_kf) txt << "kf " << kf << ": " << cnt << "\n";
}

GaussianMap load_map(const std::filesystem::path& bin_path) {
  std::ifstream bin(bin_path, std::ios::binary);
  if (!bin) throw Error(ErrorKind::MissingIndex, "cannot read " + bin_path.string());
  char magic[8];
  bin.read(magic, 8);
  if (std::string(magic, 8) != "GSMAP001") {
    throw Error(ErrorKind::MalformedLine, "bad map file magic in " + bin_path.string());
  }
  uint64_t count = 0;
  bin.read(reinterpret_cast<char*>(&count), sizeof(count));
  GaussianMap map;
  auto& gs = map.mutate();
  gs.reserve(count);
  for (uint64_t i = 0; i < count; ++i) {
    double rec[14];
    int32_t kf;
    bin.read(reinterpret_cast<char*>(rec), sizeof(rec));
    bin.read(reinterpret_cast<char*>(&kf), sizeof(kf));
    if (!bin) throw Error(ErrorKind::MalformedLine, "truncated map file " + bin_path.string());
    Gaussian3D g;
    g.mu = Eigen::Vector3d(rec[0], rec[1], rec[2]);
    g.log_scale = Eigen::Vector3d(rec[3], rec[4], rec[5]);
    g.q = Eigen::Vector4d(rec[6], rec[7], rec[8], rec[9]);
    g.opacity_logit = rec[10];
    g.color = Eigen::Vector3d(rec[11], rec[12], rec[13]);
    g.origin_kf_id = kf;
    map.register_keyframe_id(kf);
    gs.push_back(g);
  }
  return map;
}

}  // namespace gsslam
