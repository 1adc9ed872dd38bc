#include "gsslam/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "gsslam/errors.hpp"
#include "gsslam/image_io.hpp"

namespace gsslam {

namespace {

struct IndexEntry {
  double timestamp;
  std::string path;
};

std::vector<IndexEntry> read_index(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw Error(ErrorKind::MissingIndex, "missing index file " + file.string());
  std::vector<IndexEntry> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream s(line);
    IndexEntry e;
    if (!(s >> e.timestamp >> e.path)) {
      throw Error(ErrorKind::MalformedLine,
                  file.string() + ":" + std::to_string(line_no) + ": expected 'timestamp path'");
    }
    out.push_back(e);
  }
  return out;
}

}  // namespace

SequenceManifest load_tum_sequence(const std::filesystem::path& root, const Intrinsics& K,
                                   double assoc_tol) {
  SequenceManifest m;
  m.root = root;
  m.intrinsics = K;

  const std::vector<IndexEntry> rgb = read_index(root / "rgb.txt");
  const std::vector<IndexEntry> depth = read_index(root / "depth.txt");

  // Greedy nearest-timestamp association within tolerance.
  size_t j = 0;
  for (const IndexEntry& r : rgb) {
    while (j + 1 < depth.size() &&
           std::abs(depth[j + 1].timestamp - r.timestamp) <=
               std::abs(depth[j].timestamp - r.timestamp)) {
      ++j;
    }
    if (!depth.empty() && std::abs(depth[j].timestamp - r.timestamp) <= assoc_tol) {
      FrameRecord rec;
      rec.timestamp = r.timestamp;
      rec.rgb_path = r.path;
      rec.depth_path = depth[j].path;
      m.frames.push_back(rec);
    } else {
      m.dropped_frames++;
    }
  }
  if (m.frames.empty()) {
    throw Error(ErrorKind::EmptySequence, "no associated rgb/depth pairs under " + root.string());
  }

  const std::filesystem::path gt_file = root / "groundtruth.txt";
  if (std::filesystem::exists(gt_file)) {
    std::ifstream in(gt_file);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty() || line[0] == '#') continue;
      std::istringstream s(line);
      double ts, tx, ty, tz, qx, qy, qz, qw;
      if (!(s >> ts >> tx >> ty >> tz >> qx >> qy >> qz >> qw)) {
        throw Error(ErrorKind::MalformedLine,
                    gt_file.string() + ":" + std::to_string(line_no) +
                        ": expected 'timestamp tx ty tz qx qy qz qw'");
      }
      // File stores camera-to-world; invert to the internal convention.
      const CameraPose cam_to_world(Eigen::Quaterniond(qw, qx, qy, qz),
                                    Eigen::Vector3d(tx, ty, tz));
      m.gt_trajectory.push_back({ts, cam_to_world.inverse()});
    }
  }
  return m;
}

void load_masks(SequenceManifest& manifest, const std::filesystem::path& mask_dir) {
  if (!std::filesystem::is_directory(mask_dir)) {
    throw Error(ErrorKind::MissingIndex, "mask directory not found: " + mask_dir.string());
  }
  std::map<std::string, std::filesystem::path> by_stem;
  std::vector<std::filesystem::path> sorted_files;
  for (const auto& entry : std::filesystem::directory_iterator(mask_dir)) {
    if (!entry.is_regular_file()) continue;
    by_stem[entry.path().stem().string()] = entry.path();
    sorted_files.push_back(entry.path());
  }
  std::sort(sorted_files.begin(), sorted_files.end());

  const bool index_fallback = sorted_files.size() == manifest.frames.size();
  for (size_t i = 0; i < manifest.frames.size(); ++i) {
    FrameRecord& rec = manifest.frames[i];
    const std::string stem = std::filesystem::path(rec.rgb_path).stem().string();
    const auto it = by_stem.find(stem);
    if (it != by_stem.end()) {
      rec.mask_path = std::filesystem::relative(it->second, manifest.root).string();
    } else if (index_fallback) {
      rec.mask_path = std::filesystem::relative(sorted_files[i], manifest.root).string();
    } else {
      manifest.missing_masks++;
    }
  }
}

void attach_est_depth(SequenceManifest& manifest, const std::filesystem::path& est_dir) {
  if (!std::filesystem::is_directory(est_dir)) return;
  for (FrameRecord& rec : manifest.frames) {
    const std::filesystem::path candidate =
        est_dir / std::filesystem::path(rec.depth_path).filename();
    if (std::filesystem::exists(candidate)) {
      rec.est_depth_path = std::filesystem::relative(candidate, manifest.root).string();
    }
  }
}

Frame load_frame(const SequenceManifest& manifest, size_t index) {
  const FrameRecord& rec = manifest.frames.at(index);
  Frame f;
  f.timestamp = rec.timestamp;
  f.rgb = read_color_png(manifest.root / rec.rgb_path);
  f.depth = read_depth_png(manifest.root / rec.depth_path, manifest.intrinsics.depth_scale);
  if (!f.depth.same_size(f.rgb)) {
    throw Error(ErrorKind::SizeMismatch, "depth resolution differs from rgb: " + rec.depth_path);
  }
  if (rec.mask_path.empty()) {
    f.static_mask = MaskImage(f.rgb.width(), f.rgb.height(), 1);
  } else {
    f.static_mask = read_mask_png(manifest.root / rec.mask_path);
    if (!f.static_mask.same_size(f.rgb)) {
      throw Error(ErrorKind::SizeMismatch, "mask resolution differs from rgb: " + rec.mask_path);
    }
  }
  if (!rec.est_depth_path.empty()) {
    f.est_depth = read_depth_png(manifest.root / rec.est_depth_path,
                                 manifest.intrinsics.depth_scale);
    if (!f.est_depth.same_size(f.rgb)) {
      throw Error(ErrorKind::SizeMismatch,
                  "estimated depth resolution differs from rgb: " + rec.est_depth_path);
    }
  }
  return f;
}

void write_trajectory_tum(const std::filesystem::path& path,
                          const std::vector<TimedPose>& trajectory) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::MissingIndex, "cannot write " + path.string());
  out.precision(17);
  out << "# timestamp tx ty tz qx qy qz qw\n";
  for (const TimedPose& tp : trajectory) {
    const CameraPose cam_to_world = tp.pose.inverse();
    const Eigen::Vector3d& t = cam_to_world.translation();
    const Eigen::Quaterniond& q = cam_to_world.rotation();
    out << tp.timestamp << " " << t.x() << " " << t.y() << " " << t.z() << " " << q.x() << " "
        << q.y() << " " << q.z() << " " << q.w() << "\n";
  }
}

std::vector<TimedPose> read_trajectory_tum(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::MissingIndex, "cannot read " + path.string());
  std::vector<TimedPose> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream s(line);
    double ts, tx, ty, tz, qx, qy, qz, qw;
    if (!(s >> ts >> tx >> ty >> tz >> qx >> qy >> qz >> qw)) {
      throw Error(ErrorKind::MalformedLine,
                  path.string() + ":" + std::to_string(line_no) + ": bad trajectory line");
    }
    const CameraPose cam_to_world(Eigen::Quaterniond(qw, qx, qy, qz),
                                  Eigen::Vector3d(tx, ty, tz));
    out.push_back({ts, cam_to_world.inverse()});
  }
  return out;
}

}  // namespace gsslam
