#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "gsslam/frame.hpp"
#include "gsslam/metrics.hpp"
#include "gsslam/pose.hpp"

namespace gsslam {

struct FrameRecord {
  double timestamp = 0.0;
  std::string rgb_path;    // relative to the sequence root
  std::string depth_path;
  std::string mask_path;       // empty: all-static fallback
  std::string est_depth_path;  // empty: no hole filling
};

struct SequenceManifest {
  std::filesystem::path root;
  std::vector<FrameRecord> frames;   // strictly increasing timestamps
  Intrinsics intrinsics;
  std::vector<TimedPose> gt_trajectory;  // world-to-camera, may be empty
  int dropped_frames = 0;   // rgb/depth entries without a partner in tolerance
  int missing_masks = 0;    // frames that fell back to an all-static mask
};

// Parses rgb.txt/depth.txt (lines "timestamp path", '#' comments), matches
// entries by nearest timestamp within assoc_tol, and loads groundtruth.txt
// when present (lines "timestamp tx ty tz qx qy qz qw", camera-to-world;
// converted to world-to-camera). Throws Error(MissingIndex/EmptySequence/
// MalformedLine).
SequenceManifest load_tum_sequence(const std::filesystem::path& root, const Intrinsics& K,
                                   double assoc_tol = 0.02);

// Attaches one 8-bit mask image per frame from mask_dir, matched by RGB
// filename stem, else by sorted position when the counts line up. Missing
// files leave mask_path empty (all-static with a warning count).
void load_masks(SequenceManifest& manifest, const std::filesystem::path& mask_dir);

// Attaches estimated-depth files (same naming as depth) when the directory
// exists; absent directory disables hole filling.
void attach_est_depth(SequenceManifest& manifest, const std::filesystem::path& est_dir);

// Decodes one frame. Depth is raw/depth_scale meters; masks decode with
// >=128 = static; throws Error(SizeMismatch) when a mask resolution
// differs from the RGB.
Frame load_frame(const SequenceManifest& manifest, size_t index);

// TUM-format trajectory files: "timestamp tx ty tz qx qy qz qw" per line,
// camera-to-world convention, full double precision.
void write_trajectory_tum(const std::filesystem::path& path,
                          const std::vector<TimedPose>& trajectory);
std::vector<TimedPose> read_trajectory_tum(const std::filesystem::path& path);

}  // namespace gsslam
