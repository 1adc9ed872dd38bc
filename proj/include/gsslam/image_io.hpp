#pragma once

#include <filesystem>

#include "gsslam/image.hpp"

namespace gsslam {

// 8-bit color image, values scaled to [0,1].
ColorImage read_color_png(const std::filesystem::path& path);
void write_color_png(const std::filesystem::path& path, const ColorImage& img);

// 16-bit depth image; raw values divided by depth_scale on read and
// multiplied (then rounded) on write. Zero stays the invalid marker.
GrayImage read_depth_png(const std::filesystem::path& path, double depth_scale);
void write_depth_png(const std::filesystem::path& path, const GrayImage& depth,
                     double depth_scale);

// 8-bit grayscale mask; values >= 128 map to 1.
MaskImage read_mask_png(const std::filesystem::path& path);
void write_mask_png(const std::filesystem::path& path, const MaskImage& mask);

}  // namespace gsslam
