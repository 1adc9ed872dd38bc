#include "gsslam/image_io.hpp"

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "gsslam/errors.hpp"

namespace gsslam {

namespace {
cv::Mat read_or_throw(const std::filesystem::path& path, int flags) {
  cv::Mat img = cv::imread(path.string(), flags);
  if (img.empty()) {
    throw Error(ErrorKind::MissingIndex, "cannot read image " + path.string());
  }
  return img;
}
}  // namespace

ColorImage read_color_png(const std::filesystem::path& path) {
  const cv::Mat bgr = read_or_throw(path, cv::IMREAD_COLOR);
  ColorImage out(bgr.cols, bgr.rows);
  for (int y = 0; y < bgr.rows; ++y) {
    for (int x = 0; x < bgr.cols; ++x) {
      const cv::Vec3b& px = bgr.at<cv::Vec3b>(y, x);
      out(x, y) = Eigen::Vector3d(px[2], px[1], px[0]) / 255.0;
    }
  }
  return out;
}

void write_color_png(const std::filesystem::path& path, const ColorImage& img) {
  cv::Mat bgr(img.height(), img.width(), CV_8UC3);
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      const Eigen::Vector3d& c = img(x, y);
      auto quant = [](double v) {
        return static_cast<uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
      };
      bgr.at<cv::Vec3b>(y, x) = cv::Vec3b(quant(c.z()), quant(c.y()), quant(c.x()));
    }
  }
  if (!cv::imwrite(path.string(), bgr)) {
    throw Error(ErrorKind::MissingIndex, "cannot write image " + path.string());
  }
}

GrayImage read_depth_png(const std::filesystem::path& path, double depth_scale) {
  const cv::Mat raw = read_or_throw(path, cv::IMREAD_UNCHANGED);
  if (raw.type() != CV_16UC1) {
    throw Error(ErrorKind::MalformedLine, "expected 16-bit grayscale depth: " + path.string());
  }
  GrayImage out(raw.cols, raw.rows);
  for (int y = 0; y < raw.rows; ++y) {
    for (int x = 0; x < raw.cols; ++x) {
      out(x, y) = static_cast<double>(raw.at<uint16_t>(y, x)) / depth_scale;
    }
  }
  return out;
}

void write_depth_png(const std::filesystem::path& path, const GrayImage& depth,
                     double depth_scale) {
  cv::Mat raw(depth.height(), depth.width(), CV_16UC1);
  for (int y = 0; y < depth.height(); ++y) {
    for (int x = 0; x < depth.width(); ++x) {
      const double v = std::clamp(depth(x, y) * depth_scale, 0.0, 65535.0);
      raw.at<uint16_t>(y, x) = static_cast<uint16_t>(std::lround(v));
    }
  }
  if (!cv::imwrite(path.string(), raw)) {
    throw Error(ErrorKind::MissingIndex, "cannot write image " + path.string());
  }
}

MaskImage read_mask_png(const std::filesystem::path& path) {
  const cv::Mat raw = read_or_throw(path, cv::IMREAD_GRAYSCALE);
  MaskImage out(raw.cols, raw.rows);
  for (int y = 0; y < raw.rows; ++y) {
    for (int x = 0; x < raw.cols; ++x) {
      out(x, y) = raw.at<uint8_t>(y, x) >= 128 ? 1 : 0;
    }
  }
  return out;
}

void write_mask_png(const std::filesystem::path& path, const MaskImage& mask) {
  cv::Mat raw(mask.height(), mask.width(), CV_8UC1);
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      raw.at<uint8_t>(y, x) = mask(x, y) ? 255 : 0;
    }
  }
  if (!cv::imwrite(path.string(), raw)) {
    throw Error(ErrorKind::MissingIndex, "cannot write image " + path.string());
  }
}

}  // namespace gsslam
