#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "foglane/core.hpp"
#include "foglane/depth.hpp"

// File-backed image, depth and text helpers. Encoding and decoding of PNG
// and JPEG go through OpenCV's codecs.
namespace foglane::io {

namespace fs = std::filesystem;

inline std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IngestionError("cannot open " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IngestionError("cannot read " + p.string());
  return ss.str();
}

inline std::vector<std::uint8_t> read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IngestionError("cannot open " + p.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_text(const fs::path& p, std::string_view text) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + p.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw Error("write failed for " + p.string());
}

inline Image from_mat(const cv::Mat& bgr8) {
  Image img(bgr8.cols, bgr8.rows);
  for (int y = 0; y < bgr8.rows; ++y) {
    const auto* src = bgr8.ptr<cv::Vec3b>(y);
    for (int x = 0; x < bgr8.cols; ++x) {
      img.set(x, y, src[x][2] / 255.0f, src[x][1] / 255.0f, src[x][0] / 255.0f);
    }
  }
  return img;
}

inline cv::Mat to_mat(const Image& img) {
  cv::Mat bgr(img.height(), img.width(), CV_8UC3);
  for (int y = 0; y < img.height(); ++y) {
    auto* dst = bgr.ptr<cv::Vec3b>(y);
    for (int x = 0; x < img.width(); ++x) {
      const auto p = img.pixel(x, y);
      dst[x] = cv::Vec3b(quantize8(p[2]), quantize8(p[1]), quantize8(p[0]));
    }
  }
  return bgr;
}

// 8-bit colour (or grey) PNG/JPEG, linearized by v/255.
inline Image load_image(const fs::path& p) {
  cv::Mat m = cv::imread(p.string(), cv::IMREAD_COLOR);
  if (m.empty()) throw IngestionError("cannot decode image " + p.string());
  return from_mat(m);
}

inline void save_mat(const fs::path& p, const cv::Mat& m) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  bool ok = false;
  try {
    ok = cv::imwrite(p.string(), m);
  } catch (const cv::Exception& e) {
    throw Error("cannot encode " + p.string() + ": " + e.what());
  }
  if (!ok) throw Error("cannot encode " + p.string());
}

inline void save_image(const fs::path& p, const Image& img) { save_mat(p, to_mat(img)); }

inline void save_edge_map(const fs::path& p, const EdgeMap& m) {
  cv::Mat out(m.height(), m.width(), CV_8UC1);
  for (int y = 0; y < m.height(); ++y) {
    const auto row = m.row(y);
    auto* dst = out.ptr<std::uint8_t>(y);
    for (int x = 0; x < m.width(); ++x) dst[x] = row[x] ? 255 : 0;
  }
  save_mat(p, out);
}

inline EdgeMap load_edge_map(const fs::path& p) {
  cv::Mat m = cv::imread(p.string(), cv::IMREAD_GRAYSCALE);
  if (m.empty()) throw IngestionError("cannot decode " + p.string());
  EdgeMap out(m.cols, m.rows);
  for (int y = 0; y < m.rows; ++y) {
    const auto* src = m.ptr<std::uint8_t>(y);
    for (int x = 0; x < m.cols; ++x) out(x, y) = src[x] >= 128 ? 1 : 0;
  }
  return out;
}

// 16-bit grey PNG (value / 65535, normalized) or single-channel PFM (raw).
inline depth::DepthMap load_depth(const fs::path& p) {
  auto ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  if (ext == ".pfm") {
    const auto bytes = read_bytes(p);
    return depth::parse_pfm(bytes);
  }
  if (ext != ".png") throw IngestionError("unsupported depth format: " + p.string());
  cv::Mat m = cv::imread(p.string(), cv::IMREAD_UNCHANGED);
  if (m.empty()) throw IngestionError("cannot decode depth " + p.string());
  if (m.depth() != CV_16U || m.channels() != 1) {
    throw IngestionError("depth PNG must be 16-bit single channel: " + p.string());
  }
  depth::DepthMap d{Plane<float>(m.cols, m.rows), true};
  for (int y = 0; y < m.rows; ++y) {
    const auto* src = m.ptr<std::uint16_t>(y);
    auto row = d.values.row(y);
    for (int x = 0; x < m.cols; ++x) row[x] = static_cast<float>(src[x] / 65535.0);
  }
  return d;
}

// Loads a depth map and checks it against the paired image size.
inline depth::DepthMap load_depth(const fs::path& p, int width, int height) {
  auto d = load_depth(p);
  if (d.width() != width || d.height() != height) {
    throw IngestionError("depth " + p.string() + " is " + std::to_string(d.width()) + "x" +
                         std::to_string(d.height()) + ", image is " + std::to_string(width) + "x" +
                         std::to_string(height));
  }
  return d;
}

// Writes a [0,1] depth map as 16-bit PNG (or PFM by extension).
inline void save_depth(const fs::path& p, const depth::DepthMap& d) {
  if (p.extension() == ".pfm") {
    write_text(p, depth::encode_pfm(d));
    return;
  }
  cv::Mat m(d.height(), d.width(), CV_16UC1);
  for (int y = 0; y < d.height(); ++y) {
    const auto row = d.values.row(y);
    auto* dst = m.ptr<std::uint16_t>(y);
    for (int x = 0; x < d.width(); ++x) {
      const double v = std::clamp(static_cast<double>(row[x]), 0.0, 1.0);
      dst[x] = static_cast<std::uint16_t>(v * 65535.0 + 0.5);
    }
  }
  save_mat(p, m);
}

// Bilinear resample of an 8-bit image.
inline cv::Mat resize_bilinear(const cv::Mat& src, int width, int height) {
  if (src.cols == width && src.rows == height) return src;
  cv::Mat out;
  cv::resize(src, out, cv::Size(width, height), 0, 0, cv::INTER_LINEAR);
  return out;
}

inline Image resize_bilinear(const Image& img, int width, int height) {
  return from_mat(resize_bilinear(to_mat(img), width, height));
}

// `<rel without extension><suffix>` under root; a leading '/' in rel is
// ignored (CULane list files start with one).
inline fs::path sidecar(const fs::path& root, std::string_view rel, std::string_view suffix) {
  while (!rel.empty() && rel.front() == '/') rel.remove_prefix(1);
  fs::path p = root / fs::path(std::string(rel));
  p.replace_extension();
  p += std::string(suffix);
  return p;
}

}  // namespace foglane::io
