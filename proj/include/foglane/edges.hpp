#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "foglane/annotation.hpp"
#include "foglane/core.hpp"
#include "foglane/raster.hpp"

namespace foglane::edges {

struct CannyParams {
  double gaussian_sigma = 1.4;
  double low_threshold = 50.0;
  double high_threshold = 150.0;

  void validate() const {
    if (!(gaussian_sigma > 0.0)) throw ParameterError("gaussian sigma must be > 0");
    if (!(low_threshold >= 0.0 && low_threshold < high_threshold)) {
      throw ParameterError("canny thresholds need 0 <= low < high");
    }
  }
};

inline constexpr int kStrokeWidth = 3;

namespace detail {

inline Plane<float> luma255(const Image& img) {
  Plane<float> g(img.width(), img.height());
  const auto src = img.values();
  auto dst = g.values();
  for (std::size_t i = 0; i < dst.size(); ++i) {
    dst[i] = 255.0f * (0.299f * src[3 * i] + 0.587f * src[3 * i + 1] + 0.114f * src[3 * i + 2]);
  }
  return g;
}

inline std::vector<float> gaussian_kernel(double sigma) {
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<float> k(static_cast<std::size_t>(2 * radius + 1));
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    const double v = std::exp(-(i * i) / (2.0 * sigma * sigma));
    k[static_cast<std::size_t>(i + radius)] = static_cast<float>(v);
    sum += v;
  }
  for (auto& v : k) v = static_cast<float>(v / sum);
  return k;
}

// Separable convolution with replicated borders.
inline Plane<float> blur(const Plane<float>& src, const std::vector<float>& k) {
  const int w = src.width();
  const int h = src.height();
  const int r = static_cast<int>(k.size() / 2);
  Plane<float> tmp(w, h);
  Plane<float> out(w, h);
  for (int y = 0; y < h; ++y) {
    const auto in = src.row(y);
    auto o = tmp.row(y);
    for (int x = 0; x < w; ++x) {
      float acc = 0.0f;
      for (int i = -r; i <= r; ++i) acc += k[static_cast<std::size_t>(i + r)] * in[std::clamp(x + i, 0, w - 1)];
      o[x] = acc;
    }
  }
  for (int y = 0; y < h; ++y) {
    auto o = out.row(y);
    for (int x = 0; x < w; ++x) {
      float acc = 0.0f;
      for (int i = -r; i <= r; ++i) acc += k[static_cast<std::size_t>(i + r)] * tmp(x, std::clamp(y + i, 0, h - 1));
      o[x] = acc;
    }
  }
  return out;
}

struct Gradients {
  Plane<float> gx;
  Plane<float> gy;
  Plane<float> mag;
};

inline Gradients sobel(const Plane<float>& s) {
  const int w = s.width();
  const int h = s.height();
  Gradients g{Plane<float>(w, h), Plane<float>(w, h), Plane<float>(w, h)};
  auto at = [&](int x, int y) { return s(std::clamp(x, 0, w - 1), std::clamp(y, 0, h - 1)); };
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const float gx = (at(x + 1, y - 1) + 2.0f * at(x + 1, y) + at(x + 1, y + 1)) -
                       (at(x - 1, y - 1) + 2.0f * at(x - 1, y) + at(x - 1, y + 1));
      const float gy = (at(x - 1, y + 1) + 2.0f * at(x, y + 1) + at(x + 1, y + 1)) -
                       (at(x - 1, y - 1) + 2.0f * at(x, y - 1) + at(x + 1, y - 1));
      g.gx(x, y) = gx;
      g.gy(x, y) = gy;
      g.mag(x, y) = std::sqrt(gx * gx + gy * gy);
    }
  }
  return g;
}

// Keeps local maxima along the gradient direction, quantized to 0°, 45°,
// 90°, 135°. Plateaus resolve toward the neighbour with the smaller x + y
// (strict against it, non-strict against the other); the 135° axis has no
// such order and keeps ties on both sides. Magnitudes within a relative
// 1e-4 count as ties, so float rounding in the separable blur cannot pick
// the winner.
inline Plane<float> non_max_suppression(const Gradients& g) {
  constexpr float kTan22_5 = 0.41421356f;
  const int w = g.mag.width();
  const int h = g.mag.height();
  Plane<float> out(w, h);
  auto mag = [&](int x, int y) {
    return (x < 0 || y < 0 || x >= w || y >= h) ? 0.0f : g.mag(x, y);
  };
  constexpr float kTie = 1e-4f;
  auto above = [&](float m, float n) { return m - n > kTie * m; };
  auto not_below = [&](float m, float n) { return n - m <= kTie * m; };
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const float m = g.mag(x, y);
      if (m <= 0.0f) continue;
      const float ax = std::abs(g.gx(x, y));
      const float ay = std::abs(g.gy(x, y));
      bool keep = false;
      if (ay <= kTan22_5 * ax) {
        keep = above(m, mag(x - 1, y)) && not_below(m, mag(x + 1, y));
      } else if (ax <= kTan22_5 * ay) {
        keep = above(m, mag(x, y - 1)) && not_below(m, mag(x, y + 1));
      } else if ((g.gx(x, y) > 0.0f) == (g.gy(x, y) > 0.0f)) {
        keep = above(m, mag(x - 1, y - 1)) && not_below(m, mag(x + 1, y + 1));
      } else {
        keep = not_below(m, mag(x + 1, y - 1)) && not_below(m, mag(x - 1, y + 1));
      }
      if (keep) out(x, y) = m;
    }
  }
  return out;
}

inline EdgeMap hysteresis(const Plane<float>& nms, double low, double high) {
  const int w = nms.width();
  const int h = nms.height();
  EdgeMap out(w, h);
  std::vector<std::pair<int, int>> stack;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (nms(x, y) >= high && !out(x, y)) {
        out(x, y) = 1;
        stack.emplace_back(x, y);
        while (!stack.empty()) {
          const auto [cx, cy] = stack.back();
          stack.pop_back();
          for (int dy = -1; dy <= 1; ++dy) {
            for (int dx = -1; dx <= 1; ++dx) {
              const int nx = cx + dx;
              const int ny = cy + dy;
              if (nx < 0 || ny < 0 || nx >= w || ny >= h || out(nx, ny)) continue;
              const float v = nms(nx, ny);
              if (v > 0.0f && v >= low) {
                out(nx, ny) = 1;
                stack.emplace_back(nx, ny);
              }
            }
          }
        }
      }
    }
  }
  return out;
}

}  // namespace detail

// Classical Canny: luma, Gaussian blur, Sobel, 4-direction NMS, hysteresis.
// Thresholds are on the 8-bit gradient-magnitude scale.
inline EdgeMap canny(const Image& img, const CannyParams& params = {}) {
  params.validate();
  const auto gray = detail::luma255(img);
  const auto smooth = detail::blur(gray, detail::gaussian_kernel(params.gaussian_sigma));
  const auto grads = detail::sobel(smooth);
  const auto thin = detail::non_max_suppression(grads);
  return detail::hysteresis(thin, params.low_threshold, params.high_threshold);
}

// Lane centerlines as binary strokes on a canvas of the set's image size.
inline EdgeMap render_lane_strokes(const annot::LaneSet& set, int stroke_width = kStrokeWidth) {
  if (stroke_width < 1) throw ParameterError("stroke width must be >= 1");
  EdgeMap out(set.image_width, set.image_height);
  for (const auto& lane : set.lanes) {
    const auto mask = raster::rasterize_lane(lane, set.image_width, set.image_height, stroke_width);
    for (int y = 0; y < mask.height(); ++y) {
      auto row = out.row(y);
      for (const auto& s : mask.row(y)) std::fill(row.begin() + s.x0, row.begin() + s.x1 + 1, 1);
    }
  }
  return out;
}

inline EdgeMap merge_edge_label(const EdgeMap& canny_map, const EdgeMap& lane_map) {
  if (!canny_map.same_shape(lane_map)) throw ShapeError("edge maps differ in size");
  EdgeMap out(canny_map.width(), canny_map.height());
  const auto a = canny_map.values();
  const auto b = lane_map.values();
  auto o = out.values();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = (a[i] | b[i]) ? 1 : 0;
  return out;
}

// Block-max pooling; a trailing partial block is cropped.
inline EdgeMap downsample_label(const EdgeMap& map, int factor) {
  if (factor < 1) throw ParameterError("downsample factor must be >= 1");
  if (factor == 1) return map;
  const int ow = map.width() / factor;
  const int oh = map.height() / factor;
  EdgeMap out(ow, oh);
  for (int y = 0; y < oh * factor; ++y) {
    const auto row = map.row(y);
    for (int x = 0; x < ow * factor; ++x) {
      if (row[x]) out(x / factor, y / factor) = 1;
    }
  }
  return out;
}

}  // namespace foglane::edges
