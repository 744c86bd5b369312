#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "foglane/core.hpp"
#include "foglane/depth.hpp"

namespace foglane::fog {

struct DarkChannelMap {
  Plane<float> values;
  int window = 1;
};

struct TransmittanceMap {
  Plane<float> values;
};

struct FogParams {
  double beta = 4.0;
  std::optional<double> atmospheric_light;
  int dc_window = 15;
  double bright_percentile = 0.001;

  void validate() const {
    if (!(beta >= 0.0) || std::isinf(beta)) throw ParameterError("beta must be >= 0");
    if (atmospheric_light && !(*atmospheric_light >= 0.0 && *atmospheric_light <= 1.0)) {
      throw ParameterError("atmospheric light must lie in [0,1]");
    }
    if (dc_window < 1 || dc_window % 2 == 0) {
      throw ParameterError("dark-channel window must be odd and >= 1");
    }
    if (!(bright_percentile > 0.0 && bright_percentile <= 1.0)) {
      throw ParameterError("bright-pixel percentile must lie in (0,1]");
    }
  }
};

namespace detail {

// Sliding minimum over [i - radius, i + radius] clipped to [0, n). Reads
// n samples spaced `stride` apart starting at `src`, writes likewise to `dst`.
inline void clipped_min_1d(const float* src, float* dst, int n, std::ptrdiff_t stride, int radius,
                           std::vector<int>& queue) {
  queue.clear();
  std::size_t head = 0;
  int pushed = 0;
  for (int i = 0; i < n; ++i) {
    const int hi = std::min(n - 1, i + radius);
    while (pushed <= hi) {
      const float v = src[pushed * stride];
      while (queue.size() > head && src[queue.back() * stride] >= v) queue.pop_back();
      queue.push_back(pushed);
      ++pushed;
    }
    while (queue[head] < i - radius) ++head;
    dst[i * stride] = src[queue[head] * stride];
  }
}

}  // namespace detail

// Minimum over colour channels and over the window around each pixel. The
// window shrinks at the image border rather than reading padding.
inline DarkChannelMap dark_channel(const Image& img, int window) {
  if (window < 1 || window % 2 == 0) {
    throw ParameterError("dark-channel window must be odd and >= 1, got " +
                         std::to_string(window));
  }
  const int w = img.width();
  const int h = img.height();
  Plane<float> channel_min(w, h);
  const auto src = img.values();
  auto cm = channel_min.values();
  for (std::size_t i = 0; i < cm.size(); ++i) {
    cm[i] = std::min({src[3 * i], src[3 * i + 1], src[3 * i + 2]});
  }

  const int radius = window / 2;
  DarkChannelMap out{Plane<float>(w, h), window};
  if (radius == 0) {
    out.values = std::move(channel_min);
    return out;
  }

  // A clipped rectangle minimum separates into row then column passes.
  Plane<float> rows(w, h);
  std::vector<int> queue;
  queue.reserve(static_cast<std::size_t>(std::max(w, h)));
  for (int y = 0; y < h; ++y) {
    detail::clipped_min_1d(channel_min.row(y).data(), rows.row(y).data(), w, 1, radius, queue);
  }
  for (int x = 0; x < w; ++x) {
    detail::clipped_min_1d(rows.values().data() + x, out.values.values().data() + x, h, w, radius,
                           queue);
  }
  return out;
}

// Airlight from the brightest `percentile` of dark-channel pixels: the
// largest channel value among the selected pixels. Ties on the dark value
// prefer the smaller row-major index.
inline double estimate_atmospheric_light(const Image& img, const DarkChannelMap& dark,
                                         double percentile) {
  if (!(percentile > 0.0 && percentile <= 1.0)) {
    throw ParameterError("percentile must lie in (0,1]");
  }
  if (dark.values.width() != img.width() || dark.values.height() != img.height()) {
    throw ShapeError("dark channel does not match image dimensions");
  }
  const std::size_t n = img.pixel_count();
  const std::size_t k =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(percentile * static_cast<double>(n))));

  const auto dv = dark.values.values();
  std::vector<std::uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0u);
  auto brighter = [&](std::uint32_t a, std::uint32_t b) {
    return dv[a] > dv[b] || (dv[a] == dv[b] && a < b);
  };
  if (k < n) {
    std::nth_element(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                     brighter);
  }

  const auto px = img.values();
  float best = 0.0f;
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t p = order[i];
    best = std::max({best, px[3 * p], px[3 * p + 1], px[3 * p + 2]});
  }
  return best;
}

inline TransmittanceMap transmittance(const depth::DepthMap& d, double beta) {
  if (!(beta >= 0.0) || std::isinf(beta)) throw ParameterError("beta must be >= 0");
  TransmittanceMap out{Plane<float>(d.width(), d.height())};
  const auto src = d.values.values();
  auto dst = out.values.values();
  for (std::size_t i = 0; i < src.size(); ++i) {
    dst[i] = static_cast<float>(std::exp(-beta * static_cast<double>(src[i])));
  }
  return out;
}

// I = J·t + A·(1 − t) per channel, clamped to [0,1].
inline Image compose_fog(const Image& clear, const TransmittanceMap& t, double airlight) {
  if (t.values.width() != clear.width() || t.values.height() != clear.height()) {
    throw ShapeError("transmittance " + std::to_string(t.values.width()) + "x" +
                     std::to_string(t.values.height()) + " does not match image " +
                     std::to_string(clear.width()) + "x" + std::to_string(clear.height()));
  }
  if (!(airlight >= 0.0 && airlight <= 1.0)) {
    throw ParameterError("atmospheric light must lie in [0,1]");
  }
  Image out(clear.width(), clear.height());
  const auto a = static_cast<float>(airlight);
  const auto tv = t.values.values();
  const auto src = clear.values();
  auto dst = out.values();
  for (std::size_t i = 0; i < tv.size(); ++i) {
    const float ti = tv[i];
    const float haze = a * (1.0f - ti);
    for (int c = 0; c < 3; ++c) {
      dst[3 * i + c] = std::clamp(src[3 * i + c] * ti + haze, 0.0f, 1.0f);
    }
  }
  return out;
}

struct FogResult {
  Image image;
  double atmospheric_light = 0.0;
};

// Full pipeline for one image: airlight (estimated unless overridden),
// transmittance from the depth map (normalized first if it is not already),
// composition.
inline FogResult synthesize(const Image& clear, const depth::DepthMap& d, const FogParams& params) {
  params.validate();
  if (d.width() != clear.width() || d.height() != clear.height()) {
    throw ShapeError("depth map does not match image dimensions");
  }
  double airlight = 0.0;
  if (params.atmospheric_light) {
    airlight = *params.atmospheric_light;
  } else {
    const auto dark = dark_channel(clear, params.dc_window);
    airlight = estimate_atmospheric_light(clear, dark, params.bright_percentile);
  }
  const auto t = transmittance(d.normalized ? d : depth::normalize_depth(d), params.beta);
  return {compose_fog(clear, t, airlight), airlight};
}

}  // namespace foglane::fog
