#pragma once

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <span>
#include <sstream>
#include <string>
#include <string_view>

#include "foglane/core.hpp"

namespace foglane::depth {

// Per-pixel viewer distance. `normalized` marks maps already on [0,1].
struct DepthMap {
  Plane<float> values;
  bool normalized = false;

  int width() const noexcept { return values.width(); }
  int height() const noexcept { return values.height(); }
};

// Flat-road pinhole approximation: depth falls off as scale / (row - horizon)
// below the horizon, far field above it.
struct GroundPlaneModel {
  double horizon_row = 0.0;
  double scale = 100.0;
  double d_min = 0.5;
  double d_max = 10.0;

  void validate(int height) const {
    if (!(horizon_row >= 0.0 && horizon_row < height)) {
      throw ParameterError("horizon row " + std::to_string(horizon_row) +
                           " outside image of height " + std::to_string(height));
    }
    if (!(scale > 0.0)) throw ParameterError("ground-plane scale must be > 0");
    if (!(d_min > 0.0 && d_min < d_max)) {
      throw ParameterError("ground-plane depth bounds need 0 < d_min < d_max");
    }
  }
};

inline DepthMap normalize_depth(DepthMap d) {
  const auto v = d.values.values();
  for (float x : v) {
    if (x < 0.0f || std::isnan(x)) throw ParameterError("depth values must be >= 0");
  }
  const float peak = v.empty() ? 0.0f : *std::max_element(v.begin(), v.end());
  if (peak > 0.0f) {
    for (float& x : v) x /= peak;
  }
  d.normalized = true;
  return d;
}

// Raw (unnormalized) depth for a single row under the ground-plane model.
inline double ground_plane_row_depth(const GroundPlaneModel& m, int row) {
  const double dy = row - m.horizon_row;
  if (dy <= 0.0) return m.d_max;
  return std::clamp(m.scale / dy, m.d_min, m.d_max);
}

inline DepthMap synth_ground_plane_depth(int width, int height, const GroundPlaneModel& model) {
  if (width < 1 || height < 1) throw ParameterError("depth dimensions must be >= 1");
  model.validate(height);
  DepthMap out{Plane<float>(width, height), true};
  for (int y = 0; y < height; ++y) {
    const auto v = static_cast<float>(ground_plane_row_depth(model, y) / model.d_max);
    auto row = out.values.row(y);
    std::fill(row.begin(), row.end(), v);
  }
  return out;
}

// Decodes a single-channel PFM ("Pf") buffer. Rows are stored bottom-up;
// the sign of the scale field selects endianness (negative = little).
inline DepthMap parse_pfm(std::span<const std::uint8_t> bytes) {
  std::string_view text(reinterpret_cast<const char*>(bytes.data()), bytes.size());
  std::size_t pos = 0;
  auto next_token = [&]() -> std::string {
    while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
    const std::size_t start = pos;
    while (pos < text.size() && !std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
    return std::string(text.substr(start, pos - start));
  };

  const std::string magic = next_token();
  if (magic == "PF") throw IngestionError("color PFM is not a depth map");
  if (magic != "Pf") throw IngestionError("not a PFM file");

  int width = 0;
  int height = 0;
  double scale = 0.0;
  try {
    width = std::stoi(next_token());
    height = std::stoi(next_token());
    scale = std::stod(next_token());
  } catch (const std::exception&) {
    throw IngestionError("malformed PFM header");
  }
  if (width < 1 || height < 1 || scale == 0.0) throw IngestionError("malformed PFM header");
  // Exactly one whitespace byte separates the header from the payload.
  ++pos;

  const std::size_t count = static_cast<std::size_t>(width) * height;
  if (pos > bytes.size() || bytes.size() - pos < count * 4) {
    throw IngestionError("truncated PFM payload");
  }

  const bool little = scale < 0.0;
  const bool swap = little != (std::endian::native == std::endian::little);
  DepthMap out{Plane<float>(width, height), false};
  const std::uint8_t* src = bytes.data() + pos;
  for (int y = 0; y < height; ++y) {
    auto row = out.values.row(height - 1 - y);
    for (int x = 0; x < width; ++x, src += 4) {
      std::uint32_t word;
      std::memcpy(&word, src, 4);
      if (swap) {
        word = ((word & 0xFFu) << 24) | ((word & 0xFF00u) << 8) | ((word >> 8) & 0xFF00u) |
               (word >> 24);
      }
      float v;
      std::memcpy(&v, &word, 4);
      if (!(v >= 0.0f) || std::isinf(v)) throw IngestionError("PFM depth must be finite and >= 0");
      row[x] = v;
    }
  }
  return out;
}

inline std::string encode_pfm(const DepthMap& d) {
  std::ostringstream os;
  os << "Pf\n" << d.width() << ' ' << d.height() << "\n"
     << (std::endian::native == std::endian::little ? "-1.0" : "1.0") << "\n";
  for (int y = d.height() - 1; y >= 0; --y) {
    const auto row = d.values.row(y);
    os.write(reinterpret_cast<const char*>(row.data()),
             static_cast<std::streamsize>(row.size() * sizeof(float)));
  }
  return os.str();
}

}  // namespace foglane::depth
