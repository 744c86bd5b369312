#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace foglane {

// Error taxonomy shared by every module.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ParameterError : Error {
  using Error::Error;
};

struct ShapeError : Error {
  using Error::Error;
};

struct IngestionError : Error {
  using Error::Error;
};

struct EvaluationError : Error {
  using Error::Error;
};

struct ParseError : Error {
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// Plane
//
// Row-major H×W scalar field. Used for depth, transmittance, dark channel,
// and binary edge maps.
template <typename T>
class Plane {
 public:
  using value_type = T;

  Plane() = default;
  Plane(int width, int height, T fill = T{}) : width_(width), height_(height) {
    if (width < 0 || height < 0) {
      throw ShapeError("negative plane dimensions");
    }
    data_.assign(static_cast<std::size_t>(width) * height, fill);
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  T& operator()(int x, int y) { return data_[index(x, y)]; }
  const T& operator()(int x, int y) const { return data_[index(x, y)]; }

  std::span<T> row(int y) {
    return {data_.data() + static_cast<std::size_t>(y) * width_, static_cast<std::size_t>(width_)};
  }
  std::span<const T> row(int y) const {
    return {data_.data() + static_cast<std::size_t>(y) * width_, static_cast<std::size_t>(width_)};
  }

  std::span<T> values() noexcept { return data_; }
  std::span<const T> values() const noexcept { return data_; }

  bool same_shape(const Plane& o) const noexcept {
    return width_ == o.width_ && height_ == o.height_;
  }

  friend bool operator==(const Plane&, const Plane&) = default;

 private:
  std::size_t index(int x, int y) const noexcept {
    return static_cast<std::size_t>(y) * width_ + x;
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

// Image
//
// Interleaved RGB raster with channel values in [0,1].
class Image {
 public:
  static constexpr int channels = 3;

  Image() = default;
  Image(int width, int height, float fill = 0.0f) : width_(width), height_(height) {
    if (width < 1 || height < 1) {
      throw ShapeError("image dimensions must be >= 1");
    }
    data_.assign(static_cast<std::size_t>(width) * height * channels, fill);
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t pixel_count() const noexcept {
    return static_cast<std::size_t>(width_) * height_;
  }

  float& at(int x, int y, int c) { return data_[index(x, y) + c]; }
  float at(int x, int y, int c) const { return data_[index(x, y) + c]; }

  std::span<float, channels> pixel(int x, int y) {
    return std::span<float, channels>(data_.data() + index(x, y), channels);
  }
  std::span<const float, channels> pixel(int x, int y) const {
    return std::span<const float, channels>(data_.data() + index(x, y), channels);
  }

  void set(int x, int y, float r, float g, float b) {
    auto p = pixel(x, y);
    p[0] = r;
    p[1] = g;
    p[2] = b;
  }

  std::span<float> values() noexcept { return data_; }
  std::span<const float> values() const noexcept { return data_; }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  std::size_t index(int x, int y) const noexcept {
    return (static_cast<std::size_t>(y) * width_ + x) * channels;
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<float> data_;
};

// Binary {0,1} map.
using EdgeMap = Plane<std::uint8_t>;

inline std::size_t popcount(const EdgeMap& m) {
  return static_cast<std::size_t>(std::count_if(m.values().begin(), m.values().end(),
                                                [](std::uint8_t v) { return v != 0; }));
}

inline std::uint8_t quantize8(float v) {
  const float c = std::clamp(v, 0.0f, 1.0f);
  return static_cast<std::uint8_t>(c * 255.0f + 0.5f);
}

}  // namespace foglane
