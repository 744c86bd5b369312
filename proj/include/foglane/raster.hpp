#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <span>
#include <vector>

#include "foglane/annotation.hpp"
#include "foglane/core.hpp"

namespace foglane::raster {

// Inclusive run of set pixels on one row.
struct Span {
  int x0 = 0;
  int x1 = 0;
  friend bool operator==(const Span&, const Span&) = default;
};

// Binary mask of one stroked lane, stored as sorted disjoint runs per row.
class LaneMask {
 public:
  LaneMask() = default;
  LaneMask(int width, int height, int line_width)
      : width_(width), height_(height), line_width_(line_width), offsets_(height + 1, 0) {}

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  int line_width() const noexcept { return line_width_; }
  std::size_t count() const noexcept { return count_; }
  bool empty() const noexcept { return count_ == 0; }

  std::span<const Span> row(int y) const {
    return {spans_.data() + offsets_[y], offsets_[y + 1] - offsets_[y]};
  }

  bool test(int x, int y) const {
    for (const auto& s : row(y)) {
      if (x < s.x0) return false;
      if (x <= s.x1) return true;
    }
    return false;
  }

  EdgeMap to_map() const {
    EdgeMap m(width_, height_);
    for (int y = 0; y < height_; ++y) {
      auto r = m.row(y);
      for (const auto& s : row(y)) std::fill(r.begin() + s.x0, r.begin() + s.x1 + 1, 1);
    }
    return m;
  }

  friend bool operator==(const LaneMask&, const LaneMask&) = default;

 private:
  friend class MaskBuilder;

  int width_ = 0;
  int height_ = 0;
  int line_width_ = 1;
  std::size_t count_ = 0;
  std::vector<std::size_t> offsets_;
  std::vector<Span> spans_;
};

// Accumulates unsorted, possibly overlapping runs row by row (rows in
// ascending order) and emits a canonical LaneMask.
class MaskBuilder {
 public:
  MaskBuilder(int width, int height, int line_width) : mask_(width, height, line_width) {}

  void add(int y, int x0, int x1) {
    x0 = std::max(x0, 0);
    x1 = std::min(x1, mask_.width_ - 1);
    if (y < 0 || y >= mask_.height_ || x0 > x1) return;
    pending_.push_back({y, {x0, x1}});
  }

  LaneMask finish() && {
    std::sort(pending_.begin(), pending_.end(), [](const Item& a, const Item& b) {
      return a.y != b.y ? a.y < b.y : a.span.x0 < b.span.x0;
    });
    auto& m = mask_;
    std::size_t i = 0;
    for (int y = 0; y < m.height_; ++y) {
      m.offsets_[y] = m.spans_.size();
      while (i < pending_.size() && pending_[i].y == y) {
        const Span s = pending_[i].span;
        if (m.spans_.size() > m.offsets_[y] && s.x0 <= m.spans_.back().x1 + 1) {
          m.spans_.back().x1 = std::max(m.spans_.back().x1, s.x1);
        } else {
          m.spans_.push_back(s);
        }
        ++i;
      }
    }
    m.offsets_[m.height_] = m.spans_.size();
    for (const auto& s : m.spans_) m.count_ += static_cast<std::size_t>(s.x1 - s.x0 + 1);
    return std::move(mask_);
  }

 private:
  struct Item {
    int y;
    Span span;
  };
  LaneMask mask_;
  std::vector<Item> pending_;
};

namespace detail {

inline constexpr double kEps = 1e-9;

struct Interval {
  double lo = 1.0;
  double hi = 0.0;
  bool valid() const { return lo <= hi; }
};

// {x : a·x + b ∈ [lo, hi]}
inline Interval solve_linear(double a, double b, double lo, double hi) {
  if (std::abs(a) < 1e-12) {
    return (b >= lo && b <= hi) ? Interval{-1e300, 1e300} : Interval{};
  }
  double x0 = (lo - b) / a;
  double x1 = (hi - b) / a;
  if (x0 > x1) std::swap(x0, x1);
  return {x0, x1};
}

inline Interval intersect(Interval a, Interval b) {
  return {std::max(a.lo, b.lo), std::min(a.hi, b.hi)};
}

inline Interval hull(Interval a, Interval b) {
  if (!a.valid()) return b;
  if (!b.valid()) return a;
  return {std::min(a.lo, b.lo), std::max(a.hi, b.hi)};
}

inline Interval disk_row(const annot::Point& c, double r, double ys) {
  const double dy = ys - c.y;
  if (std::abs(dy) > r) return {};
  const double half = std::sqrt(std::max(0.0, r * r - dy * dy));
  return {c.x - half, c.x + half};
}

// Horizontal cross-section of the capsule around segment p→q at row ys.
inline Interval capsule_row(const annot::Point& p, const annot::Point& q, double r, double ys) {
  Interval out = hull(disk_row(p, r, ys), disk_row(q, r, ys));
  const double dx = q.x - p.x;
  const double dy = q.y - p.y;
  const double len = std::hypot(dx, dy);
  if (len > 0.0) {
    const double ux = dx / len;
    const double uy = dy / len;
    const double ry = ys - p.y;
    // along-segment coordinate s = ux·(x − px) + uy·ry ∈ [0, len]
    const Interval along = solve_linear(ux, -ux * p.x + uy * ry, 0.0, len);
    // signed normal distance n = −uy·(x − px) + ux·ry ∈ [−r, r]
    const Interval across = solve_linear(-uy, uy * p.x + ux * ry, -r, r);
    out = hull(out, intersect(along, across));
  }
  return out;
}

inline void bresenham(int x0, int y0, int x1, int y1, MaskBuilder& b) {
  const int dx = std::abs(x1 - x0);
  const int dy = -std::abs(y1 - y0);
  const int sx = x0 < x1 ? 1 : -1;
  const int sy = y0 < y1 ? 1 : -1;
  int err = dx + dy;
  for (;;) {
    b.add(y0, x0, x0);
    if (x0 == x1 && y0 == y1) break;
    const int e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      x0 += sx;
    }
    if (e2 <= dx) {
      err += dx;
      y0 += sy;
    }
  }
}

inline int round_coord(double v) {
  return static_cast<int>(std::clamp(std::floor(v + 0.5), -1e8, 1e8));
}

}  // namespace detail

// Sample-point convention: odd widths centre the stroke on pixel centres,
// even widths on pixel boundaries, so a vertical stroke covers exactly
// `line_width` columns.
inline double sample_offset(int line_width) { return line_width % 2 == 0 ? 0.5 : 0.0; }

// Strokes the polyline with round caps and joins; no anti-aliasing. A pixel
// is set when its sample point lies within line_width/2 of the polyline.
// Width 1 degenerates to the Bresenham trace of the rounded vertices.
inline LaneMask rasterize_lane(const annot::Lane& lane, int width, int height, int line_width) {
  if (line_width < 1) throw ParameterError("line width must be >= 1");
  if (width < 1 || height < 1) throw ParameterError("mask dimensions must be >= 1");
  MaskBuilder builder(width, height, line_width);
  const auto& pts = lane.points;
  if (pts.empty()) return std::move(builder).finish();

  if (line_width == 1) {
    if (pts.size() == 1) {
      builder.add(detail::round_coord(pts[0].y), detail::round_coord(pts[0].x),
                  detail::round_coord(pts[0].x));
    }
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
      const int x0 = detail::round_coord(pts[i].x);
      const int y0 = detail::round_coord(pts[i].y);
      const int x1 = detail::round_coord(pts[i + 1].x);
      const int y1 = detail::round_coord(pts[i + 1].y);
      // Skip segments that cannot touch the frame.
      if (std::max(x0, x1) < 0 || std::min(x0, x1) >= width || std::max(y0, y1) < 0 ||
          std::min(y0, y1) >= height) {
        continue;
      }
      detail::bresenham(x0, y0, x1, y1, builder);
    }
    return std::move(builder).finish();
  }

  const double r = line_width / 2.0;
  const double off = sample_offset(line_width);
  for (std::size_t i = 0; i == 0 || i + 1 < pts.size(); ++i) {
    const auto& p = pts[i];
    const auto& q = pts.size() > 1 ? pts[i + 1] : pts[i];
    const double ylo = std::min(p.y, q.y) - r - off;
    const double yhi = std::max(p.y, q.y) + r - off;
    const int row0 = std::max(0, static_cast<int>(std::ceil(std::max(ylo, -1.0) - detail::kEps)));
    const int row1 = std::min(height - 1, static_cast<int>(std::floor(std::min(yhi, 1e8) + detail::kEps)));
    for (int y = row0; y <= row1; ++y) {
      const auto iv = detail::capsule_row(p, q, r, y + off);
      if (!iv.valid()) continue;
      const double lo = std::max(iv.lo - off, -1.0);
      const double hi = std::min(iv.hi - off, static_cast<double>(width));
      if (lo > hi) continue;
      builder.add(y, static_cast<int>(std::ceil(lo - detail::kEps)),
                  static_cast<int>(std::floor(hi + detail::kEps)));
    }
    if (pts.size() == 1) break;
  }
  return std::move(builder).finish();
}

inline std::size_t intersection_count(const LaneMask& a, const LaneMask& b) {
  std::size_t total = 0;
  for (int y = 0; y < a.height(); ++y) {
    const auto ra = a.row(y);
    const auto rb = b.row(y);
    std::size_t i = 0;
    std::size_t j = 0;
    while (i < ra.size() && j < rb.size()) {
      const int lo = std::max(ra[i].x0, rb[j].x0);
      const int hi = std::min(ra[i].x1, rb[j].x1);
      if (lo <= hi) total += static_cast<std::size_t>(hi - lo + 1);
      if (ra[i].x1 < rb[j].x1) {
        ++i;
      } else {
        ++j;
      }
    }
  }
  return total;
}

// |a ∧ b| / |a ∨ b|, 0 when both are empty.
inline double iou(const LaneMask& a, const LaneMask& b) {
  if (a.width() != b.width() || a.height() != b.height()) {
    throw ShapeError("lane masks differ in size");
  }
  const std::size_t inter = intersection_count(a, b);
  const std::size_t uni = a.count() + b.count() - inter;
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

}  // namespace foglane::raster
