#pragma once

// Shared fixtures and independent oracles for the test suites.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "foglane/annotation.hpp"
#include "foglane/assignment.hpp"
#include "foglane/core.hpp"
#include "foglane/metrics.hpp"

namespace testsupport {

namespace fs = std::filesystem;

// Unique scratch directory, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = fs::temp_directory_path() /
            ("foglane_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& s) const { return path_ / s; }

 private:
  fs::path path_;
};

inline foglane::Image random_image(int w, int h, std::mt19937& rng) {
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  foglane::Image img(w, h);
  for (auto& v : img.values()) v = u(rng);
  return img;
}

// Values that survive 8-bit quantization exactly.
inline foglane::Image random_image_8bit(int w, int h, std::mt19937& rng) {
  std::uniform_int_distribution<int> u(0, 255);
  foglane::Image img(w, h);
  for (auto& v : img.values()) v = static_cast<float>(u(rng)) / 255.0f;
  return img;
}

inline float hash_noise(int x, int y, std::uint32_t seed) {
  std::uint32_t h = static_cast<std::uint32_t>(x) * 374761393u + static_cast<std::uint32_t>(y) * 668265263u +
                    seed * 2246822519u;
  h = (h ^ (h >> 13)) * 1274126177u;
  h ^= h >> 16;
  return static_cast<float>(h & 0xFFFFu) / 65535.0f;
}

// Procedural daytime road: bright sky above the horizon, textured asphalt
// with dashed white markings converging to a vanishing point, grass verges
// and a few dark vehicles. Returns 8-bit-exact values.
inline foglane::Image road_scene(int w, int h, std::uint32_t seed = 7) {
  foglane::Image img(w, h);
  const double horizon = 0.4 * h;
  const double vx = 0.5 * w;
  auto q = [](double v) { return static_cast<float>(std::round(std::clamp(v, 0.0, 1.0) * 255.0) / 255.0); };
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double r, g, b;
      const double n = hash_noise(x / 2, y / 2, seed) - 0.5;
      if (y < horizon) {
        const double t = y / horizon;
        r = 0.55 + 0.2 * t;
        g = 0.65 + 0.15 * t;
        b = 0.85 + 0.05 * t;
        // distant tree line
        if (y > horizon - 0.06 * h && hash_noise(x / 6, 0, seed + 3) > 0.35) {
          r = 0.12 + 0.1 * n;
          g = 0.25 + 0.1 * n;
          b = 0.1;
        }
      } else {
        const double depth = (y - horizon) / (h - horizon);
        const double half_road = 0.05 * w + depth * 0.55 * w;
        const double dx = x - vx;
        if (std::abs(dx) < half_road) {
          const double base = 0.3 + 0.18 * n;
          r = g = b = base;
          // lane markings at fractions of the road half-width
          for (double f : {-0.66, 0.0, 0.66}) {
            const double cx = vx + f * half_road;
            const double mw = 1.0 + 10.0 * depth;
            const bool dash = f == 0.0 ? (static_cast<int>(std::log(1.0 + y - horizon) * 6.0) % 2 == 0) : true;
            if (dash && std::abs(x - cx) < mw) r = g = b = 0.92 + 0.05 * n;
          }
        } else {
          r = 0.2 + 0.12 * n;
          g = 0.45 + 0.15 * n;
          b = 0.15 + 0.08 * n;
        }
      }
      img.set(x, y, q(r), q(g), q(b));
    }
  }
  // vehicles
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> ud(0.0, 1.0);
  for (int k = 0; k < 4; ++k) {
    const double depth = 0.15 + 0.6 * ud(rng);
    const int cy = static_cast<int>(horizon + depth * (h - horizon));
    const int size = static_cast<int>(8 + depth * 0.18 * w);
    const int cx = static_cast<int>(vx + (ud(rng) - 0.5) * depth * 0.8 * w);
    const double shade = 0.05 + 0.5 * ud(rng);
    for (int y = std::max(0, cy - size / 2); y < std::min(h, cy); ++y) {
      for (int x = std::max(0, cx - size / 2); x < std::min(w, cx + size / 2); ++x) {
        img.set(x, y, q(shade + 0.3), q(shade * 0.6), q(shade * 0.5));
      }
    }
  }
  return img;
}

// ---------------------------------------------------------------------------
// Oracles

// Brute-force dark channel: explicit double loop over the clipped window.
inline float dark_channel_at(const foglane::Image& img, int x, int y, int window) {
  const int r = window / 2;
  float best = std::numeric_limits<float>::max();
  for (int yy = std::max(0, y - r); yy <= std::min(img.height() - 1, y + r); ++yy) {
    for (int xx = std::max(0, x - r); xx <= std::min(img.width() - 1, x + r); ++xx) {
      for (int c = 0; c < 3; ++c) best = std::min(best, img.at(xx, yy, c));
    }
  }
  return best;
}

inline double point_segment_distance(double px, double py, const foglane::annot::Point& a,
                                     const foglane::annot::Point& b) {
  const double dx = b.x - a.x;
  const double dy = b.y - a.y;
  const double len2 = dx * dx + dy * dy;
  double t = len2 == 0.0 ? 0.0 : ((px - a.x) * dx + (py - a.y) * dy) / len2;
  t = std::clamp(t, 0.0, 1.0);
  return std::hypot(px - (a.x + t * dx), py - (a.y + t * dy));
}

// Dense per-pixel stroke oracle: pixel set iff its sample point is within
// width/2 of the polyline.
inline foglane::EdgeMap brute_stroke(const foglane::annot::Lane& lane, int w, int h, int width) {
  const double r = width / 2.0;
  const double off = width % 2 == 0 ? 0.5 : 0.0;
  foglane::EdgeMap m(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double d = std::numeric_limits<double>::max();
      const auto& p = lane.points;
      if (p.size() == 1) d = std::hypot(x + off - p[0].x, y + off - p[0].y);
      for (std::size_t i = 0; i + 1 < p.size(); ++i) {
        d = std::min(d, point_segment_distance(x + off, y + off, p[i], p[i + 1]));
      }
      if (d <= r + 1e-9) m(x, y) = 1;
    }
  }
  return m;
}

// Exhaustive search over every one-to-one assignment. Returns the optimum
// with the lexicographically smallest col_of_row (unassigned ordered last).
inline foglane::assign::Assignment brute_assign(const foglane::assign::WeightMatrix& m) {
  const std::size_t n = m.rows;
  std::vector<int> cur(n, -1);
  std::vector<char> used(m.cols, 0);
  foglane::assign::Assignment best;
  best.value = -1.0;
  auto key = [&](int v) { return v < 0 ? static_cast<int>(m.cols) : v; };
  auto lex_less = [&](const std::vector<int>& a, const std::vector<int>& b) {
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (key(a[i]) != key(b[i])) return key(a[i]) < key(b[i]);
    }
    return false;
  };
  auto rec = [&](auto&& self, std::size_t i, double value) -> void {
    if (i == n) {
      const double tol = 1e-9 * std::max(1.0, std::abs(value));
      if (value > best.value + tol ||
          (std::abs(value - best.value) <= tol && lex_less(cur, best.col_of_row))) {
        best.value = value;
        best.col_of_row = cur;
      }
      return;
    }
    for (std::size_t j = 0; j < m.cols; ++j) {
      if (used[j] || !m.ok(i, j)) continue;
      used[j] = 1;
      cur[i] = static_cast<int>(j);
      self(self, i + 1, value + m.w(i, j));
      used[j] = 0;
    }
    cur[i] = -1;
    self(self, i + 1, value);
  };
  rec(rec, 0, 0.0);
  return best;
}

// Random CULane-style lane set: lanes rise from the bottom edge toward a
// common vanishing region with sub-pixel coordinates.
inline foglane::annot::LaneSet random_laneset(std::mt19937& rng, int w = 1640, int h = 590,
                                              int max_lanes = 6) {
  std::uniform_int_distribution<int> nl(0, max_lanes);
  std::uniform_int_distribution<int> np(2, 30);
  std::uniform_real_distribution<double> ux(-0.2 * w, 1.2 * w);
  std::uniform_real_distribution<double> jitter(-3.0, 3.0);
  foglane::annot::LaneSet set{w, h, {}};
  const int lanes = nl(rng);
  for (int l = 0; l < lanes; ++l) {
    const int pts = np(rng);
    const double x0 = ux(rng);
    const double x1 = 0.5 * w + jitter(rng) * 20.0;
    const double y0 = h - 1 - std::abs(jitter(rng)) * 10.0;
    const double y1 = 0.4 * h + std::abs(jitter(rng)) * 10.0;
    foglane::annot::Lane lane;
    for (int k = 0; k < pts; ++k) {
      const double t = static_cast<double>(k) / (pts - 1);
      lane.points.push_back({x1 + (x0 - x1) * t + jitter(rng), y1 + (y0 - y1) * t});
    }
    set.lanes.push_back(std::move(lane));
  }
  return set;
}

// Exhaustive matching: maximize pair count, then total IoU, then prefer the
// lexicographically smallest gt index per prediction (unpaired last).
inline std::vector<int> brute_match(const foglane::metrics::IouMatrix& m, double tau) {
  std::vector<int> cur(m.n_pred, -1), best;
  std::vector<char> used(m.n_gt, 0);
  std::size_t best_count = 0;
  double best_sum = -1.0;
  auto key = [&](int v) { return v < 0 ? static_cast<int>(m.n_gt) : v; };
  auto rec = [&](auto&& self, std::size_t p, std::size_t count, double sum) -> void {
    if (p == m.n_pred) {
      bool better = count > best_count || best_sum < 0.0;
      if (!better && count == best_count) {
        if (sum > best_sum + 1e-9) {
          better = true;
        } else if (std::abs(sum - best_sum) <= 1e-9) {
          better = std::lexicographical_compare(cur.begin(), cur.end(), best.begin(), best.end(),
                                                [&](int a, int b) { return key(a) < key(b); });
        }
      }
      if (better) {
        best = cur;
        best_count = count;
        best_sum = sum;
      }
      return;
    }
    for (std::size_t g = 0; g < m.n_gt; ++g) {
      if (used[g] || m.at(p, g) < tau) continue;
      used[g] = 1;
      cur[p] = static_cast<int>(g);
      self(self, p + 1, count + 1, sum + m.at(p, g));
      used[g] = 0;
    }
    cur[p] = -1;
    self(self, p + 1, count, sum);
  };
  rec(rec, 0, 0, 0.0);
  return best;
}

}  // namespace testsupport
