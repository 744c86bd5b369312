#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "foglane/core.hpp"

namespace foglane::annot {

inline constexpr double kNoPoint = -2.0;
inline constexpr int kDefaultWidth = 1640;
inline constexpr int kDefaultHeight = 590;

struct Point {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Point&, const Point&) = default;
};

// Ordered polyline, stored with y strictly increasing.
struct Lane {
  std::vector<Point> points;
  friend bool operator==(const Lane&, const Lane&) = default;
};

struct LaneSet {
  int image_width = kDefaultWidth;
  int image_height = kDefaultHeight;
  std::vector<Lane> lanes;
  friend bool operator==(const LaneSet&, const LaneSet&) = default;
};

struct TusimpleRecord {
  std::string raw_file;
  std::vector<int> h_samples;
  std::vector<std::vector<double>> lanes;
  friend bool operator==(const TusimpleRecord&, const TusimpleRecord&) = default;
};

enum class Format { culane, tusimple };

// A parsed annotation plus the number of degenerate lanes (< 2 points)
// discarded along the way.
template <typename T>
struct Parsed {
  T value;
  std::size_t dropped = 0;
};

// Sorts by y and removes repeated rows (first occurrence wins). Returns
// false when fewer than two points remain.
inline bool canonicalize(Lane& lane) {
  std::stable_sort(lane.points.begin(), lane.points.end(),
                   [](const Point& a, const Point& b) { return a.y < b.y; });
  auto last = std::unique(lane.points.begin(), lane.points.end(),
                          [](const Point& a, const Point& b) { return a.y == b.y; });
  lane.points.erase(last, lane.points.end());
  return lane.points.size() >= 2;
}

namespace detail {

inline std::optional<double> to_number(std::string_view tok) {
  double v = 0.0;
  const auto* end = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(tok.data(), end, v);
  if (ec != std::errc{} || ptr != end || !std::isfinite(v)) return std::nullopt;
  return v;
}

// Shortest fixed-point text with at most 5 decimals.
inline std::string format_coord(double v) {
  char buf[64];
  const double r = std::round(v * 1e5) / 1e5;
  auto res = std::to_chars(buf, buf + sizeof buf, r == 0.0 ? 0.0 : r, std::chars_format::fixed, 5);
  std::string s(buf, res.ptr);
  if (s.find('.') != std::string::npos) {
    while (s.back() == '0') s.pop_back();
    if (s.back() == '.') s.pop_back();
  }
  return s;
}

}  // namespace detail

// CULane sidecar: one lane per line, whitespace-separated "x y" pairs.
inline Parsed<LaneSet> parse_culane(std::string_view text, int width = kDefaultWidth,
                                    int height = kDefaultHeight) {
  Parsed<LaneSet> out{{width, height, {}}, 0};
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t nl = text.find('\n', start);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(start, nl - start);
    start = nl + 1;
    ++line_no;

    std::vector<double> nums;
    std::size_t p = 0;
    while (p < line.size()) {
      while (p < line.size() && std::isspace(static_cast<unsigned char>(line[p]))) ++p;
      if (p >= line.size()) break;
      std::size_t q = p;
      while (q < line.size() && !std::isspace(static_cast<unsigned char>(line[q]))) ++q;
      const auto tok = line.substr(p, q - p);
      const auto v = detail::to_number(tok);
      if (!v) throw ParseError(line_no, "non-numeric token '" + std::string(tok) + "'");
      nums.push_back(*v);
      p = q;
    }
    if (nums.empty()) continue;
    if (nums.size() % 2 != 0) {
      throw ParseError(line_no, "odd number of coordinates (" + std::to_string(nums.size()) + ")");
    }
    Lane lane;
    lane.points.reserve(nums.size() / 2);
    for (std::size_t i = 0; i < nums.size(); i += 2) lane.points.push_back({nums[i], nums[i + 1]});
    if (canonicalize(lane)) {
      out.value.lanes.push_back(std::move(lane));
    } else {
      ++out.dropped;
    }
  }
  return out;
}

// One line per lane, bottom of the image first.
inline std::string write_culane(const LaneSet& set) {
  std::string out;
  for (const auto& lane : set.lanes) {
    bool first = true;
    for (auto it = lane.points.rbegin(); it != lane.points.rend(); ++it) {
      if (!first) out += ' ';
      first = false;
      out += detail::format_coord(it->x);
      out += ' ';
      out += detail::format_coord(it->y);
    }
    out += '\n';
  }
  return out;
}

// x at each requested row by linear interpolation between neighbouring
// points; kNoPoint outside the lane's vertical span.
inline std::vector<double> resample_at_rows(const Lane& lane, std::span<const int> rows) {
  std::vector<double> xs;
  xs.reserve(rows.size());
  const auto& pts = lane.points;
  std::size_t seg = 0;
  for (int r : rows) {
    const double y = r;
    if (pts.empty() || y < pts.front().y || y > pts.back().y) {
      xs.push_back(kNoPoint);
      continue;
    }
    // rows are ascending, so the segment cursor only moves forward
    if (seg > 0 && pts[seg].y > y) seg = 0;
    while (seg + 1 < pts.size() && pts[seg + 1].y < y) ++seg;
    const Point& a = pts[seg];
    if (a.y == y || seg + 1 == pts.size()) {
      xs.push_back(a.x);
      continue;
    }
    const Point& b = pts[seg + 1];
    if (b.y == y) {
      xs.push_back(b.x);
      continue;
    }
    const double t = (y - a.y) / (b.y - a.y);
    xs.push_back(a.x + t * (b.x - a.x));
  }
  return xs;
}

inline LaneSet rescale_annotations(const LaneSet& set, int new_w, int new_h) {
  if (new_w < 1 || new_h < 1) throw ParameterError("target size must be >= 1");
  if (set.image_width < 1 || set.image_height < 1) throw ParameterError("source size must be >= 1");
  const double sx = static_cast<double>(new_w) / set.image_width;
  const double sy = static_cast<double>(new_h) / set.image_height;
  LaneSet out{new_w, new_h, set.lanes};
  for (auto& lane : out.lanes) {
    for (auto& p : lane.points) {
      p.x *= sx;
      p.y *= sy;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Tusimple records

inline nlohmann::ordered_json record_to_json(const TusimpleRecord& rec) {
  nlohmann::ordered_json lanes = nlohmann::ordered_json::array();
  for (const auto& lane : rec.lanes) {
    nlohmann::ordered_json row = nlohmann::ordered_json::array();
    for (double x : lane) {
      if (x == std::trunc(x) && std::abs(x) < 1e15) {
        row.push_back(static_cast<std::int64_t>(x));
      } else {
        row.push_back(x);
      }
    }
    lanes.push_back(std::move(row));
  }
  nlohmann::ordered_json j;
  j["lanes"] = std::move(lanes);
  j["h_samples"] = rec.h_samples;
  j["raw_file"] = rec.raw_file;
  return j;
}

inline std::string write_tusimple(const TusimpleRecord& rec) { return record_to_json(rec).dump(); }

inline LaneSet record_to_laneset(const TusimpleRecord& rec, std::size_t& dropped,
                                 int width = 1280, int height = 720) {
  LaneSet set{width, height, {}};
  for (const auto& xs : rec.lanes) {
    Lane lane;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      if (xs[i] >= 0.0) lane.points.push_back({xs[i], static_cast<double>(rec.h_samples[i])});
    }
    if (canonicalize(lane)) {
      set.lanes.push_back(std::move(lane));
    } else {
      ++dropped;
    }
  }
  return set;
}

// Validates and converts one parsed JSON object. `line` is used for error
// reporting only.
inline TusimpleRecord record_from_json(const nlohmann::json& j, std::size_t line = 1) {
  if (!j.is_object()) throw ParseError(line, "record is not an object");
  for (const char* key : {"raw_file", "h_samples", "lanes"}) {
    if (!j.contains(key)) throw ParseError(line, std::string("missing key '") + key + "'");
  }
  TusimpleRecord rec;
  try {
    rec.raw_file = j.at("raw_file").get<std::string>();
    for (const auto& h : j.at("h_samples")) {
      if (!h.is_number()) throw ParseError(line, "h_samples must be numeric");
      rec.h_samples.push_back(static_cast<int>(std::llround(h.get<double>())));
    }
    for (const auto& lane : j.at("lanes")) {
      std::vector<double> xs;
      for (const auto& x : lane) {
        if (!x.is_number()) throw ParseError(line, "lane entries must be numeric");
        xs.push_back(x.get<double>());
      }
      rec.lanes.push_back(std::move(xs));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(line, e.what());
  }
  for (std::size_t i = 1; i < rec.h_samples.size(); ++i) {
    if (rec.h_samples[i] <= rec.h_samples[i - 1]) {
      throw ParseError(line, "h_samples must be strictly ascending");
    }
  }
  for (std::size_t l = 0; l < rec.lanes.size(); ++l) {
    if (rec.lanes[l].size() != rec.h_samples.size()) {
      throw ParseError(line, "lane " + std::to_string(l) + " has " +
                                 std::to_string(rec.lanes[l].size()) + " entries for " +
                                 std::to_string(rec.h_samples.size()) + " h_samples");
    }
  }
  return rec;
}

struct TusimpleParse {
  TusimpleRecord record;
  LaneSet lanes;
  std::size_t dropped = 0;
};

inline TusimpleParse parse_tusimple(std::string_view record_line, std::size_t line = 1) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(record_line);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(line, e.what());
  }
  TusimpleParse out;
  out.record = record_from_json(j, line);
  out.lanes = record_to_laneset(out.record, out.dropped);
  return out;
}

// All records of a line-delimited Tusimple file; blank lines are skipped.
inline std::vector<TusimpleRecord> parse_tusimple_file(std::string_view text) {
  std::vector<TusimpleRecord> out;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t nl = text.find('\n', start);
    if (nl == std::string_view::npos) nl = text.size();
    const auto line = text.substr(start, nl - start);
    start = nl + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    out.push_back(parse_tusimple(line, line_no).record);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Conversion

inline TusimpleRecord to_tusimple(const LaneSet& set, std::span<const int> rows,
                                  std::string raw_file) {
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i] <= rows[i - 1]) throw ParameterError("h_samples must be strictly ascending");
  }
  TusimpleRecord rec;
  rec.raw_file = std::move(raw_file);
  rec.h_samples.assign(rows.begin(), rows.end());
  for (const auto& lane : set.lanes) rec.lanes.push_back(resample_at_rows(lane, rows));
  return rec;
}

inline LaneSet to_culane(const TusimpleRecord& rec, std::size_t* dropped = nullptr,
                         int width = 1280, int height = 720) {
  std::size_t d = 0;
  auto set = record_to_laneset(rec, d, width, height);
  if (dropped) *dropped = d;
  return set;
}

// Serializes `set` in the target format. Tusimple output needs the row grid.
inline std::string convert(const LaneSet& set, Format target,
                           std::optional<std::vector<int>> rows = std::nullopt,
                           std::string raw_file = {}) {
  if (target == Format::culane) return write_culane(set);
  if (!rows) throw ParameterError("tusimple output requires h_samples rows");
  return write_tusimple(to_tusimple(set, *rows, std::move(raw_file)));
}

// Parses "start:stop:step" (inclusive stop) or a comma-separated list.
inline std::vector<int> parse_rows(std::string_view spec) {
  std::vector<int> rows;
  auto num = [&](std::string_view s) {
    int v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size()) {
      throw ParameterError("bad row value '" + std::string(s) + "'");
    }
    return v;
  };
  if (spec.find(':') != std::string_view::npos) {
    const auto a = spec.find(':');
    const auto b = spec.find(':', a + 1);
    if (b == std::string_view::npos) throw ParameterError("row range must be start:stop:step");
    const int start = num(spec.substr(0, a));
    const int stop = num(spec.substr(a + 1, b - a - 1));
    const int step = num(spec.substr(b + 1));
    if (step < 1 || stop < start) throw ParameterError("row range must ascend with step >= 1");
    for (int r = start; r <= stop; r += step) rows.push_back(r);
    return rows;
  }
  std::size_t p = 0;
  while (p <= spec.size()) {
    auto q = spec.find(',', p);
    if (q == std::string_view::npos) q = spec.size();
    rows.push_back(num(spec.substr(p, q - p)));
    p = q + 1;
  }
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i] <= rows[i - 1]) throw ParameterError("rows must be strictly ascending");
  }
  return rows;
}

}  // namespace foglane::annot
