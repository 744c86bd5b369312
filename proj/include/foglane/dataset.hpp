#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

#include "foglane/core.hpp"

namespace foglane::dataset {

namespace fs = std::filesystem;

enum class SceneTag { Normal, Arrow, Crowd, Curve, Night, Crossroad };

inline constexpr std::array<SceneTag, 6> kAllScenes = {SceneTag::Normal, SceneTag::Arrow,
                                                       SceneTag::Crowd,  SceneTag::Curve,
                                                       SceneTag::Night,  SceneTag::Crossroad};

inline std::string_view to_string(SceneTag s) {
  switch (s) {
    case SceneTag::Normal: return "Normal";
    case SceneTag::Arrow: return "Arrow";
    case SceneTag::Crowd: return "Crowd";
    case SceneTag::Curve: return "Curve";
    case SceneTag::Night: return "Night";
    case SceneTag::Crossroad: return "Crossroad";
  }
  return "Normal";
}

inline std::optional<SceneTag> parse_scene(std::string_view s) {
  for (auto tag : kAllScenes) {
    if (to_string(tag) == s) return tag;
  }
  return std::nullopt;
}

struct Entry {
  std::string path;
  SceneTag scene = SceneTag::Normal;
  friend bool operator==(const Entry&, const Entry&) = default;
};

struct Manifest {
  std::vector<Entry> entries;
  friend bool operator==(const Manifest&, const Manifest&) = default;
};

// "<path>\t<scene>" per line. A line without a tab is a bare path (Normal).
inline Manifest parse_manifest(std::string_view text) {
  Manifest m;
  std::set<std::string> seen;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t nl = text.find('\n', start);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(start, nl - start);
    start = nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;
    Entry e;
    const auto tab = line.find('\t');
    e.path = std::string(line.substr(0, tab));
    if (tab != std::string_view::npos) {
      const auto tag = parse_scene(line.substr(tab + 1));
      if (!tag) throw ParseError(line_no, "unknown scene '" + std::string(line.substr(tab + 1)) + "'");
      e.scene = *tag;
    }
    if (!seen.insert(e.path).second) throw ParseError(line_no, "duplicate path '" + e.path + "'");
    m.entries.push_back(std::move(e));
  }
  return m;
}

inline std::string write_manifest(const Manifest& m) {
  std::string out;
  for (const auto& e : m.entries) {
    out += e.path;
    out += '\t';
    out += to_string(e.scene);
    out += '\n';
  }
  return out;
}

// Every interval-th frame starting from the first.
template <typename T>
std::vector<T> sample_frames(const std::vector<T>& frames, int interval) {
  if (interval < 1) throw ParameterError("frame interval must be >= 1");
  std::vector<T> out;
  out.reserve((frames.size() + static_cast<std::size_t>(interval) - 1) / static_cast<std::size_t>(interval));
  for (std::size_t i = 0; i < frames.size(); i += static_cast<std::size_t>(interval)) out.push_back(frames[i]);
  return out;
}

namespace detail {

// Unbiased draw in [0, bound) from the raw engine output, so results do not
// depend on the standard library's distribution implementation.
inline std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  for (;;) {
    const std::uint64_t v = rng();
    if (v < limit) return v % bound;
  }
}

template <typename T>
void shuffle(std::vector<T>& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(bounded(rng, i));
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace detail

// Train share of a group of n items under ratio train:test. Each side gets
// its floor share; the leftover item (if any) goes to the side with the
// larger remainder, train on ties.
inline std::size_t train_share(std::size_t n, int ratio_train, int ratio_test) {
  const auto total = static_cast<std::size_t>(ratio_train + ratio_test);
  const std::size_t train_num = n * static_cast<std::size_t>(ratio_train);
  const std::size_t test_num = n * static_cast<std::size_t>(ratio_test);
  std::size_t train = train_num / total;
  const std::size_t test = test_num / total;
  if (train + test < n) {
    if (train_num % total >= test_num % total) ++train;
  }
  return train;
}

struct Split {
  Manifest train;
  Manifest test;
};

// Scene-balanced split: each scene is shuffled with its own stream derived
// from the seed and divided by train_share. Outputs are sorted by path.
inline Split split_dataset(const Manifest& manifest, int ratio_train, int ratio_test,
                           std::uint64_t seed) {
  if (ratio_train < 1 || ratio_test < 1) throw ParameterError("split ratios must be >= 1");
  Split out;
  for (auto scene : kAllScenes) {
    std::vector<Entry> group;
    for (const auto& e : manifest.entries) {
      if (e.scene == scene) group.push_back(e);
    }
    if (group.empty()) continue;
    std::sort(group.begin(), group.end(), [](const Entry& a, const Entry& b) { return a.path < b.path; });
    std::mt19937_64 rng(seed ^ (0x9E3779B97F4A7C15ull * (static_cast<std::uint64_t>(scene) + 1)));
    detail::shuffle(group, rng);
    const std::size_t n_train = train_share(group.size(), ratio_train, ratio_test);
    for (std::size_t i = 0; i < group.size(); ++i) {
      (i < n_train ? out.train : out.test).entries.push_back(std::move(group[i]));
    }
  }
  auto by_path = [](const Entry& a, const Entry& b) { return a.path < b.path; };
  std::sort(out.train.entries.begin(), out.train.entries.end(), by_path);
  std::sort(out.test.entries.begin(), out.test.entries.end(), by_path);
  return out;
}

inline bool is_image_file(const fs::path& p) {
  auto ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

// Relative paths (generic '/' separators) of all images under root, sorted.
inline std::vector<std::string> list_images(const fs::path& root) {
  std::error_code ec;
  if (!fs::is_directory(root, ec)) throw IngestionError("not a directory: " + root.string());
  std::vector<std::string> out;
  fs::recursive_directory_iterator it(root, ec);
  if (ec) throw IngestionError("cannot read directory " + root.string() + ": " + ec.message());
  for (const auto& entry : it) {
    if (entry.is_regular_file() && is_image_file(entry.path())) {
      out.push_back(fs::relative(entry.path(), root).generic_string());
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

struct SceneMap {
  std::map<std::string, SceneTag> tags;
  std::size_t overridden = 0;  // duplicate paths; the later line wins
};

inline SceneMap parse_scene_map(std::string_view text) {
  SceneMap out;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t nl = text.find('\n', start);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(start, nl - start);
    start = nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;
    const auto tab = line.find('\t');
    if (tab == std::string_view::npos) throw ParseError(line_no, "expected <path>\\t<scene>");
    const auto tag = parse_scene(line.substr(tab + 1));
    if (!tag) throw ParseError(line_no, "unknown scene '" + std::string(line.substr(tab + 1)) + "'");
    auto [it, inserted] = out.tags.insert_or_assign(std::string(line.substr(0, tab)), *tag);
    if (!inserted) ++out.overridden;
  }
  return out;
}

inline Manifest build_manifest(const fs::path& root, const SceneMap* scenes = nullptr) {
  Manifest m;
  for (auto& rel : list_images(root)) {
    Entry e{std::move(rel), SceneTag::Normal};
    if (scenes) {
      if (auto it = scenes->tags.find(e.path); it != scenes->tags.end()) e.scene = it->second;
    }
    m.entries.push_back(std::move(e));
  }
  return m;
}

}  // namespace foglane::dataset
