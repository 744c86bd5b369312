#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "foglane/annotation.hpp"
#include "foglane/dataset.hpp"
#include "foglane/depth.hpp"
#include "foglane/edges.hpp"
#include "foglane/fog.hpp"
#include "foglane/io.hpp"
#include "foglane/metrics.hpp"
#include "foglane/parallel.hpp"

// Directory-level drivers. Per-file work runs in parallel; results land in
// per-index slots and are reported in input order.
namespace foglane::batch {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

// One JSON object per line.
inline std::string to_jsonl(const std::vector<Json>& records) {
  std::string out;
  for (const auto& r : records) {
    out += r.dump();
    out += '\n';
  }
  return out;
}

struct Summary {
  std::vector<Json> records;
  std::size_t succeeded = 0;
  std::size_t failed = 0;

  std::size_t count() const { return succeeded; }
};

inline Summary tally(std::vector<Json> records) {
  Summary s;
  for (const auto& r : records) {
    if (r.value("status", "") == "ok") {
      ++s.succeeded;
    } else {
      ++s.failed;
    }
  }
  s.records = std::move(records);
  return s;
}

inline Json failure(const std::string& rel, const std::string& what) {
  Json j;
  j["path"] = rel;
  j["status"] = "error";
  j["error"] = what;
  return j;
}

// ---------------------------------------------------------------------------
// Fog

// Horizon either as an absolute row or as a fraction of the image height.
struct GroundPlaneSpec {
  std::optional<double> horizon_row;
  double horizon_ratio = 0.4;
  double scale = 100.0;
  double d_min = 0.5;
  double d_max = 10.0;

  depth::GroundPlaneModel resolve(int height) const {
    depth::GroundPlaneModel m;
    m.horizon_row = horizon_row ? *horizon_row : horizon_ratio * height;
    m.scale = scale;
    m.d_min = d_min;
    m.d_max = d_max;
    return m;
  }
};

// External maps under depth_dir/<stem>.png (or .pfm); the synthetic model
// is used when no external directory is given or as a fallback for
// missing files.
struct DepthSource {
  std::optional<fs::path> depth_dir;
  std::optional<GroundPlaneSpec> synthetic;
};

inline depth::DepthMap resolve_depth(const DepthSource& src, const std::string& rel, int width,
                                     int height) {
  if (src.depth_dir) {
    for (const char* ext : {".png", ".pfm"}) {
      const auto p = io::sidecar(*src.depth_dir, rel, ext);
      if (fs::exists(p)) return io::load_depth(p, width, height);
    }
    if (!src.synthetic) throw IngestionError("no depth map for " + rel);
  }
  if (!src.synthetic) throw IngestionError("no depth source configured");
  return depth::synth_ground_plane_depth(width, height, src.synthetic->resolve(height));
}

inline Summary fog_batch(const fs::path& input_dir, const DepthSource& depth_source,
                         const fog::FogParams& params, const fs::path& out_dir,
                         unsigned jobs = default_jobs()) {
  params.validate();
  const auto files = dataset::list_images(input_dir);
  std::vector<Json> records(files.size());
  parallel_for(files.size(), jobs, [&](std::size_t i) {
    const auto& rel = files[i];
    try {
      const auto clear = io::load_image(input_dir / rel);
      const auto d = resolve_depth(depth_source, rel, clear.width(), clear.height());
      const auto result = fog::synthesize(clear, d, params);
      io::save_image(out_dir / rel, result.image);
      Json j;
      j["path"] = rel;
      j["A"] = result.atmospheric_light;
      j["status"] = "ok";
      records[i] = std::move(j);
    } catch (const std::exception& e) {
      Json j = failure(rel, e.what());
      j["A"] = nullptr;
      records[i] = std::move(j);
    }
  });
  return tally(std::move(records));
}

// ---------------------------------------------------------------------------
// Edge labels

struct EdgeOptions {
  edges::CannyParams canny;
  int stroke_width = edges::kStrokeWidth;
  int downsample = 1;
};

inline Summary edges_batch(const fs::path& input_dir, const std::optional<fs::path>& labels_dir,
                           const fs::path& out_dir, const EdgeOptions& opt,
                           unsigned jobs = default_jobs()) {
  opt.canny.validate();
  if (opt.stroke_width < 1) throw ParameterError("stroke width must be >= 1");
  if (opt.downsample < 1) throw ParameterError("downsample factor must be >= 1");
  const auto files = dataset::list_images(input_dir);
  std::vector<Json> records(files.size());
  parallel_for(files.size(), jobs, [&](std::size_t i) {
    const auto& rel = files[i];
    try {
      const auto img = io::load_image(input_dir / rel);
      auto label = edges::canny(img, opt.canny);
      std::size_t lanes = 0;
      bool has_labels = false;
      if (labels_dir) {
        const auto side = io::sidecar(*labels_dir, rel, ".lines.txt");
        if (fs::exists(side)) {
          const auto parsed = annot::parse_culane(io::read_text(side), img.width(), img.height());
          lanes = parsed.value.lanes.size();
          has_labels = true;
          label = edges::merge_edge_label(label, edges::render_lane_strokes(parsed.value, opt.stroke_width));
        }
      }
      label = edges::downsample_label(label, opt.downsample);
      io::save_edge_map(io::sidecar(out_dir, rel, ".png"), label);
      Json j;
      j["path"] = rel;
      j["edge_pixels"] = popcount(label);
      j["lanes"] = lanes;
      j["labels"] = has_labels;
      j["status"] = "ok";
      records[i] = std::move(j);
    } catch (const std::exception& e) {
      records[i] = failure(rel, e.what());
    }
  });
  return tally(std::move(records));
}

// ---------------------------------------------------------------------------
// Resize

inline Summary resize_dataset(const fs::path& in_root, const fs::path& out_root, int target_w,
                              int target_h, bool annotations, unsigned jobs = default_jobs()) {
  if (target_w < 1 || target_h < 1) throw ParameterError("target size must be >= 1");
  const auto files = dataset::list_images(in_root);
  std::vector<Json> records(files.size());
  parallel_for(files.size(), jobs, [&](std::size_t i) {
    const auto& rel = files[i];
    try {
      cv::Mat src = cv::imread((in_root / rel).string(), cv::IMREAD_COLOR);
      if (src.empty()) throw IngestionError("cannot decode image " + (in_root / rel).string());
      io::save_mat(out_root / rel, io::resize_bilinear(src, target_w, target_h));
      Json j;
      j["path"] = rel;
      j["src_width"] = src.cols;
      j["src_height"] = src.rows;
      j["width"] = target_w;
      j["height"] = target_h;
      if (annotations) {
        const auto side = io::sidecar(in_root, rel, ".lines.txt");
        if (fs::exists(side)) {
          const auto parsed = annot::parse_culane(io::read_text(side), src.cols, src.rows);
          const auto scaled = annot::rescale_annotations(parsed.value, target_w, target_h);
          io::write_text(io::sidecar(out_root, rel, ".lines.txt"), annot::write_culane(scaled));
          j["lanes"] = scaled.lanes.size();
        } else {
          j["lanes"] = nullptr;
        }
      }
      j["status"] = "ok";
      records[i] = std::move(j);
    } catch (const std::exception& e) {
      records[i] = failure(rel, e.what());
    }
  });
  return tally(std::move(records));
}

// ---------------------------------------------------------------------------
// CULane evaluation over sidecar trees

struct ListEntry {
  std::string path;
  std::optional<std::string> scene;
};

// Plain list file (one relative path per line) or manifest (path<TAB>scene).
inline std::vector<ListEntry> parse_list(std::string_view text) {
  std::vector<ListEntry> out;
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
    ListEntry e{std::string(line.substr(0, tab)), std::nullopt};
    if (tab != std::string_view::npos) {
      const auto name = line.substr(tab + 1);
      if (!dataset::parse_scene(name)) throw ParseError(line_no, "unknown scene '" + std::string(name) + "'");
      e.scene = std::string(name);
    }
    out.push_back(std::move(e));
  }
  return out;
}

struct CULaneOptions {
  std::vector<double> thresholds = metrics::default_thresholds();
  std::vector<double> grid = metrics::mf1_grid();
  int line_width = metrics::kLineWidth;
  int image_width = annot::kDefaultWidth;
  int image_height = annot::kDefaultHeight;
};

inline metrics::CULaneReport culane_f1(const fs::path& pred_root, const fs::path& gt_root,
                                       const std::vector<ListEntry>& list, const CULaneOptions& opt,
                                       unsigned jobs = default_jobs(),
                                       std::vector<std::string>* warnings = nullptr) {
  if (opt.line_width < 1) throw ParameterError("line width must be >= 1");
  const auto all = metrics::merged_thresholds(opt.thresholds, opt.grid);
  std::vector<std::vector<metrics::Counts>> per_image(list.size());
  std::vector<std::optional<std::string>> missing(list.size());
  parallel_for(list.size(), jobs, [&](std::size_t i) {
    const auto& rel = list[i].path;
    const auto gt_path = io::sidecar(gt_root, rel, ".lines.txt");
    annot::LaneSet gt;
    try {
      gt = annot::parse_culane(io::read_text(gt_path), opt.image_width, opt.image_height).value;
    } catch (const std::exception& e) {
      throw EvaluationError("ground truth " + gt_path.string() + ": " + e.what());
    }
    annot::LaneSet pred{opt.image_width, opt.image_height, {}};
    const auto pred_path = io::sidecar(pred_root, rel, ".lines.txt");
    try {
      pred = annot::parse_culane(io::read_text(pred_path), opt.image_width, opt.image_height).value;
    } catch (const std::exception& e) {
      missing[i] = "prediction " + pred_path.string() + ": " + e.what();
    }
    per_image[i] = metrics::evaluate_image(pred, gt, all, opt.image_width, opt.image_height,
                                           opt.line_width);
  });

  std::vector<metrics::Counts> totals(all.size());
  std::map<std::string, std::vector<metrics::Counts>> scene_totals;
  for (std::size_t i = 0; i < list.size(); ++i) {
    for (std::size_t t = 0; t < all.size(); ++t) totals[t] += per_image[i][t];
    if (list[i].scene) {
      auto& st = scene_totals[*list[i].scene];
      st.resize(all.size());
      for (std::size_t t = 0; t < all.size(); ++t) st[t] += per_image[i][t];
    }
  }

  auto rep = metrics::assemble_report(opt.thresholds, opt.grid, all, totals);
  rep.images = list.size();
  for (std::size_t i = 0; i < list.size(); ++i) {
    if (!missing[i]) continue;
    ++rep.missing_predictions;
    if (warnings) warnings->push_back(*missing[i]);
  }
  for (auto& [scene, st] : scene_totals) {
    auto& out = rep.per_scene[scene];
    for (double t : opt.thresholds) {
      out.push_back(st[static_cast<std::size_t>(std::find(all.begin(), all.end(), t) - all.begin())]);
    }
  }
  return rep;
}

inline Json report_json(const metrics::CULaneReport& rep, const std::vector<double>& thresholds) {
  Json j;
  j["images"] = rep.images;
  j["missing_predictions"] = rep.missing_predictions;
  Json rows = Json::array();
  for (const auto& t : rep.per_threshold) {
    Json r;
    r["threshold"] = t.threshold;
    r["tp"] = t.counts.tp;
    r["fp"] = t.counts.fp;
    r["fn"] = t.counts.fn;
    r["precision"] = t.scores.precision;
    r["recall"] = t.scores.recall;
    r["f1"] = t.scores.f1;
    rows.push_back(std::move(r));
  }
  j["thresholds"] = std::move(rows);
  j["mf1"] = rep.mf1;
  Json grid = Json::array();
  for (const auto& t : rep.mf1_grid_scores) grid.push_back({{"threshold", t.threshold}, {"f1", t.scores.f1}});
  j["mf1_grid"] = std::move(grid);
  if (!rep.per_scene.empty()) {
    Json scenes = Json::object();
    for (const auto& [scene, counts] : rep.per_scene) {
      Json s = Json::array();
      for (std::size_t k = 0; k < counts.size(); ++k) {
        const auto sc = metrics::scores(counts[k]);
        s.push_back({{"threshold", thresholds[k]},
                     {"tp", counts[k].tp},
                     {"fp", counts[k].fp},
                     {"fn", counts[k].fn},
                     {"f1", sc.f1}});
      }
      scenes[scene] = std::move(s);
    }
    j["scenes"] = std::move(scenes);
  }
  return j;
}

inline Json report_json(const metrics::TusimpleReport& rep) {
  Json j;
  j["images"] = rep.images;
  j["accuracy"] = rep.accuracy;
  j["fp_rate"] = rep.fp_rate;
  j["fn_rate"] = rep.fn_rate;
  j["f1"] = rep.f1;
  j["correct_points"] = rep.totals.correct_points;
  j["gt_points"] = rep.totals.gt_points;
  j["tp"] = rep.totals.tp;
  j["fp"] = rep.totals.fp;
  j["fn"] = rep.totals.fn;
  return j;
}

}  // namespace foglane::batch
