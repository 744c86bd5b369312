#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "foglane/annotation.hpp"
#include "foglane/assignment.hpp"
#include "foglane/core.hpp"
#include "foglane/raster.hpp"

namespace foglane::metrics {

inline constexpr int kLineWidth = 30;
inline constexpr double kPixelTolerance = 20.0;
inline constexpr double kMatchRatio = 0.85;

// F1@50 ... F1@85 as reported in benchmark tables.
inline std::vector<double> default_thresholds() { return {0.50, 0.65, 0.75, 0.85}; }

// τ ∈ {0.50, 0.55, ..., 0.95}, each value built from an integer percentage
// so that e.g. 0.65 is the same double as the literal.
inline std::vector<double> mf1_grid() {
  std::vector<double> g;
  for (int pct = 50; pct <= 95; pct += 5) g.push_back(pct / 100.0);
  return g;
}

struct Counts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;

  Counts& operator+=(const Counts& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    return *this;
  }
  friend bool operator==(const Counts&, const Counts&) = default;
};

inline double safe_ratio(double num, double den) { return den == 0.0 ? 0.0 : num / den; }

struct Scores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

inline Scores scores(const Counts& c) {
  Scores s;
  s.precision = safe_ratio(static_cast<double>(c.tp), static_cast<double>(c.tp + c.fp));
  s.recall = safe_ratio(static_cast<double>(c.tp), static_cast<double>(c.tp + c.fn));
  s.f1 = safe_ratio(2.0 * s.precision * s.recall, s.precision + s.recall);
  return s;
}

struct Pair {
  std::size_t pred = 0;
  std::size_t gt = 0;
  double iou = 0.0;
  friend bool operator==(const Pair&, const Pair&) = default;
};

struct MatchResult {
  std::vector<Pair> pairs;
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;

  Counts counts() const { return {tp, fp, fn}; }
};

// |pred| × |gt| IoU values, row-major.
struct IouMatrix {
  std::size_t n_pred = 0;
  std::size_t n_gt = 0;
  std::vector<double> values;

  double at(std::size_t p, std::size_t g) const { return values[p * n_gt + g]; }
};

inline std::vector<raster::LaneMask> rasterize_all(const annot::LaneSet& set, int width, int height,
                                                   int line_width) {
  std::vector<raster::LaneMask> masks;
  masks.reserve(set.lanes.size());
  for (const auto& lane : set.lanes) {
    masks.push_back(raster::rasterize_lane(lane, width, height, line_width));
  }
  return masks;
}

inline IouMatrix iou_matrix(std::span<const raster::LaneMask> pred,
                            std::span<const raster::LaneMask> gt) {
  IouMatrix m{pred.size(), gt.size(), std::vector<double>(pred.size() * gt.size(), 0.0)};
  for (std::size_t p = 0; p < pred.size(); ++p) {
    for (std::size_t g = 0; g < gt.size(); ++g) m.values[p * gt.size() + g] = raster::iou(pred[p], gt[g]);
  }
  return m;
}

// One-to-one matching at threshold tau: cells below tau are ineligible; the
// assignment maximizes the number of pairs, then their total IoU.
inline MatchResult match_iou(const IouMatrix& m, double tau) {
  if (!(tau > 0.0 && tau <= 1.0)) throw ParameterError("IoU threshold must lie in (0,1]");
  MatchResult r;
  if (m.n_pred > 0 && m.n_gt > 0) {
    // A pair bonus larger than any achievable IoU total makes count primary.
    const double bonus = static_cast<double>(std::min(m.n_pred, m.n_gt)) + 1.0;
    assign::WeightMatrix w(m.n_pred, m.n_gt);
    for (std::size_t p = 0; p < m.n_pred; ++p) {
      for (std::size_t g = 0; g < m.n_gt; ++g) {
        const double v = m.at(p, g);
        w.set(p, g, bonus + v, v >= tau);
      }
    }
    const auto a = assign::solve(w);
    for (std::size_t p = 0; p < m.n_pred; ++p) {
      if (a.col_of_row[p] < 0) continue;
      const auto g = static_cast<std::size_t>(a.col_of_row[p]);
      r.pairs.push_back({p, g, m.at(p, g)});
    }
  }
  r.tp = r.pairs.size();
  r.fp = m.n_pred - r.tp;
  r.fn = m.n_gt - r.tp;
  return r;
}

inline MatchResult match_lanes(const annot::LaneSet& pred, const annot::LaneSet& gt, double tau,
                               int width, int height, int line_width = kLineWidth) {
  const auto pm = rasterize_all(pred, width, height, line_width);
  const auto gm = rasterize_all(gt, width, height, line_width);
  return match_iou(iou_matrix(pm, gm), tau);
}

// ---------------------------------------------------------------------------
// CULane-style report

struct ThresholdScore {
  double threshold = 0.0;
  Counts counts;
  Scores scores;
};

struct CULaneReport {
  std::vector<ThresholdScore> per_threshold;
  std::vector<ThresholdScore> mf1_grid_scores;
  double mf1 = 0.0;
  std::size_t images = 0;
  std::size_t missing_predictions = 0;
  // scene → counts per reported threshold (parallel to per_threshold)
  std::map<std::string, std::vector<Counts>> per_scene;
};

// Assembles a report from summed per-threshold counts. `reported` and
// `grid` index into the same threshold list `all`.
inline CULaneReport assemble_report(const std::vector<double>& reported, const std::vector<double>& grid,
                                    const std::vector<double>& all, const std::vector<Counts>& totals) {
  auto find = [&](double t) {
    const auto it = std::find(all.begin(), all.end(), t);
    return static_cast<std::size_t>(it - all.begin());
  };
  CULaneReport rep;
  for (double t : reported) {
    const auto& c = totals[find(t)];
    rep.per_threshold.push_back({t, c, scores(c)});
  }
  double sum = 0.0;
  for (double t : grid) {
    const auto& c = totals[find(t)];
    rep.mf1_grid_scores.push_back({t, c, scores(c)});
    sum += rep.mf1_grid_scores.back().scores.f1;
  }
  rep.mf1 = grid.empty() ? 0.0 : sum / static_cast<double>(grid.size());
  return rep;
}

// Union of reported thresholds and the mF1 grid, sorted, duplicates removed.
inline std::vector<double> merged_thresholds(const std::vector<double>& reported,
                                             const std::vector<double>& grid) {
  std::vector<double> all = reported;
  all.insert(all.end(), grid.begin(), grid.end());
  std::sort(all.begin(), all.end());
  all.erase(std::unique(all.begin(), all.end()), all.end());
  for (double t : all) {
    if (!(t > 0.0 && t <= 1.0)) throw ParameterError("IoU thresholds must lie in (0,1]");
  }
  return all;
}

// Per-image counts at each threshold of `all`.
inline std::vector<Counts> evaluate_image(const annot::LaneSet& pred, const annot::LaneSet& gt,
                                          const std::vector<double>& all, int width, int height,
                                          int line_width) {
  const auto pm = rasterize_all(pred, width, height, line_width);
  const auto gm = rasterize_all(gt, width, height, line_width);
  const auto m = iou_matrix(pm, gm);
  std::vector<Counts> out;
  out.reserve(all.size());
  for (double t : all) out.push_back(match_iou(m, t).counts());
  return out;
}

// ---------------------------------------------------------------------------
// Tusimple point-tolerance metric

struct TusimpleCounts {
  std::size_t correct_points = 0;  // C
  std::size_t gt_points = 0;       // S
  std::size_t pred_lanes = 0;
  std::size_t gt_lanes = 0;
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;

  TusimpleCounts& operator+=(const TusimpleCounts& o) {
    correct_points += o.correct_points;
    gt_points += o.gt_points;
    pred_lanes += o.pred_lanes;
    gt_lanes += o.gt_lanes;
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    return *this;
  }
  friend bool operator==(const TusimpleCounts&, const TusimpleCounts&) = default;
};

struct TusimpleReport {
  double accuracy = 0.0;
  double fp_rate = 0.0;
  double fn_rate = 0.0;
  double f1 = 0.0;
  TusimpleCounts totals;
  std::size_t images = 0;
};

struct TusimpleOptions {
  double pixel_tolerance = kPixelTolerance;
  double match_ratio = kMatchRatio;
};

inline bool valid_x(double x) { return x >= 0.0; }

// Predicted lanes expressed on the ground-truth row grid.
inline std::vector<std::vector<double>> align_to_rows(const annot::TusimpleRecord& pred,
                                                      const std::vector<int>& rows) {
  if (pred.h_samples == rows) return pred.lanes;
  std::vector<std::vector<double>> out;
  for (const auto& xs : pred.lanes) {
    annot::Lane lane;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      if (valid_x(xs[i])) lane.points.push_back({xs[i], static_cast<double>(pred.h_samples[i])});
    }
    annot::canonicalize(lane);
    out.push_back(annot::resample_at_rows(lane, rows));
  }
  return out;
}

inline TusimpleCounts tusimple_image(const std::vector<std::vector<double>>& pred_lanes,
                                     const std::vector<std::vector<double>>& gt_lanes,
                                     const TusimpleOptions& opt) {
  auto has_points = [](const std::vector<double>& xs) {
    return std::any_of(xs.begin(), xs.end(), valid_x);
  };
  std::vector<const std::vector<double>*> pred;
  std::vector<const std::vector<double>*> gt;
  for (const auto& l : pred_lanes) {
    if (has_points(l)) pred.push_back(&l);
  }
  for (const auto& l : gt_lanes) {
    if (has_points(l)) gt.push_back(&l);
  }

  TusimpleCounts c;
  c.pred_lanes = pred.size();
  c.gt_lanes = gt.size();
  std::vector<std::size_t> gt_valid(gt.size(), 0);
  for (std::size_t g = 0; g < gt.size(); ++g) {
    gt_valid[g] = static_cast<std::size_t>(std::count_if(gt[g]->begin(), gt[g]->end(), valid_x));
    c.gt_points += gt_valid[g];
  }

  assign::WeightMatrix w(pred.size(), gt.size());
  for (std::size_t p = 0; p < pred.size(); ++p) {
    for (std::size_t g = 0; g < gt.size(); ++g) {
      const auto& px = *pred[p];
      const auto& gx = *gt[g];
      std::size_t hits = 0;
      for (std::size_t k = 0; k < gx.size() && k < px.size(); ++k) {
        if (valid_x(gx[k]) && valid_x(px[k]) && std::abs(px[k] - gx[k]) <= opt.pixel_tolerance) ++hits;
      }
      w.set(p, g, static_cast<double>(hits), hits > 0);
    }
  }
  const auto a = assign::solve(w);
  for (std::size_t p = 0; p < pred.size(); ++p) {
    if (a.col_of_row[p] < 0) continue;
    const auto g = static_cast<std::size_t>(a.col_of_row[p]);
    const auto hits = static_cast<std::size_t>(w.w(p, g));
    c.correct_points += hits;
    if (static_cast<double>(hits) / static_cast<double>(gt_valid[g]) > opt.match_ratio) ++c.tp;
  }
  c.fp = c.pred_lanes - c.tp;
  c.fn = c.gt_lanes - c.tp;
  return c;
}

inline TusimpleReport tusimple_report(const TusimpleCounts& t, std::size_t images) {
  TusimpleReport r;
  r.totals = t;
  r.images = images;
  r.accuracy = safe_ratio(static_cast<double>(t.correct_points), static_cast<double>(t.gt_points));
  r.fp_rate = safe_ratio(static_cast<double>(t.fp), static_cast<double>(t.pred_lanes));
  r.fn_rate = safe_ratio(static_cast<double>(t.fn), static_cast<double>(t.gt_lanes));
  r.f1 = scores({t.tp, t.fp, t.fn}).f1;
  return r;
}

// Evaluates predictions against ground truth keyed by raw_file. Ground-truth
// images without a prediction count every lane as missed.
inline TusimpleReport tusimple_eval(const std::vector<annot::TusimpleRecord>& pred,
                                    const std::vector<annot::TusimpleRecord>& gt,
                                    const TusimpleOptions& opt = {}) {
  if (!(opt.pixel_tolerance >= 0.0)) throw ParameterError("pixel tolerance must be >= 0");
  if (!(opt.match_ratio >= 0.0 && opt.match_ratio <= 1.0)) {
    throw ParameterError("match ratio must lie in [0,1]");
  }
  std::unordered_map<std::string, std::size_t> gt_index;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (!gt_index.emplace(gt[i].raw_file, i).second) {
      throw EvaluationError("duplicate ground-truth raw_file '" + gt[i].raw_file + "'");
    }
  }
  std::vector<const annot::TusimpleRecord*> pred_for(gt.size(), nullptr);
  for (const auto& p : pred) {
    const auto it = gt_index.find(p.raw_file);
    if (it == gt_index.end()) {
      throw EvaluationError("prediction for unknown raw_file '" + p.raw_file + "'");
    }
    if (pred_for[it->second]) {
      throw EvaluationError("duplicate prediction for raw_file '" + p.raw_file + "'");
    }
    pred_for[it->second] = &p;
  }

  TusimpleCounts total;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    std::vector<std::vector<double>> pl;
    if (pred_for[i]) pl = align_to_rows(*pred_for[i], gt[i].h_samples);
    total += tusimple_image(pl, gt[i].lanes, opt);
  }
  return tusimple_report(total, gt.size());
}

}  // namespace foglane::metrics
