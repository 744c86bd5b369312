#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <CLI11.hpp>

#include "foglane/annotation.hpp"
#include "foglane/batch.hpp"
#include "foglane/dataset.hpp"
#include "foglane/depth.hpp"
#include "foglane/io.hpp"
#include "foglane/metrics.hpp"
#include "foglane/parallel.hpp"

namespace foglane::cli {

namespace fs = std::filesystem;

inline constexpr int kExitOk = 0;
inline constexpr int kExitPartial = 1;
inline constexpr int kExitUsage = 2;

struct UsageError : Error {
  using Error::Error;
};

// --help output; not an error, exits 0.
struct HelpRequested : Error {
  using Error::Error;
};

struct FogOptions {
  std::string input;
  std::string out;
  std::optional<double> beta;
  std::string preset;
  std::optional<double> airlight;
  int dc_window = 15;
  double percentile = 0.001;
  std::string depth_dir;
  bool synthetic = false;
};

struct GroundOptions {
  std::optional<double> horizon;
  double horizon_ratio = 0.4;
  double scale = 100.0;
  double d_min = 0.5;
  double d_max = 10.0;
};

struct DepthSynthOptions {
  int width = annot::kDefaultWidth;
  int height = annot::kDefaultHeight;
  std::string out;
};

struct ConvertOptions {
  std::string from;
  std::string to;
  std::string input;
  std::string list;
  std::string out;
  std::string h_samples;
  std::string image_size = "1640x590";
};

struct EdgesOptions {
  std::string input;
  std::string labels;
  std::string out;
  double low = 50.0;
  double high = 150.0;
  double sigma = 1.4;
  int stroke = 3;
  int downsample = 1;
};

struct EvalCulaneOptions {
  std::string pred;
  std::string gt;
  std::string list;
  int width = metrics::kLineWidth;
  std::string thresholds = "0.5,0.65,0.75,0.85";
  std::string grid = "0.5:0.95:0.05";
  std::string image_size = "1640x590";
};

struct EvalTusimpleOptions {
  std::string pred;
  std::string gt;
  double tol = metrics::kPixelTolerance;
  double ratio = metrics::kMatchRatio;
};

struct SampleOptions {
  std::string input;
  std::string list;
  int interval = 0;
  std::string out;
};

struct ResizeOptions {
  std::string input;
  std::string out;
  std::string to = "1640x590";
  bool annotations = false;
};

struct SplitOptions {
  std::string manifest;
  std::string ratio = "2:1";
  std::string out;
};

struct ManifestOptions {
  std::string root;
  std::string scenes;
  std::string out;
};

struct RunConfig {
  std::string command;  // "fog", "eval culane", ...
  unsigned jobs = default_jobs();
  std::uint64_t seed = 0;
  std::string report;

  FogOptions fog;
  GroundOptions ground;
  DepthSynthOptions depth_synth;
  ConvertOptions convert;
  EdgesOptions edges;
  EvalCulaneOptions eval_culane;
  EvalTusimpleOptions eval_tusimple;
  SampleOptions sample;
  ResizeOptions resize;
  SplitOptions split;
  ManifestOptions manifest;

  // Resolved during validation.
  fog::FogParams fog_params;
  int size_w = 0;
  int size_h = 0;
  int ratio_train = 2;
  int ratio_test = 1;
  std::vector<double> thresholds;
  std::vector<double> grid;
};

namespace detail {

inline std::pair<int, int> parse_pair(const std::string& s, char sep, const char* what) {
  const auto p = s.find(sep);
  auto num = [&](std::string_view v) {
    int out = 0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || ptr != v.data() + v.size() || out < 1) {
      throw UsageError(std::string("bad ") + what + " '" + s + "'");
    }
    return out;
  };
  if (p == std::string::npos) throw UsageError(std::string("bad ") + what + " '" + s + "'");
  const std::string_view sv(s);
  return {num(sv.substr(0, p)), num(sv.substr(p + 1))};
}

inline double parse_double(std::string_view v, const char* what) {
  double out = 0.0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size()) {
    throw UsageError(std::string("bad ") + what + " '" + std::string(v) + "'");
  }
  return out;
}

inline std::vector<double> parse_threshold_list(const std::string& s) {
  std::vector<double> out;
  std::size_t p = 0;
  while (p <= s.size()) {
    auto q = s.find(',', p);
    if (q == std::string::npos) q = s.size();
    const double v = parse_double(std::string_view(s).substr(p, q - p), "threshold");
    if (!(v > 0.0 && v <= 1.0)) throw UsageError("thresholds must lie in (0,1]");
    // snap to a whole percentage so values compare equal to the mF1 grid
    out.push_back(std::round(v * 1e4) / 1e4);
    p = q + 1;
  }
  return out;
}

// "start:stop:step", inclusive, built from integer multiples of step.
inline std::vector<double> parse_grid(const std::string& s) {
  const auto a = s.find(':');
  const auto b = a == std::string::npos ? a : s.find(':', a + 1);
  if (b == std::string::npos) throw UsageError("mF1 grid must be start:stop:step");
  const std::string_view sv(s);
  const double start = parse_double(sv.substr(0, a), "grid start");
  const double stop = parse_double(sv.substr(a + 1, b - a - 1), "grid stop");
  const double step = parse_double(sv.substr(b + 1), "grid step");
  if (!(step > 0.0) || stop < start || !(start > 0.0) || stop > 1.0) {
    throw UsageError("mF1 grid must ascend within (0,1]");
  }
  std::vector<double> out;
  const auto n = static_cast<int>(std::floor((stop - start) / step + 1e-9));
  for (int k = 0; k <= n; ++k) out.push_back(std::round((start + k * step) * 1e4) / 1e4);
  return out;
}

inline void require_dir(const std::string& p, const char* flag) {
  std::error_code ec;
  if (!fs::is_directory(p, ec)) throw UsageError(std::string(flag) + ": not a directory: " + p);
}

inline void require_file(const std::string& p, const char* flag) {
  std::error_code ec;
  if (!fs::is_regular_file(p, ec)) throw UsageError(std::string(flag) + ": no such file: " + p);
}

inline void add_ground_flags(CLI::App* app, GroundOptions& g) {
  app->add_option("--horizon", g.horizon, "Horizon row in pixels [toolkit default: 0.4 x height]");
  app->add_option("--horizon-ratio", g.horizon_ratio,
                  "Horizon as a fraction of the image height when --horizon is absent [toolkit default]")
      ->capture_default_str();
  app->add_option("--depth-scale", g.scale, "Ground-plane scale k in d = k / (row - horizon) [toolkit default]")
      ->capture_default_str();
  app->add_option("--dmin", g.d_min, "Nearest clamped depth [toolkit default]")->capture_default_str();
  app->add_option("--dmax", g.d_max, "Far-field depth, also the normalizer [toolkit default]")
      ->capture_default_str();
}

inline batch::GroundPlaneSpec ground_spec(const GroundOptions& g) {
  return {g.horizon, g.horizon_ratio, g.scale, g.d_min, g.d_max};
}

inline void validate(RunConfig& c) {
  if (c.jobs < 1) throw UsageError("--jobs must be >= 1");
  const auto& cmd = c.command;
  if (cmd == "fog") {
    auto& f = c.fog;
    require_dir(f.input, "--input");
    if (f.beta && !f.preset.empty()) throw UsageError("--beta and --preset are mutually exclusive");
    double beta = 4.0;
    if (f.beta) beta = *f.beta;
    if (!f.preset.empty()) {
      static const std::map<std::string, double> presets{{"light", 2.0}, {"medium", 4.0}, {"heavy", 8.0}};
      const auto it = presets.find(f.preset);
      if (it == presets.end()) throw UsageError("--preset must be light, medium or heavy");
      beta = it->second;
    }
    c.fog_params.beta = beta;
    c.fog_params.atmospheric_light = f.airlight;
    c.fog_params.dc_window = f.dc_window;
    c.fog_params.bright_percentile = f.percentile;
    try {
      c.fog_params.validate();
    } catch (const ParameterError& e) {
      throw UsageError(e.what());
    }
    if (f.depth_dir.empty() && !f.synthetic) {
      throw UsageError("fog needs --depth <dir> and/or --synthetic-depth");
    }
    if (!f.depth_dir.empty()) require_dir(f.depth_dir, "--depth");
  } else if (cmd == "depth-synth") {
    if (c.depth_synth.width < 1 || c.depth_synth.height < 1) throw UsageError("size must be >= 1");
    try {
      ground_spec(c.ground).resolve(c.depth_synth.height).validate(c.depth_synth.height);
    } catch (const ParameterError& e) {
      throw UsageError(e.what());
    }
  } else if (cmd == "convert") {
    auto& v = c.convert;
    if (v.from == v.to) throw UsageError("--from and --to must differ");
    if (v.to == "tusimple") {
      require_dir(v.input, "--input");
      require_file(v.list, "--list");
      if (v.h_samples.empty()) throw UsageError("tusimple output requires --h-samples");
      try {
        annot::parse_rows(v.h_samples);
      } catch (const ParameterError& e) {
        throw UsageError(e.what());
      }
    } else {
      require_file(v.input, "--input");
    }
    std::tie(c.size_w, c.size_h) = parse_pair(v.image_size, 'x', "--image-size");
  } else if (cmd == "edges") {
    auto& e = c.edges;
    require_dir(e.input, "--input");
    if (!e.labels.empty()) require_dir(e.labels, "--labels");
    if (!(e.sigma > 0.0)) throw UsageError("--sigma must be > 0");
    if (!(e.low >= 0.0 && e.low < e.high)) throw UsageError("need 0 <= --low < --high");
    if (e.stroke < 1) throw UsageError("--stroke must be >= 1");
    if (e.downsample < 1) throw UsageError("--downsample must be >= 1");
  } else if (cmd == "eval culane") {
    auto& e = c.eval_culane;
    require_dir(e.gt, "--gt");
    require_dir(e.pred, "--pred");
    require_file(e.list, "--list");
    if (e.width < 1) throw UsageError("--width must be >= 1");
    c.thresholds = parse_threshold_list(e.thresholds);
    c.grid = parse_grid(e.grid);
    std::tie(c.size_w, c.size_h) = parse_pair(e.image_size, 'x', "--image-size");
  } else if (cmd == "eval tusimple") {
    auto& e = c.eval_tusimple;
    require_file(e.pred, "--pred");
    require_file(e.gt, "--gt");
    if (!(e.tol >= 0.0)) throw UsageError("--tol must be >= 0");
    if (!(e.ratio >= 0.0 && e.ratio <= 1.0)) throw UsageError("--ratio must lie in [0,1]");
  } else if (cmd == "sample") {
    auto& s = c.sample;
    if (s.interval < 1) throw UsageError("--interval must be >= 1");
    if (s.input.empty() == s.list.empty()) throw UsageError("sample needs exactly one of --input / --list");
    if (!s.input.empty()) require_dir(s.input, "--input");
    if (!s.list.empty()) require_file(s.list, "--list");
  } else if (cmd == "resize") {
    require_dir(c.resize.input, "--input");
    std::tie(c.size_w, c.size_h) = parse_pair(c.resize.to, 'x', "--to");
  } else if (cmd == "split") {
    require_file(c.split.manifest, "--manifest");
    std::tie(c.ratio_train, c.ratio_test) = parse_pair(c.split.ratio, ':', "--ratio");
  } else if (cmd == "manifest") {
    require_dir(c.manifest.root, "--root");
    if (!c.manifest.scenes.empty()) require_file(c.manifest.scenes, "--scenes");
  }
}

}  // namespace detail

// Parses and validates argv (program name first). Throws UsageError or
// HelpRequested.
inline RunConfig parse_args(const std::vector<std::string>& argv) {
  RunConfig c;
  CLI::App app{"Fog synthesis and lane benchmark toolkit", argv.empty() ? "foglane" : argv.front()};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Help for every subcommand");

  auto common = [&](CLI::App* sub) {
    sub->add_option("-j,--jobs", c.jobs, "Worker threads [toolkit default: hardware threads]");
  };
  auto report = [&](CLI::App* sub, const std::string& what) {
    sub->add_option("--report", c.report, what);
  };

  // fog
  auto* fog = app.add_subcommand("fog", "Render foggy copies of a directory of clear images");
  fog->add_option("--input", c.fog.input, "Directory of clear images")->required();
  fog->add_option("--out", c.fog.out, "Output directory (same relative paths)")->required();
  fog->add_option("--beta", c.fog.beta,
                  "Extinction coefficient on normalized depth [toolkit default: 4; published tiers 2/4/8]");
  fog->add_option("--preset", c.fog.preset, "light | medium | heavy = beta 2 | 4 | 8 [published values]");
  fog->add_option("--airlight", c.fog.airlight, "Fixed atmospheric light in [0,1] instead of estimating it");
  fog->add_option("--dc-window", c.fog.dc_window, "Dark-channel window, odd [toolkit default]")
      ->capture_default_str();
  fog->add_option("--percentile", c.fog.percentile,
                  "Fraction of brightest dark-channel pixels used for airlight [published value: 0.001]")
      ->capture_default_str();
  fog->add_option("--depth", c.fog.depth_dir, "Directory of depth maps named <stem>.png (16-bit) or <stem>.pfm");
  fog->add_flag("--synthetic-depth", c.fog.synthetic,
                "Use the ground-plane depth model (fallback when --depth is also given)");
  detail::add_ground_flags(fog, c.ground);
  report(fog, "Report path [toolkit default: <out>/report.jsonl]");
  common(fog);

  // depth-synth
  auto* ds = app.add_subcommand("depth-synth", "Write a synthetic ground-plane depth map");
  ds->add_option("--width", c.depth_synth.width, "Width [toolkit default]")->capture_default_str();
  ds->add_option("--height", c.depth_synth.height, "Height [toolkit default]")->capture_default_str();
  ds->add_option("--out", c.depth_synth.out, "Output .png (16-bit) or .pfm")->required();
  detail::add_ground_flags(ds, c.ground);

  // convert
  auto* cv = app.add_subcommand("convert", "Convert lane annotations between CULane and Tusimple");
  cv->add_option("--from", c.convert.from, "culane | tusimple")
      ->required()
      ->check(CLI::IsMember({"culane", "tusimple"}));
  cv->add_option("--to", c.convert.to, "culane | tusimple")
      ->required()
      ->check(CLI::IsMember({"culane", "tusimple"}));
  cv->add_option("--input", c.convert.input, "CULane root (from culane) or Tusimple record file")->required();
  cv->add_option("--list", c.convert.list, "List of image paths (from culane)");
  cv->add_option("--out", c.convert.out, "Tusimple record file or CULane root")->required();
  cv->add_option("--h-samples", c.convert.h_samples, "Rows for Tusimple output: start:stop:step or a,b,c");
  cv->add_option("--image-size", c.convert.image_size, "Annotation image size WxH [toolkit default]")
      ->capture_default_str();

  // edges
  auto* ed = app.add_subcommand("edges", "Generate edge-supervision labels (Canny + lane strokes)");
  ed->add_option("--input", c.edges.input, "Directory of images")->required();
  ed->add_option("--labels", c.edges.labels, "Directory of <stem>.lines.txt lane labels");
  ed->add_option("--out", c.edges.out, "Output directory of 0/255 PNG maps")->required();
  ed->add_option("--low", c.edges.low, "Canny low threshold, 8-bit scale [toolkit default]")->capture_default_str();
  ed->add_option("--high", c.edges.high, "Canny high threshold, 8-bit scale [toolkit default]")
      ->capture_default_str();
  ed->add_option("--sigma", c.edges.sigma, "Gaussian sigma [toolkit default]")->capture_default_str();
  ed->add_option("--stroke", c.edges.stroke, "Lane stroke width in pixels [toolkit default]")->capture_default_str();
  ed->add_option("--downsample", c.edges.downsample, "Block-max downsample factor [toolkit default]")
      ->capture_default_str();
  report(ed, "Report path [toolkit default: <out>/report.jsonl]");
  common(ed);

  // eval
  auto* ev = app.add_subcommand("eval", "Evaluate lane predictions");
  ev->require_subcommand(1);
  auto* evc = ev->add_subcommand("culane", "IoU-based F1 over 30 px lane strokes");
  evc->add_option("--pred", c.eval_culane.pred, "Prediction root of .lines.txt sidecars")->required();
  evc->add_option("--gt", c.eval_culane.gt, "Ground-truth root of .lines.txt sidecars")->required();
  evc->add_option("--list", c.eval_culane.list, "Image list or manifest (path<TAB>scene)")->required();
  evc->add_option("--width", c.eval_culane.width, "Lane stroke width [published value: 30]")
      ->capture_default_str();
  evc->add_option("--thresholds", c.eval_culane.thresholds,
                  "Reported IoU thresholds [published: 0.5 primary; table columns 0.5,0.65,0.75,0.85]")
      ->capture_default_str();
  evc->add_option("--mf1-grid", c.eval_culane.grid, "mF1 threshold grid start:stop:step [toolkit default]")
      ->capture_default_str();
  evc->add_option("--image-size", c.eval_culane.image_size, "Image size WxH [published value: 1640x590]")
      ->capture_default_str();
  report(evc, "Report path [toolkit default: eval_culane.jsonl]");
  common(evc);
  auto* evt = ev->add_subcommand("tusimple", "Point-tolerance accuracy");
  evt->add_option("--pred", c.eval_tusimple.pred, "Prediction record file")->required();
  evt->add_option("--gt", c.eval_tusimple.gt, "Ground-truth record file")->required();
  evt->add_option("--tol", c.eval_tusimple.tol, "Lateral tolerance in pixels [published value: 20]")
      ->capture_default_str();
  evt->add_option("--ratio", c.eval_tusimple.ratio, "Matched-point ratio for a true positive [published value: 0.85]")
      ->capture_default_str();
  report(evt, "Report path [toolkit default: eval_tusimple.jsonl]");

  // sample
  auto* sm = app.add_subcommand("sample", "Keep every N-th frame of an ordered sequence");
  sm->add_option("--input", c.sample.input, "Directory of frames (sorted by name)");
  sm->add_option("--list", c.sample.list, "File listing frames in order");
  sm->add_option("--interval", c.sample.interval, "Frame interval (required; published clips used 20)")->required();
  sm->add_option("--out", c.sample.out, "Output list file [toolkit default: standard output]");

  // resize
  auto* rs = app.add_subcommand("resize", "Resize a dataset (and its lane sidecars) to a fixed size");
  rs->add_option("--input", c.resize.input, "Input root")->required();
  rs->add_option("--out", c.resize.out, "Output root")->required();
  rs->add_option("--to", c.resize.to, "Target WxH [published value: 1640x590]")->capture_default_str();
  rs->add_flag("--with-annotations", c.resize.annotations, "Rescale <stem>.lines.txt sidecars too");
  report(rs, "Report path [toolkit default: <out>/report.jsonl]");
  common(rs);

  // split
  auto* sp = app.add_subcommand("split", "Scene-balanced train/test split of a manifest");
  sp->add_option("--manifest", c.split.manifest, "Manifest file (path<TAB>scene)")->required();
  sp->add_option("--ratio", c.split.ratio, "train:test [published value: 2:1]")->capture_default_str();
  sp->add_option("--seed", c.seed, "Shuffle seed [toolkit default: 0]")->capture_default_str();
  sp->add_option("--out", c.split.out, "Directory for train.txt and test.txt")->required();

  // manifest
  auto* mf = app.add_subcommand("manifest", "List the images under a root with scene tags");
  mf->add_option("--root", c.manifest.root, "Dataset root")->required();
  mf->add_option("--scenes", c.manifest.scenes, "Scene map: path<TAB>scene per line (later lines win)");
  mf->add_option("--out", c.manifest.out, "Manifest file")->required();

  std::vector<std::string> args(argv.size() > 1 ? argv.begin() + 1 : argv.end(), argv.end());
  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::CallForHelp&) {
    const CLI::App* cur = &app;
    while (!cur->get_subcommands().empty()) cur = cur->get_subcommands().front();
    throw HelpRequested(cur->help());
  } catch (const CLI::CallForAllHelp&) {
    throw HelpRequested(app.help("", CLI::AppFormatMode::All));
  } catch (const CLI::ParseError& e) {
    std::string msg = e.what();
    if (app.get_subcommands().empty()) msg += "\n" + app.help();
    throw UsageError(msg);
  }

  for (auto* sub : app.get_subcommands()) {
    c.command = sub->get_name();
    for (auto* inner : sub->get_subcommands()) c.command += " " + inner->get_name();
  }
  detail::validate(c);
  return c;
}

namespace detail {

inline void write_report(const fs::path& p, const std::vector<batch::Json>& records) {
  io::write_text(p, batch::to_jsonl(records));
}

inline int batch_exit(const batch::Summary& s, std::ostream& out, std::ostream& err, const char* verb) {
  out << verb << ' ' << s.succeeded << " file(s), " << s.failed << " failure(s)\n";
  for (const auto& r : s.records) {
    if (r.value("status", "") != "ok") {
      err << "error: " << r.value("path", "") << ": " << r.value("error", "") << '\n';
    }
  }
  return s.failed == 0 ? kExitOk : kExitPartial;
}

inline std::string fixed(double v, int digits = 4) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

inline int run_fog(const RunConfig& c, std::ostream& out, std::ostream& err) {
  batch::DepthSource src;
  if (!c.fog.depth_dir.empty()) src.depth_dir = c.fog.depth_dir;
  if (c.fog.synthetic) src.synthetic = ground_spec(c.ground);
  const auto s = batch::fog_batch(c.fog.input, src, c.fog_params, c.fog.out, c.jobs);
  write_report(c.report.empty() ? fs::path(c.fog.out) / "report.jsonl" : fs::path(c.report), s.records);
  return batch_exit(s, out, err, "fogged");
}

inline int run_depth_synth(const RunConfig& c, std::ostream& out) {
  const auto model = ground_spec(c.ground).resolve(c.depth_synth.height);
  const auto d = depth::synth_ground_plane_depth(c.depth_synth.width, c.depth_synth.height, model);
  io::save_depth(c.depth_synth.out, d);
  out << "wrote " << c.depth_synth.out << " (" << c.depth_synth.width << "x" << c.depth_synth.height
      << ", horizon " << model.horizon_row << ")\n";
  return kExitOk;
}

inline int run_convert(const RunConfig& c, std::ostream& out, std::ostream& err) {
  const auto& v = c.convert;
  std::size_t dropped = 0;
  std::size_t written = 0;
  if (v.to == "tusimple") {
    const auto rows = annot::parse_rows(v.h_samples);
    std::string text;
    for (const auto& e : batch::parse_list(io::read_text(v.list))) {
      const auto parsed =
          annot::parse_culane(io::read_text(io::sidecar(v.input, e.path, ".lines.txt")), c.size_w, c.size_h);
      dropped += parsed.dropped;
      std::string raw = e.path;
      while (!raw.empty() && raw.front() == '/') raw.erase(raw.begin());
      text += annot::convert(parsed.value, annot::Format::tusimple, rows, raw);
      text += '\n';
      ++written;
    }
    io::write_text(v.out, text);
  } else {
    for (const auto& rec : annot::parse_tusimple_file(io::read_text(v.input))) {
      std::size_t d = 0;
      const auto set = annot::to_culane(rec, &d, c.size_w, c.size_h);
      dropped += d;
      io::write_text(io::sidecar(v.out, rec.raw_file, ".lines.txt"), annot::write_culane(set));
      ++written;
    }
  }
  if (dropped) err << "warning: dropped " << dropped << " lane(s) with fewer than 2 points\n";
  out << "converted " << written << " annotation(s) to " << v.to << '\n';
  return kExitOk;
}

inline int run_edges(const RunConfig& c, std::ostream& out, std::ostream& err) {
  batch::EdgeOptions opt;
  opt.canny = {c.edges.sigma, c.edges.low, c.edges.high};
  opt.stroke_width = c.edges.stroke;
  opt.downsample = c.edges.downsample;
  std::optional<fs::path> labels;
  if (!c.edges.labels.empty()) labels = c.edges.labels;
  const auto s = batch::edges_batch(c.edges.input, labels, c.edges.out, opt, c.jobs);
  write_report(c.report.empty() ? fs::path(c.edges.out) / "report.jsonl" : fs::path(c.report), s.records);
  return batch_exit(s, out, err, "labelled");
}

inline int run_eval_culane(const RunConfig& c, std::ostream& out, std::ostream& err) {
  batch::CULaneOptions opt;
  opt.thresholds = c.thresholds;
  opt.grid = c.grid;
  opt.line_width = c.eval_culane.width;
  opt.image_width = c.size_w;
  opt.image_height = c.size_h;
  std::vector<std::string> warnings;
  const auto list = batch::parse_list(io::read_text(c.eval_culane.list));
  const auto rep = batch::culane_f1(c.eval_culane.pred, c.eval_culane.gt, list, opt, c.jobs, &warnings);
  for (const auto& w : warnings) err << "warning: " << w << " (counted as no lanes)\n";

  out << "images " << rep.images << "\n";
  out << "threshold  tp  fp  fn  precision  recall  f1\n";
  for (const auto& t : rep.per_threshold) {
    out << fixed(t.threshold, 2) << "  " << t.counts.tp << "  " << t.counts.fp << "  " << t.counts.fn << "  "
        << fixed(t.scores.precision) << "  " << fixed(t.scores.recall) << "  " << fixed(t.scores.f1) << '\n';
  }
  out << "mF1 " << fixed(rep.mf1) << '\n';
  for (const auto& [scene, counts] : rep.per_scene) {
    out << scene;
    for (const auto& k : counts) out << "  " << fixed(metrics::scores(k).f1);
    out << '\n';
  }
  write_report(c.report.empty() ? fs::path("eval_culane.jsonl") : fs::path(c.report),
               {batch::report_json(rep, c.thresholds)});
  return kExitOk;
}

inline int run_eval_tusimple(const RunConfig& c, std::ostream& out) {
  const auto pred = annot::parse_tusimple_file(io::read_text(c.eval_tusimple.pred));
  const auto gt = annot::parse_tusimple_file(io::read_text(c.eval_tusimple.gt));
  const auto rep = metrics::tusimple_eval(pred, gt, {c.eval_tusimple.tol, c.eval_tusimple.ratio});
  out << "images " << rep.images << '\n'
      << "accuracy " << fixed(rep.accuracy) << '\n'
      << "fp " << fixed(rep.fp_rate) << '\n'
      << "fn " << fixed(rep.fn_rate) << '\n'
      << "f1 " << fixed(rep.f1) << '\n';
  write_report(c.report.empty() ? fs::path("eval_tusimple.jsonl") : fs::path(c.report),
               {batch::report_json(rep)});
  return kExitOk;
}

inline int run_sample(const RunConfig& c, std::ostream& out) {
  std::vector<std::string> frames;
  if (!c.sample.input.empty()) {
    frames = dataset::list_images(c.sample.input);
  } else {
    for (const auto& e : batch::parse_list(io::read_text(c.sample.list))) frames.push_back(e.path);
  }
  const auto kept = dataset::sample_frames(frames, c.sample.interval);
  std::string text;
  for (const auto& f : kept) text += f + "\n";
  if (c.sample.out.empty()) {
    out << text;
  } else {
    io::write_text(c.sample.out, text);
    out << "kept " << kept.size() << " of " << frames.size() << " frame(s)\n";
  }
  return kExitOk;
}

inline int run_resize(const RunConfig& c, std::ostream& out, std::ostream& err) {
  const auto s = batch::resize_dataset(c.resize.input, c.resize.out, c.size_w, c.size_h, c.resize.annotations, c.jobs);
  write_report(c.report.empty() ? fs::path(c.resize.out) / "report.jsonl" : fs::path(c.report), s.records);
  return batch_exit(s, out, err, "resized");
}

inline int run_split(const RunConfig& c, std::ostream& out) {
  const auto manifest = dataset::parse_manifest(io::read_text(c.split.manifest));
  const auto split = dataset::split_dataset(manifest, c.ratio_train, c.ratio_test, c.seed);
  io::write_text(fs::path(c.split.out) / "train.txt", dataset::write_manifest(split.train));
  io::write_text(fs::path(c.split.out) / "test.txt", dataset::write_manifest(split.test));
  out << "train " << split.train.entries.size() << ", test " << split.test.entries.size() << '\n';
  return kExitOk;
}

inline int run_manifest(const RunConfig& c, std::ostream& out, std::ostream& err) {
  std::optional<dataset::SceneMap> scenes;
  if (!c.manifest.scenes.empty()) {
    scenes = dataset::parse_scene_map(io::read_text(c.manifest.scenes));
    if (scenes->overridden) {
      err << "warning: " << scenes->overridden << " duplicate scene assignment(s); later lines win\n";
    }
  }
  const auto m = dataset::build_manifest(c.manifest.root, scenes ? &*scenes : nullptr);
  io::write_text(c.manifest.out, dataset::write_manifest(m));
  out << "listed " << m.entries.size() << " image(s)\n";
  return kExitOk;
}

}  // namespace detail

// Executes a validated config. Hard failures (unreadable ground truth,
// malformed inputs) exit 1 with a message on `err`.
inline int run(const RunConfig& c, std::ostream& out, std::ostream& err) {
  try {
    if (c.command == "fog") return detail::run_fog(c, out, err);
    if (c.command == "depth-synth") return detail::run_depth_synth(c, out);
    if (c.command == "convert") return detail::run_convert(c, out, err);
    if (c.command == "edges") return detail::run_edges(c, out, err);
    if (c.command == "eval culane") return detail::run_eval_culane(c, out, err);
    if (c.command == "eval tusimple") return detail::run_eval_tusimple(c, out);
    if (c.command == "sample") return detail::run_sample(c, out);
    if (c.command == "resize") return detail::run_resize(c, out, err);
    if (c.command == "split") return detail::run_split(c, out);
    if (c.command == "manifest") return detail::run_manifest(c, out, err);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitPartial;
  }
  err << "error: unknown command '" << c.command << "'\n";
  return kExitUsage;
}

inline int main(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err) {
  RunConfig config;
  try {
    config = parse_args(argv);
  } catch (const HelpRequested& h) {
    out << h.what();
    return kExitOk;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  }
  return run(config, out, err);
}

}  // namespace foglane::cli
