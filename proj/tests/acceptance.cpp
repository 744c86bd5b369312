// Acceptance checks: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <thread>

#include "foglane/batch.hpp"
#include "foglane/cli.hpp"
#include "support.hpp"

using namespace foglane;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

int lsb(float v) { return static_cast<int>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f)); }

// 1 ----------------------------------------------------------------------
Outcome fog_identity_asymptote() {
  const auto clear = testsupport::road_scene(1640, 590);
  const auto depth = depth::synth_ground_plane_depth(1640, 590, depth::GroundPlaneModel{0.4 * 590});
  fog::FogParams p;
  p.beta = 0.0;
  const auto t0 = Clock::now();
  const auto same = fog::synthesize(clear, depth, p);
  const double runtime = seconds_since(t0);
  int worst_identity = 0;
  for (std::size_t i = 0; i < clear.values().size(); ++i)
    worst_identity = std::max(worst_identity, std::abs(lsb(same.image.values()[i]) - lsb(clear.values()[i])));

  p.beta = 50.0;
  const auto ones = depth::DepthMap{Plane<float>(1640, 590, 1.0f), true};
  const auto fogged = fog::synthesize(clear, ones, p);
  const int a = lsb(static_cast<float>(fogged.atmospheric_light));
  int worst_airlight = 0;
  for (float v : fogged.image.values()) worst_airlight = std::max(worst_airlight, std::abs(lsb(v) - a));

  return {worst_identity <= 1 && worst_airlight <= 1 && runtime < 1.0,
          fmt("identity max %d LSB, asymptote max %d LSB, synthesize %.3f s at 1640x590", worst_identity,
              worst_airlight, runtime)};
}

// 2 ----------------------------------------------------------------------
Outcome fog_tiering() {
  const auto clear = testsupport::road_scene(1640, 590);
  const auto depth = depth::synth_ground_plane_depth(1640, 590, depth::GroundPlaneModel{0.4 * 590});
  std::vector<double> dist;
  std::vector<std::size_t> edges_count;
  for (double beta : {2.0, 4.0, 8.0}) {
    fog::FogParams p;
    p.beta = beta;
    const auto f = fog::synthesize(clear, depth, p);
    double sum = 0.0;
    for (float v : f.image.values()) sum += std::abs(v - f.atmospheric_light);
    dist.push_back(sum / static_cast<double>(f.image.values().size()));
    edges_count.push_back(popcount(edges::canny(f.image)));
  }
  const bool pass = dist[0] > dist[1] && dist[1] > dist[2] && edges_count[0] > edges_count[1] &&
                    edges_count[1] > edges_count[2];
  return {pass, fmt("mean |I-A| %.4f > %.4f > %.4f; canny pixels %zu > %zu > %zu (beta 2,4,8)", dist[0], dist[1],
                    dist[2], edges_count[0], edges_count[1], edges_count[2])};
}

// 3 ----------------------------------------------------------------------
Outcome dark_channel_oracle() {
  std::mt19937 rng(2024);
  std::size_t mismatches = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const auto img = testsupport::random_image(8, 8, rng);
    for (int window : {1, 3, 5}) {
      const auto dc = fog::dark_channel(img, window);
      for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x) mismatches += dc.values(x, y) != testsupport::dark_channel_at(img, x, y, window);
    }
  }
  return {mismatches == 0, fmt("%zu mismatches over 200 images x windows {1,3,5}", mismatches)};
}

// 4 ----------------------------------------------------------------------
Outcome airlight_example() {
  Image img(10, 10, 0.5f);
  img.set(6, 3, 0.9f, 0.8f, 0.85f);
  const double a = fog::estimate_atmospheric_light(img, fog::dark_channel(img, 1), 0.001);
  return {a == static_cast<double>(0.9f), fmt("A = %.9g", a)};
}

// 5 ----------------------------------------------------------------------
Outcome metric_self_identity() {
  testsupport::TempDir tmp;
  std::mt19937 rng(5);
  std::string list;
  std::vector<annot::TusimpleRecord> records;
  std::vector<int> rows;
  for (int r = 160; r <= 710; r += 10) rows.push_back(r);
  for (int i = 0; i < 100; ++i) {
    const auto name = "s/" + std::to_string(i) + ".jpg";
    const auto set = testsupport::random_laneset(rng);
    io::write_text(tmp / "gt" / ("s/" + std::to_string(i) + ".lines.txt"), annot::write_culane(set));
    list += name + "\t" + std::string(dataset::to_string(dataset::kAllScenes[i % 6])) + "\n";
    const auto tset = testsupport::random_laneset(rng, 1280, 720, 5);
    records.push_back(annot::parse_tusimple(annot::write_tusimple(annot::to_tusimple(tset, rows, name))).record);
  }
  fs::copy(tmp / "gt", tmp / "pred", fs::copy_options::recursive);
  const auto rep = batch::culane_f1(tmp / "pred", tmp / "gt", batch::parse_list(list), {}, default_jobs());
  bool pass = rep.mf1 == 1.0;
  std::string f1s;
  for (const auto& t : rep.per_threshold) {
    pass = pass && t.scores.f1 == 1.0;
    f1s += fmt(" %.2f:%.4f", t.threshold, t.scores.f1);
  }
  const auto tr = metrics::tusimple_eval(records, records);
  pass = pass && tr.accuracy == 1.0 && tr.fp_rate == 0.0 && tr.fn_rate == 0.0;
  return {pass, fmt("F1%s, mF1 %.4f; Tusimple accuracy %.4f fp %.4f fn %.4f", f1s.c_str(), rep.mf1, tr.accuracy,
                    tr.fp_rate, tr.fn_rate)};
}

// 6 ----------------------------------------------------------------------
Outcome analytic_iou() {
  auto vertical = [](double x) { return annot::Lane{{{x, 0.0}, {x, 589.0}}}; };
  const auto a = raster::rasterize_lane(vertical(500), 1640, 590, 30);
  const auto b = raster::rasterize_lane(vertical(515), 1640, 590, 30);
  const double v = raster::iou(a, b);
  return {std::abs(v - 1.0 / 3.0) <= 0.03, fmt("IoU = %.4f (target 0.3333 +/- 0.03)", v)};
}

// 7 ----------------------------------------------------------------------
Outcome matching_oracle() {
  std::mt19937 rng(7);
  std::uniform_int_distribution<int> dim(0, 4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> coarse(0, 10);
  std::size_t mismatches = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const auto p = static_cast<std::size_t>(dim(rng));
    const auto g = static_cast<std::size_t>(dim(rng));
    std::vector<double> v(p * g);
    for (auto& x : v) x = trial % 2 ? u(rng) : coarse(rng) / 10.0;
    const metrics::IouMatrix m{p, g, v};
    const auto r = metrics::match_iou(m, 0.5);
    std::vector<int> got(p, -1);
    for (const auto& pr : r.pairs) got[pr.pred] = static_cast<int>(pr.gt);
    mismatches += got != testsupport::brute_match(m, 0.5);
  }
  return {mismatches == 0, fmt("%zu mismatches over 500 matrices up to 4x4", mismatches)};
}

// 8 ----------------------------------------------------------------------
Outcome tusimple_rules() {
  auto run_case = [](auto offset) {
    annot::TusimpleRecord g{"x.jpg", {}, {{}}}, p{"x.jpg", {}, {{}}};
    for (int i = 0; i < 10; ++i) {
      g.h_samples.push_back(200 + 10 * i);
      g.lanes[0].push_back(400 + 5 * i);
    }
    p.h_samples = g.h_samples;
    for (int i = 0; i < 10; ++i) p.lanes[0].push_back(g.lanes[0][static_cast<std::size_t>(i)] + offset(i));
    return metrics::tusimple_eval({p}, {g});
  };
  const auto nine = run_case([](int i) { return i == 4 ? 25.0 : 19.0; });
  const auto eight = run_case([](int i) { return i < 2 ? -21.0 : 20.0; });
  const bool pass = nine.totals.tp == 1 && std::abs(nine.accuracy - 0.9) < 1e-12 && eight.totals.tp == 0 &&
                    eight.totals.fp == 1 && eight.totals.fn == 1 && std::abs(eight.accuracy - 0.8) < 1e-12;
  return {pass, fmt("9/10: tp %zu acc %.4f; 8/10: fp %zu fn %zu acc %.4f", nine.totals.tp, nine.accuracy,
                    eight.totals.fp, eight.totals.fn, eight.accuracy)};
}

// 9 ----------------------------------------------------------------------
Outcome format_round_trips() {
  std::mt19937 rng(9);
  double worst = 0.0;
  std::size_t shape_errors = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto set = testsupport::random_laneset(rng);
    const auto back = annot::parse_culane(annot::write_culane(set), set.image_width, set.image_height).value;
    if (back.lanes.size() != set.lanes.size()) {
      ++shape_errors;
      continue;
    }
    for (std::size_t l = 0; l < set.lanes.size(); ++l) {
      const auto& a = set.lanes[l].points;
      const auto& b = back.lanes[l].points;
      if (a.size() != b.size()) {
        ++shape_errors;
        continue;
      }
      for (std::size_t k = 0; k < a.size(); ++k)
        worst = std::max({worst, std::abs(a[k].x - b[k].x), std::abs(a[k].y - b[k].y)});
    }
  }

  std::size_t tusimple_diffs = 0;
  std::uniform_int_distribution<int> xs(0, 1279);
  std::bernoulli_distribution gap(0.2);
  for (int i = 0; i < 200; ++i) {
    std::ostringstream line;
    line << R"({"lanes":[)";
    for (int l = 0; l < 3; ++l) {
      line << (l ? ",[" : "[");
      // Leading/trailing -2 only; interior gaps do not survive a lane set.
      const int lead = gap(rng) ? 2 : 0;
      const int trail = gap(rng) ? 3 : 0;
      for (int r = 0; r < 56; ++r) {
        const bool missing = r < lead || r >= 56 - trail;
        line << (r ? "," : "") << (missing ? -2 : xs(rng));
      }
      line << "]";
    }
    line << R"(],"h_samples":[)";
    for (int r = 0; r < 56; ++r) line << (r ? "," : "") << 160 + 10 * r;
    line << R"(],"raw_file":"clips/)" << i << R"(/20.jpg"})";
    const auto p = annot::parse_tusimple(line.str());
    tusimple_diffs += annot::write_tusimple(annot::to_tusimple(p.lanes, p.record.h_samples, p.record.raw_file)) !=
                      line.str();
  }
  return {worst <= 1e-4 && shape_errors == 0 && tusimple_diffs == 0,
          fmt("CULane max error %.2e over 1000 sets (%zu shape errors); Tusimple %zu/200 records differ", worst,
              shape_errors, tusimple_diffs)};
}

// 10 ---------------------------------------------------------------------
Outcome split_contract() {
  dataset::Manifest m;
  for (int i = 0; i < 1200; ++i) {
    const auto scene = dataset::kAllScenes[static_cast<std::size_t>(i * 7 % 11 % 6)];
    m.entries.push_back({"img/" + std::to_string(100000 + i) + ".jpg", scene});
  }
  std::map<dataset::SceneTag, int> total;
  for (const auto& e : m.entries) ++total[e.scene];
  const auto a = dataset::split_dataset(m, 2, 1, 42);
  const auto b = dataset::split_dataset(m, 2, 1, 42);
  bool pass = a.train == b.train && a.test == b.test && total.size() == 6;
  double worst = 0.0;
  for (const auto& [scene, n] : total) {
    int tr = 0, te = 0;
    for (const auto& e : a.train.entries) tr += e.scene == scene;
    for (const auto& e : a.test.entries) te += e.scene == scene;
    pass = pass && tr + te == n;
    worst = std::max(worst, std::abs(tr - 2.0 * n / 3.0));
  }
  pass = pass && worst <= 1.0;
  return {pass, fmt("max per-scene deviation %.3f items across %zu scenes; reruns identical: %s", worst, total.size(),
                    a.train == b.train ? "yes" : "no")};
}

// 11 ---------------------------------------------------------------------
Outcome throughput() {
  testsupport::TempDir tmp;
  constexpr int kImages = 24;
  for (int i = 0; i < kImages; ++i)
    io::save_image(tmp / "in" / (std::to_string(i) + ".jpg"), testsupport::road_scene(1640, 590, 100 + i));
  const unsigned jobs = default_jobs();
  batch::DepthSource src{std::nullopt, batch::GroundPlaneSpec{}};
  auto t0 = Clock::now();
  const auto s = batch::fog_batch(tmp / "in", src, {}, tmp / "out", jobs);
  const double fog_rate = kImages / seconds_since(t0);

  std::mt19937 rng(11);
  std::normal_distribution<double> jitter(0.0, 4.0);
  std::string list;
  for (int i = 0; i < 1000; ++i) {
    const auto rel = "e/" + std::to_string(i);
    auto set = testsupport::random_laneset(rng, 1640, 590, 4);
    io::write_text(tmp / "gt" / (rel + ".lines.txt"), annot::write_culane(set));
    for (auto& lane : set.lanes)
      for (auto& pt : lane.points) pt.x += jitter(rng);
    io::write_text(tmp / "pred" / (rel + ".lines.txt"), annot::write_culane(set));
    list += rel + ".jpg\n";
  }
  t0 = Clock::now();
  const auto rep = batch::culane_f1(tmp / "pred", tmp / "gt", batch::parse_list(list), {}, jobs);
  const double eval_s = seconds_since(t0);

  const bool pass = s.failed == 0 && fog_rate >= 10.0 && eval_s < 60.0 && rep.images == 1000;
  return {pass, fmt("fog %.2f img/s at 1640x590 (target >= 10), eval 1000 pairs %.2f s (target < 60); %u worker(s), "
                    "%u hardware thread(s)",
                    fog_rate, eval_s, jobs, std::thread::hardware_concurrency())};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"fog identity & asymptote", fog_identity_asymptote},
      {"fog tiering", fog_tiering},
      {"dark channel oracle", dark_channel_oracle},
      {"atmospheric light example", airlight_example},
      {"metric self-identity", metric_self_identity},
      {"analytic IoU", analytic_iou},
      {"matching oracle", matching_oracle},
      {"Tusimple rules", tusimple_rules},
      {"format round trips", format_round_trips},
      {"split contract", split_contract},
      {"throughput", throughput},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  " << (i + 1) << ". " << criteria[i].first << " -- " << o.detail
              << std::endl;
  }
  std::cout << (criteria.size() - static_cast<std::size_t>(failures)) << "/" << criteria.size() << " criteria passed"
            << std::endl;
  return failures == 0 ? 0 : 1;
}
