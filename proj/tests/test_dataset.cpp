#include <gtest/gtest.h>

#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include "foglane/dataset.hpp"
#include "foglane/io.hpp"
#include "support.hpp"

using namespace foglane;
using dataset::Entry;
using dataset::Manifest;
using dataset::SceneTag;

namespace {

Manifest make_manifest(const std::map<SceneTag, int>& counts) {
  Manifest m;
  for (const auto& [scene, n] : counts)
    for (int i = 0; i < n; ++i) {
      m.entries.push_back({std::string(dataset::to_string(scene)) + "/" + std::to_string(1000 + i) + ".jpg", scene});
    }
  return m;
}

std::map<SceneTag, int> per_scene(const Manifest& m) {
  std::map<SceneTag, int> out;
  for (const auto& e : m.entries) ++out[e.scene];
  return out;
}

// Two-party largest remainder: the train side rounds its exact quota half up.
std::size_t quota_oracle(std::size_t n, int rt, int rs) {
  const std::size_t total = static_cast<std::size_t>(rt + rs);
  return (2 * n * static_cast<std::size_t>(rt) + total) / (2 * total);
}

void touch(const std::filesystem::path& p) {
  std::filesystem::create_directories(p.parent_path());
  std::ofstream(p) << "x";
}

}  // namespace

TEST(SampleFrames, Examples) {
  std::vector<int> frames(100);
  std::iota(frames.begin(), frames.end(), 0);
  EXPECT_EQ(dataset::sample_frames(frames, 20), (std::vector<int>{0, 20, 40, 60, 80}));
  EXPECT_EQ(dataset::sample_frames(frames, 1), frames);
  EXPECT_EQ(dataset::sample_frames(std::vector<int>{0, 1, 2, 3, 4}, 20), (std::vector<int>{0}));
  EXPECT_TRUE(dataset::sample_frames(std::vector<int>{}, 3).empty());
  EXPECT_THROW(dataset::sample_frames(frames, 0), ParameterError);
}

TEST(SampleFrames, SizeIsCeiling) {
  for (int n = 0; n < 60; ++n)
    for (int k = 1; k < 25; ++k) {
      std::vector<int> f(static_cast<std::size_t>(n));
      ASSERT_EQ(dataset::sample_frames(f, k).size(), static_cast<std::size_t>((n + k - 1) / k));
    }
}

TEST(TrainShare, MatchesLargestRemainderOracle) {
  for (std::size_t n = 0; n < 200; ++n)
    for (int rt = 1; rt <= 5; ++rt)
      for (int rs = 1; rs <= 5; ++rs) ASSERT_EQ(dataset::train_share(n, rt, rs), quota_oracle(n, rt, rs));
}

TEST(Split, Examples) {
  const auto s = dataset::split_dataset(make_manifest({{SceneTag::Normal, 9}, {SceneTag::Curve, 3}}), 2, 1, 7);
  EXPECT_EQ(per_scene(s.train), (std::map<SceneTag, int>{{SceneTag::Normal, 6}, {SceneTag::Curve, 2}}));
  EXPECT_EQ(per_scene(s.test), (std::map<SceneTag, int>{{SceneTag::Normal, 3}, {SceneTag::Curve, 1}}));

  const auto even = dataset::split_dataset(make_manifest({{SceneTag::Night, 4}}), 1, 1, 3);
  EXPECT_EQ(even.train.entries.size(), 2u);
  EXPECT_EQ(even.test.entries.size(), 2u);

  const auto single = dataset::split_dataset(make_manifest({{SceneTag::Arrow, 1}}), 2, 1, 99);
  EXPECT_EQ(single.train.entries.size(), 1u);
  EXPECT_TRUE(single.test.entries.empty());

  const auto empty = dataset::split_dataset(Manifest{}, 2, 1, 0);
  EXPECT_TRUE(empty.train.entries.empty());
  EXPECT_TRUE(empty.test.entries.empty());
  EXPECT_THROW(dataset::split_dataset(Manifest{}, 0, 1, 0), ParameterError);
}

TEST(Split, PartitionDeterminismAndBalance) {
  std::mt19937 rng(71);
  std::uniform_int_distribution<int> count(0, 40);
  for (int trial = 0; trial < 50; ++trial) {
    std::map<SceneTag, int> counts;
    for (auto s : dataset::kAllScenes) counts[s] = count(rng);
    const auto m = make_manifest(counts);
    const int rt = 1 + trial % 3;
    const int rs = 1 + trial % 2;
    const auto seed = static_cast<std::uint64_t>(trial) * 7919u;
    const auto a = dataset::split_dataset(m, rt, rs, seed);
    const auto b = dataset::split_dataset(m, rt, rs, seed);
    ASSERT_EQ(a.train, b.train);
    ASSERT_EQ(a.test, b.test);

    std::set<std::string> seen;
    for (const auto& e : a.train.entries) ASSERT_TRUE(seen.insert(e.path).second);
    for (const auto& e : a.test.entries) ASSERT_TRUE(seen.insert(e.path).second);
    ASSERT_EQ(seen.size(), m.entries.size());

    const auto tr = per_scene(a.train);
    const auto te = per_scene(a.test);
    for (const auto& [scene, n] : counts) {
      const int t = tr.count(scene) ? tr.at(scene) : 0;
      const int s = te.count(scene) ? te.at(scene) : 0;
      ASSERT_EQ(t + s, n);
      const double exact = static_cast<double>(n) * rt / (rt + rs);
      ASSERT_LE(std::abs(t - exact), 1.0);
    }

    const auto other = dataset::split_dataset(m, rt, rs, seed + 1);
    ASSERT_EQ(per_scene(other.train), tr);
  }
}

TEST(Split, SeedsPermuteMembership) {
  const auto m = make_manifest({{SceneTag::Crowd, 60}});
  const auto a = dataset::split_dataset(m, 2, 1, 1);
  const auto b = dataset::split_dataset(m, 2, 1, 2);
  EXPECT_NE(a.train, b.train);
  EXPECT_TRUE(std::is_sorted(a.train.entries.begin(), a.train.entries.end(),
                             [](const Entry& x, const Entry& y) { return x.path < y.path; }));
}

TEST(Manifest, RoundTripAndErrors) {
  const auto m = make_manifest({{SceneTag::Normal, 2}, {SceneTag::Crossroad, 1}});
  EXPECT_EQ(dataset::parse_manifest(dataset::write_manifest(m)), m);
  EXPECT_EQ(dataset::parse_manifest("a.jpg\n").entries[0].scene, SceneTag::Normal);
  EXPECT_THROW(dataset::parse_manifest("a.jpg\tFoggy\n"), ParseError);
  try {
    dataset::parse_manifest("a.jpg\tNight\nb.jpg\nA.jpg\na.jpg\tCurve\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 4u);
  }
}

TEST(BuildManifest, Examples) {
  testsupport::TempDir tmp;
  EXPECT_TRUE(dataset::build_manifest(tmp.path()).entries.empty());

  touch(tmp / "b/2.png");
  touch(tmp / "a.jpg");
  touch(tmp / "b/1.JPEG");
  touch(tmp / "notes.txt");
  const auto m = dataset::build_manifest(tmp.path());
  ASSERT_EQ(m.entries.size(), 3u);
  EXPECT_EQ(m.entries[0].path, "a.jpg");
  EXPECT_EQ(m.entries[1].path, "b/1.JPEG");
  EXPECT_EQ(m.entries[2].path, "b/2.png");
  for (const auto& e : m.entries) EXPECT_EQ(e.scene, SceneTag::Normal);

  const auto map = dataset::parse_scene_map("b/2.png\tNight\na.jpg\tCurve\nb/2.png\tArrow\n");
  EXPECT_EQ(map.overridden, 1u);
  const auto tagged = dataset::build_manifest(tmp.path(), &map);
  EXPECT_EQ(tagged.entries[0].scene, SceneTag::Curve);
  EXPECT_EQ(tagged.entries[1].scene, SceneTag::Normal);
  EXPECT_EQ(tagged.entries[2].scene, SceneTag::Arrow);

  EXPECT_THROW(dataset::build_manifest(tmp / "missing"), IngestionError);
  EXPECT_THROW(dataset::parse_scene_map("no-tab-here\n"), ParseError);
}
