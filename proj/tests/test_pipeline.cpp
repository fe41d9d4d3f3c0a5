#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "pann/pipeline.hpp"

using namespace pann;

namespace {

Raster random_raster(std::size_t bands, std::size_t h, std::size_t w, std::uint64_t seed, float lo = -1.f,
                     float hi = 1.f) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(lo, hi);
  Raster r(bands, h, w);
  for (auto& x : r.data) x = u(rng);
  return r;
}

std::vector<Raster> random_frames(std::size_t bands, std::size_t h, std::size_t w, std::uint64_t seed) {
  std::vector<Raster> frames;
  for (std::size_t t = 0; t < 5; ++t) frames.push_back(random_raster(bands, h, w, seed * 10 + t));
  return frames;
}

NetworkGraph small_graph(std::uint64_t seed = 1) {
  NetgenConfig c;
  c.seed = seed;
  c.n_wires = 200;
  return make_network(c, 40);
}

}  // namespace

TEST(Normalize, EndpointsFillAndClip) {
  Raster raw(1, 1, 6);
  raw.data = {std::exp(-4.0f), std::exp(0.0f), std::exp(-2.0f), 0.0f, std::exp(3.0f), 0.5f};
  const std::vector<BandStats> stats = {{-4.0, 0.0}};
  const std::vector<std::uint8_t> missing = {0, 0, 0, 0, 0, 1};
  const auto n = normalize(raw, stats, missing);
  EXPECT_NEAR(n.data[0], -1.0f, 1e-6);
  EXPECT_NEAR(n.data[1], 1.0f, 1e-6);
  EXPECT_NEAR(n.data[2], 0.0f, 1e-6);
  EXPECT_EQ(n.data[3], 0.005f);  // non-positive reflectance
  EXPECT_EQ(n.data[4], 1.0f);    // clipped
  EXPECT_EQ(n.data[5], 0.005f);  // flagged missing
}

TEST(Normalize, MonotoneAndBounded) {
  const auto raw = random_raster(3, 8, 8, 4, 1e-4f, 2.0f);
  const std::vector<BandStats> stats(3, BandStats{std::log(1e-3), 0.0});
  const auto n = normalize(raw, stats, {});
  for (std::size_t i = 0; i < raw.data.size(); ++i) {
    EXPECT_GE(n.data[i], -1.0f);
    EXPECT_LE(n.data[i], 1.0f);
    for (std::size_t j = 0; j < raw.data.size(); j += 17) {
      if (raw.data[i] < raw.data[j]) EXPECT_LE(n.data[i], n.data[j]);
    }
  }
}

TEST(Normalize, RejectsMismatchedStats) {
  const auto raw = random_raster(2, 2, 2, 1, 0.1f, 1.f);
  EXPECT_THROW(normalize(raw, std::vector<BandStats>(1), {}), ConfigError);
  EXPECT_THROW(normalize(raw, std::vector<BandStats>(2), std::vector<std::uint8_t>(3)), ConfigError);
}

TEST(Tiling, ColumnMajorOrder) {
  const auto locs = tile_locations(64, 64, 32);
  ASSERT_EQ(locs.size(), 4u);
  EXPECT_EQ(locs[0], (TileLoc{0, 0}));
  EXPECT_EQ(locs[1], (TileLoc{1, 0}));
  EXPECT_EQ(locs[2], (TileLoc{0, 1}));
  EXPECT_EQ(locs[3], (TileLoc{1, 1}));
}

TEST(Tiling, EdgePixelsDropped) {
  EXPECT_EQ(tile_locations(33, 33, 32).size(), 1u);
  EXPECT_EQ(tile_locations(574, 509, 32).size(), 17u * 15u);
  EXPECT_THROW(tile_locations(31, 64, 32), ConfigError);
}

TEST(Tiling, SingleTileReproducesScene) {
  const auto frames = random_frames(2, 32, 32, 3);
  const auto ts = tile(frames, 32);
  ASSERT_EQ(ts.size(), 1u);
  for (std::size_t t = 0; t < 5; ++t) {
    for (std::size_t n = 0; n < 2; ++n) {
      const auto plane = ts[0].tile(t, n);
      for (std::size_t p = 0; p < 32 * 32; ++p) EXPECT_EQ(plane[p], frames[t].data[n * 1024 + p]);
    }
  }
}

TEST(Tiling, SelectedBandsAndPixelPlacement) {
  const auto frames = random_frames(10, 64, 96, 5);
  const auto ts = tile(frames, 32, {9, 2});
  ASSERT_EQ(ts.size(), 6u);
  EXPECT_EQ(ts[0].bands, (std::vector<std::size_t>{2, 9}));
  const auto& s = ts[3];  // column 1, row 1
  EXPECT_EQ(s.loc, (TileLoc{1, 1}));
  EXPECT_EQ(s.tile(4, 1)[5 * 32 + 7], frames[4].at(8, 32 + 5, 32 + 7));
  EXPECT_THROW(tile(frames, 32, {11}), ConfigError);
  EXPECT_THROW(tile(frames, 24), ConfigError);
}

TEST(Tiling, SixteenPixelTilesBypassPooling) {
  const auto frames = random_frames(9, 32, 32, 6);
  const auto ts = tile(frames, 16);
  ASSERT_EQ(ts.size(), 4u);
  for (const auto& s : ts) EXPECT_EQ(s.tiles, s.pooled);
}

TEST(MaxPool, HandCases) {
  EXPECT_EQ(maxpool(std::vector<float>{1, 2, 3, 4}, 2), std::vector<float>{4});
  std::vector<float> constant(32 * 32, 0.25f);
  EXPECT_EQ(maxpool(constant, 32), std::vector<float>(256, 0.25f));
  EXPECT_THROW(maxpool(std::vector<float>(9, 0.f), 3), ConfigError);
}

TEST(MaxPool, RampPicksBottomRightOfEachBlock) {
  std::vector<float> ramp(32 * 32);
  for (std::size_t i = 0; i < ramp.size(); ++i) ramp[i] = static_cast<float>(i);
  const auto out = maxpool(ramp, 32);
  for (std::size_t r = 0; r < 16; ++r) {
    for (std::size_t c = 0; c < 16; ++c) EXPECT_EQ(out[r * 16 + c], static_cast<float>((2 * r + 1) * 32 + 2 * c + 1));
  }
}

TEST(MaxPool, MatchesExhaustiveScan) {
  std::mt19937_64 rng(8);
  std::normal_distribution<float> n;
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<float> plane(32 * 32);
    for (auto& x : plane) x = n(rng);
    EXPECT_EQ(maxpool(plane, 32), oracle::block_max(plane, 32));
  }
}

TEST(Pipeline, FeatureLengthAndLayout) {
  const auto g = small_graph();
  FeatureExtractor ex(g, {}, 2);
  const auto frames = random_frames(10, 32, 64, 9);
  const auto ts = tile(frames, 32, {1, 2, 3, 9});
  const auto fs = ex.extract(ts, ResetMode::persistent);
  ASSERT_EQ(fs.size(), 2u);
  for (const auto& f : fs) {
    ASSERT_EQ(f.features.size(), 5u);
    for (const auto& v : f.features) EXPECT_EQ(v.size(), 40u * 4u);
  }
  EXPECT_EQ(fs[1].loc, (TileLoc{0, 1}));
}

TEST(Pipeline, DefaultReadoutGivesFourHundredPerBand) {
  NetgenConfig c;
  c.seed = 2;
  const auto g = make_network(c);
  FeatureExtractor ex(g, {}, 1);
  std::vector<Raster> frames;
  for (int t = 0; t < 2; ++t) frames.push_back(random_raster(2, 32, 32, static_cast<std::uint64_t>(t)));
  const auto fs = ex.extract(tile(frames, 32), ResetMode::per_tile);
  EXPECT_EQ(fs[0].features[0].size(), 800u);
}

TEST(Pipeline, ZeroTilesGiveZeroFeatures) {
  const auto g = small_graph();
  FeatureExtractor ex(g, {}, 1);
  std::vector<Raster> frames(5, Raster(2, 32, 32));
  const auto fs = ex.extract(tile(frames, 32), ResetMode::persistent);
  for (const auto& v : fs[0].features) {
    for (double x : v) EXPECT_EQ(x, 0.0);
  }
}

TEST(Pipeline, RepeatedRunsAreBitIdentical) {
  const auto g = small_graph(3);
  const auto frames = random_frames(3, 64, 64, 10);
  const auto ts = tile(frames, 32);
  FeatureExtractor a(g, {}, 1), b(g, {}, 4);
  const auto fa = a.extract(ts, ResetMode::persistent);
  const auto fb = b.extract(ts, ResetMode::persistent);
  for (std::size_t i = 0; i < fa.size(); ++i) EXPECT_EQ(fa[i].features, fb[i].features);
}

TEST(Pipeline, PerTileFeaturesIgnoreProcessingOrder) {
  const auto g = small_graph(4);
  const auto frames = random_frames(2, 64, 96, 11);
  auto ts = tile(frames, 32);
  FeatureExtractor ex(g, {}, 3);
  const auto ordered = ex.extract(ts, ResetMode::per_tile);
  std::reverse(ts.begin(), ts.end());
  std::rotate(ts.begin(), ts.begin() + 2, ts.end());
  FeatureExtractor ex2(g, {}, 1);
  const auto shuffled = ex2.extract(ts, ResetMode::per_tile);
  for (const auto& f : shuffled) {
    const auto it = std::find_if(ordered.begin(), ordered.end(), [&](const auto& o) { return o.loc == f.loc; });
    ASSERT_NE(it, ordered.end());
    EXPECT_EQ(it->features, f.features);
  }
}

TEST(Pipeline, PersistentStateCarriesAcrossTiles) {
  const auto g = small_graph(5);
  const auto frames = random_frames(1, 32, 64, 12);
  const auto ts = tile(frames, 32);
  FeatureExtractor persistent(g, {}, 1), fresh(g, {}, 1);
  const auto p = persistent.extract(ts, ResetMode::persistent);
  const auto f = fresh.extract(ts, ResetMode::per_tile);
  EXPECT_EQ(p[0].features, f[0].features);  // first tile sees a zero state either way
  EXPECT_NE(p[1].features, f[1].features);
}

TEST(Pipeline, RejectsGraphWithoutSixteenBySixteenGrid) {
  NetgenConfig c;
  c.electrode_grid = 8;
  c.n_wires = 100;
  const auto g = make_network(c, 10);
  EXPECT_THROW(FeatureExtractor(g, {}, 1), ConfigError);
}

TEST(FeatureCsv, HeaderAndRows) {
  FeatureSequence s{{1, 2}, {1}, {{0.5, 0.25}, {1.0, -2.0}}};
  std::ostringstream os;
  write_features_csv(os, "ev", std::vector<FeatureSequence>{s});
  EXPECT_EQ(os.str(), "event,tile_a,tile_b,frame,f_0,f_1\nev,1,2,1,0.5,0.25\nev,1,2,2,1,-2\n");
}
