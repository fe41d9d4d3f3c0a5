#include <gtest/gtest.h>

#include "pann/featureng.hpp"
#include "pann/scenegen.hpp"

using namespace pann;

TEST(Scenegen, ShapeAndLabels) {
  const auto scene = generate_scene(flood_like_spec(256, 256, 0));
  EXPECT_NO_THROW(scene.validate());
  EXPECT_EQ(scene.frames.size(), 5u);
  EXPECT_EQ(scene.bands(), 10u);
  EXPECT_EQ(scene.event_class, DisasterClass::flood);
  std::size_t affected = 0, cloud = 0;
  for (auto m : scene.mask) {
    affected += m == MaskLabel::affected;
    cloud += m == MaskLabel::cloud;
  }
  EXPECT_EQ(affected, 96u * 96u);
  EXPECT_EQ(cloud, 32u * 64u);
}

TEST(Scenegen, MaskMatchesChangeRectExactly) {
  const auto spec = fire_like_spec(256, 256, 4);
  const auto scene = generate_scene(spec);
  const Rect& r = spec.changes.front().rect;
  for (std::size_t row = 0; row < 256; ++row) {
    for (std::size_t col = 0; col < 256; ++col) {
      EXPECT_EQ(scene.mask[row * 256 + col] == MaskLabel::affected, r.contains(row, col));
    }
  }
}

TEST(Scenegen, NoiselessFramesRepeatUntilTheEvent) {
  auto spec = fire_like_spec(256, 256, 5);
  spec.noise_std = 0.0;
  const auto scene = generate_scene(spec);
  for (std::size_t t = 1; t < 4; ++t) EXPECT_EQ(scene.frames[t].data, scene.frames[0].data);
  // the last frame differs only inside the change rect
  const auto& before = scene.frames[3];
  const auto& after = scene.frames[4];
  for (std::size_t b = 0; b < scene.bands(); ++b) {
    for (std::size_t p = 0; p < before.plane(); ++p) {
      const bool changed = before.data[b * before.plane() + p] != after.data[b * before.plane() + p];
      if (scene.mask[p] != MaskLabel::affected) EXPECT_FALSE(changed);
    }
  }
}

TEST(Scenegen, CloudsCoverTheLastTwoFrames) {
  auto spec = quiet_spec(128, 128, 6);
  spec.noise_std = 0.0;
  const auto scene = generate_scene(spec);
  const std::size_t p = 40 * 128 + 40;
  EXPECT_NE(scene.frames[2].at(0, 40, 40), 0.5f);
  EXPECT_EQ(scene.frames[3].at(0, 40, 40), 0.5f);
  EXPECT_EQ(scene.frames[4].at(0, 40, 40), 0.5f);
  EXPECT_EQ(scene.mask[p], MaskLabel::cloud);
  EXPECT_EQ(scene.missing[127 * 128 + 3], 1);
  for (std::size_t t = 0; t < 5; ++t) EXPECT_EQ(scene.frames[t].at(2, 127, 3), 0.0f);
}

TEST(Scenegen, DeterministicBySeed) {
  const auto a = generate_scene(fire_like_spec(160, 192, 9));
  const auto b = generate_scene(fire_like_spec(160, 192, 9));
  const auto c = generate_scene(fire_like_spec(160, 192, 10));
  for (std::size_t t = 0; t < 5; ++t) EXPECT_EQ(a.frames[t].data, b.frames[t].data);
  EXPECT_NE(a.frames[0].data, c.frames[0].data);
}

TEST(Scenegen, ReflectancesStayPositive) {
  const auto scene = generate_scene(fire_like_spec(256, 256, 11));
  for (const auto& f : scene.frames) {
    for (float v : f.data) EXPECT_GT(v, 0.0f);
  }
}

TEST(Scenegen, PresetsClassifyAsFiled) {
  const auto spec = default_feature_spec(Sensor::sentinel2);
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    EXPECT_EQ(classify_event(generate_scene(fire_like_spec(256, 256, seed)), spec).cls, DisasterClass::fire);
    EXPECT_EQ(classify_event(generate_scene(flood_like_spec(256, 256, seed)), spec).cls, DisasterClass::flood);
    EXPECT_EQ(classify_event(generate_scene(quiet_spec(256, 256, seed)), spec).cls, DisasterClass::hurricane);
  }
}

TEST(Scenegen, RejectsInvalidSpecs) {
  auto s = fire_like_spec(128, 128, 0);  // change rect reaches column 192
  EXPECT_THROW(generate_scene(s), ConfigError);
  s = fire_like_spec(256, 256, 0);
  s.changes.front().delta.pop_back();
  EXPECT_THROW(generate_scene(s), ConfigError);
  s = quiet_spec(64, 64, 0);
  s.clouds.push_back({60, 60, 8, 8});
  EXPECT_THROW(generate_scene(s), ConfigError);
  s = quiet_spec(64, 64, 0);
  s.noise_std = -1.0;
  EXPECT_THROW(generate_scene(s), ConfigError);
  s = quiet_spec(64, 64, 0);
  s.base_reflectance = {0.1, 0.2};
  EXPECT_THROW(generate_scene(s), ConfigError);
  s = quiet_spec(64, 64, 0);
  s.height = 0;
  EXPECT_THROW(generate_scene(s), ConfigError);
}
