#ifndef PANN_SCENEGEN_HPP
#define PANN_SCENEGEN_HPP

// Deterministic synthetic events with labelled change, cloud and missing
// regions.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_real_distribution.hpp>

#include "pann/common.hpp"
#include "pann/scene.hpp"

namespace pann {

struct Rect {
  std::size_t row = 0;
  std::size_t col = 0;
  std::size_t height = 0;
  std::size_t width = 0;

  bool contains(std::size_t r, std::size_t c) const {
    return r >= row && r < row + height && c >= col && c < col + width;
  }
};

struct ChangeRect {
  Rect rect;
  std::vector<double> delta;  // additive reflectance change per band, last frame only
};

struct SynthSpec {
  std::string event = "synthetic";
  std::optional<DisasterClass> event_class;
  Sensor sensor = Sensor::sentinel2;
  std::size_t height = 256;
  std::size_t width = 256;
  std::vector<double> base_reflectance;  // per band; empty -> vegetated defaults
  double texture_amplitude = 0.2;        // relative, summed over components
  std::size_t texture_components = 4;
  std::vector<ChangeRect> changes;
  std::vector<Rect> clouds;   // frames 4 and 5
  std::vector<Rect> missing;
  double noise_std = 0.002;
  double cloud_reflectance = 0.5;
  std::uint64_t seed = 0;

  void validate() const {
    if (height == 0 || width == 0) throw ConfigError("synthetic scene: empty dims");
    const std::size_t b = sensor_band_count(sensor);
    if (!base_reflectance.empty() && base_reflectance.size() != b)
      throw ConfigError("synthetic scene: base_reflectance needs one value per band");
    auto inside = [&](const Rect& r) { return r.row + r.height <= height && r.col + r.width <= width; };
    for (const auto& c : changes) {
      if (!inside(c.rect)) throw ConfigError("synthetic scene: change rect outside dims");
      if (c.delta.size() != b) throw ConfigError("synthetic scene: change delta needs one value per band");
      for (double d : c.delta) {
        if (!std::isfinite(d)) throw ConfigError("synthetic scene: non-finite delta");
      }
    }
    for (const auto& r : clouds) {
      if (!inside(r)) throw ConfigError("synthetic scene: cloud rect outside dims");
    }
    for (const auto& r : missing) {
      if (!inside(r)) throw ConfigError("synthetic scene: missing rect outside dims");
    }
    if (!(noise_std >= 0.0)) throw ConfigError("synthetic scene: noise_std must be non-negative");
  }
};

/// Vegetated land cover, band-ordered as the sensor's index table.
inline std::vector<double> vegetation_reflectance(Sensor s) {
  if (s == Sensor::sentinel2) return {0.04, 0.07, 0.05, 0.12, 0.25, 0.30, 0.33, 0.35, 0.20, 0.10};
  return {0.04, 0.07, 0.05, 0.33, 0.20, 0.10, 0.01, 0.28, 0.27};
}

/// Log-space bounds wide enough for every synthetic reflectance.
inline std::vector<BandStats> synthetic_norm_stats(Sensor s) {
  return std::vector<BandStats>(sensor_band_count(s), BandStats{std::log(1e-3), std::log(1.0)});
}

inline SceneBundle generate_scene(const SynthSpec& spec) {
  spec.validate();
  const std::size_t B = sensor_band_count(spec.sensor);
  const std::size_t H = spec.height, W = spec.width;
  const auto base = spec.base_reflectance.empty() ? vegetation_reflectance(spec.sensor) : spec.base_reflectance;

  // smooth texture: a few low-frequency plane waves per band
  std::mt19937_64 tex_rng(derive_seed(spec.seed, "scenegen.texture"));
  boost::random::uniform_real_distribution<double> unit(0.0, 1.0);
  Raster background(B, H, W);
  for (std::size_t b = 0; b < B; ++b) {
    struct Wave {
      double kx, ky, phase, amp;
    };
    std::vector<Wave> waves;
    for (std::size_t k = 0; k < spec.texture_components; ++k) {
      const double wavelength = 40.0 + 160.0 * unit(tex_rng);
      const double dir = std::numbers::pi * unit(tex_rng);
      const double kk = 2.0 * std::numbers::pi / wavelength;
      waves.push_back({kk * std::cos(dir), kk * std::sin(dir), 2.0 * std::numbers::pi * unit(tex_rng),
                       spec.texture_amplitude / static_cast<double>(spec.texture_components)});
    }
    for (std::size_t r = 0; r < H; ++r) {
      for (std::size_t c = 0; c < W; ++c) {
        double m = 1.0;
        for (const auto& w : waves) m += w.amp * std::cos(w.kx * c + w.ky * r + w.phase);
        background.at(b, r, c) = static_cast<float>(base[b] * m);
      }
    }
  }

  SceneBundle scene;
  scene.event = spec.event;
  scene.event_class = spec.event_class;
  scene.sensor = spec.sensor;
  scene.band_labels = sensor_band_labels(spec.sensor);
  scene.norm_stats = synthetic_norm_stats(spec.sensor);
  scene.mask.assign(H * W, MaskLabel::unaffected);
  scene.missing.assign(H * W, 0);

  for (const auto& ch : spec.changes) {
    for (std::size_t r = ch.rect.row; r < ch.rect.row + ch.rect.height; ++r) {
      for (std::size_t c = ch.rect.col; c < ch.rect.col + ch.rect.width; ++c) scene.mask[r * W + c] = MaskLabel::affected;
    }
  }
  for (const auto& cl : spec.clouds) {
    for (std::size_t r = cl.row; r < cl.row + cl.height; ++r) {
      for (std::size_t c = cl.col; c < cl.col + cl.width; ++c) scene.mask[r * W + c] = MaskLabel::cloud;
    }
  }
  for (const auto& ms : spec.missing) {
    for (std::size_t r = ms.row; r < ms.row + ms.height; ++r) {
      for (std::size_t c = ms.col; c < ms.col + ms.width; ++c) scene.missing[r * W + c] = 1;
    }
  }

  constexpr float floor_reflectance = 1e-4f;
  for (std::size_t t = 0; t < frames_per_event; ++t) {
    std::mt19937_64 noise_rng(derive_seed(spec.seed, "scenegen.noise", t));
    boost::random::normal_distribution<double> noise(0.0, 1.0);
    Raster frame = background;
    const bool last = t + 1 == frames_per_event;
    const bool cloudy = t + 2 >= frames_per_event;
    for (std::size_t b = 0; b < B; ++b) {
      for (std::size_t r = 0; r < H; ++r) {
        for (std::size_t c = 0; c < W; ++c) {
          double v = frame.at(b, r, c);
          if (last) {
            for (const auto& ch : spec.changes) {
              if (ch.rect.contains(r, c)) v += ch.delta[b];
            }
          }
          if (cloudy) {
            for (const auto& cl : spec.clouds) {
              if (cl.contains(r, c)) v = spec.cloud_reflectance;
            }
          }
          if (spec.noise_std > 0.0) v += spec.noise_std * noise(noise_rng);
          float out = std::max(static_cast<float>(v), floor_reflectance);
          if (scene.missing[r * W + c]) out = 0.0f;
          frame.at(b, r, c) = out;
        }
      }
    }
    scene.frames.push_back(std::move(frame));
  }
  return scene;
}

// Presets used by the examples and the acceptance suite. Change rects are
// tile-aligned so that labels coincide with tile boundaries.

/// Burn scar: NIR drops, SWIR rises.
inline SynthSpec fire_like_spec(std::size_t height, std::size_t width, std::uint64_t seed) {
  SynthSpec s;
  s.event = "synthetic-fire";
  s.event_class = DisasterClass::fire;
  s.height = height;
  s.width = width;
  s.seed = seed;
  s.changes.push_back({{64, 96, 96, 96}, {0.0, -0.01, 0.02, -0.04, -0.12, -0.15, -0.20, -0.20, 0.10, 0.15}});
  return s;
}

/// Inundation: vegetation replaced by open water.
inline SynthSpec flood_like_spec(std::size_t height, std::size_t width, std::uint64_t seed) {
  SynthSpec s;
  s.event = "synthetic-flood";
  s.event_class = DisasterClass::flood;
  s.height = height;
  s.width = width;
  s.seed = seed;
  const auto veg = vegetation_reflectance(Sensor::sentinel2);
  const std::vector<double> water = {0.06, 0.08, 0.05, 0.04, 0.035, 0.032, 0.03, 0.028, 0.008, 0.005};
  std::vector<double> delta(veg.size());
  for (std::size_t b = 0; b < veg.size(); ++b) delta[b] = water[b] - veg[b];
  s.changes.push_back({{128, 32, 96, 96}, delta});
  s.clouds.push_back({0, 192, 32, 64});
  return s;
}

/// No change at all; a small cloud and a missing strip only.
inline SynthSpec quiet_spec(std::size_t height, std::size_t width, std::uint64_t seed) {
  SynthSpec s;
  s.event = "synthetic-quiet";
  s.event_class = DisasterClass::hurricane;
  s.height = height;
  s.width = width;
  s.seed = seed;
  s.clouds.push_back({32, 32, 32, 32});
  s.missing.push_back({height - 8, 0, 8, width / 4});
  return s;
}

}  // namespace pann

#endif  // PANN_SCENEGEN_HPP
