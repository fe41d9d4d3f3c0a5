#ifndef PANN_FEATURENG_HPP
#define PANN_FEATURENG_HPP

// Training-free band selection: spectral-index change scores walk a chain
// of binary tests to pick the disaster class, which fixes the band subset.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pann/common.hpp"
#include "pann/scene.hpp"

namespace pann {

struct IndexRule {
  std::string name;
  std::string band_x;
  std::string band_y;
  double binarize_threshold = 0.0;
  double score_threshold = 0.0;
  DisasterClass class_on_true = DisasterClass::fire;

  void validate() const {
    if (band_x == band_y) throw ConfigError("index rule '" + name + "': band_x equals band_y");
    if (!std::isfinite(binarize_threshold) || !std::isfinite(score_threshold))
      throw ConfigError("index rule '" + name + "': thresholds must be finite");
    if (score_threshold < 0.0 || score_threshold > 1.0)
      throw ConfigError("index rule '" + name + "': score_threshold outside [0, 1]");
  }
};

struct FeatureEngSpec {
  Sensor sensor = Sensor::sentinel2;
  std::vector<IndexRule> rules;  // tested in order; first hit wins
  DisasterClass fallback = DisasterClass::hurricane;
  std::map<DisasterClass, std::vector<std::size_t>> band_subsets;  // 1-based indices

  void validate() const {
    const auto labels = sensor_band_labels(sensor);
    for (const auto& r : rules) {
      r.validate();
      for (const auto& b : {r.band_x, r.band_y}) {
        if (std::find(labels.begin(), labels.end(), b) == labels.end())
          throw ConfigError("index rule '" + r.name + "': band " + b + " not on sensor");
      }
    }
    auto check_subset = [&](DisasterClass c) {
      auto it = band_subsets.find(c);
      if (it == band_subsets.end() || it->second.empty())
        throw ConfigError("feature spec: no band subset for class " + std::string(to_string(c)));
      for (auto m : it->second) {
        if (m == 0 || m > labels.size()) throw ConfigError("feature spec: band index outside sensor range");
      }
    };
    for (const auto& r : rules) check_subset(r.class_on_true);
    check_subset(fallback);
  }
};

/// Shipped defaults. The thresholds and subsets are declared choices, not
/// measured constants.
inline FeatureEngSpec default_feature_spec(Sensor sensor) {
  FeatureEngSpec s;
  s.sensor = sensor;
  s.fallback = DisasterClass::hurricane;
  if (sensor == Sensor::sentinel2) {
    s.rules = {
        {"nbr", "B8", "B12", 0.2, 0.05, DisasterClass::fire},
        {"ndwi", "B3", "B8", 0.0, 0.05, DisasterClass::flood},
        {"ndvi", "B8", "B4", 0.3, 0.05, DisasterClass::landslide},
    };
    s.band_subsets = {
        {DisasterClass::fire, {7, 8, 9, 10}},
        {DisasterClass::flood, {2, 3, 7, 9}},
        {DisasterClass::landslide, {1, 2, 3, 7}},
        {DisasterClass::hurricane, {1, 2, 3, 9}},
    };
  } else {
    // LandSat-8 OLI: NIR = B5, SWIR2 = B7, green = B3, red = B4
    s.rules = {
        {"nbr", "B5", "B7", 0.2, 0.05, DisasterClass::fire},
        {"ndwi", "B3", "B5", 0.0, 0.05, DisasterClass::flood},
        {"ndvi", "B5", "B4", 0.3, 0.05, DisasterClass::landslide},
    };
    s.band_subsets = {
        {DisasterClass::fire, {4, 5, 6, 9}},
        {DisasterClass::flood, {2, 3, 4, 6}},
        {DisasterClass::landslide, {1, 2, 3, 4}},
        {DisasterClass::hurricane, {1, 2, 3, 4}},
    };
  }
  return s;
}

inline nlohmann::json to_json(const FeatureEngSpec& s) {
  nlohmann::json j;
  j["sensor"] = to_string(s.sensor);
  j["fallback"] = to_string(s.fallback);
  auto rules = nlohmann::json::array();
  for (const auto& r : s.rules) {
    rules.push_back({{"name", r.name},
                     {"band_x", r.band_x},
                     {"band_y", r.band_y},
                     {"binarize_threshold", r.binarize_threshold},
                     {"score_threshold", r.score_threshold},
                     {"class", to_string(r.class_on_true)}});
  }
  j["rules"] = rules;
  nlohmann::json subsets = nlohmann::json::object();
  for (const auto& [c, bands] : s.band_subsets) subsets[std::string(to_string(c))] = bands;
  j["band_subsets"] = subsets;
  return j;
}

inline FeatureEngSpec feature_spec_from_json(const nlohmann::json& j) {
  try {
    FeatureEngSpec s;
    s.sensor = parse_sensor(j.at("sensor").get<std::string>());
    s.fallback = parse_disaster_class(j.value("fallback", std::string("hurricane")));
    for (const auto& r : j.at("rules")) {
      s.rules.push_back({r.value("name", std::string{}), r.at("band_x").get<std::string>(),
                         r.at("band_y").get<std::string>(), r.at("binarize_threshold").get<double>(),
                         r.at("score_threshold").get<double>(),
                         parse_disaster_class(r.at("class").get<std::string>())});
    }
    for (const auto& [name, bands] : j.at("band_subsets").items()) {
      auto list = bands.get<std::vector<std::size_t>>();
      std::sort(list.begin(), list.end());
      s.band_subsets[parse_disaster_class(name)] = list;
    }
    s.validate();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("feature spec: ") + e.what());
  }
}

inline FeatureEngSpec load_feature_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open feature spec " + path.string());
  try {
    return feature_spec_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("feature spec: ") + e.what());
  }
}

/// Normalised difference (X - Y) / (X + Y) of two band planes; 0 where the
/// denominator vanishes.
inline std::vector<double> index_image(const Raster& frame, std::size_t band_x, std::size_t band_y) {
  if (band_x >= frame.bands || band_y >= frame.bands) throw ConfigError("index_image: band outside frame");
  const std::size_t plane = frame.plane();
  std::vector<double> out(plane);
  const float* x = frame.data.data() + band_x * plane;
  const float* y = frame.data.data() + band_y * plane;
  for (std::size_t p = 0; p < plane; ++p) {
    const double sum = static_cast<double>(x[p]) + y[p];
    out[p] = sum == 0.0 ? 0.0 : (static_cast<double>(x[p]) - y[p]) / sum;
  }
  return out;
}

struct ClassScore {
  double score = 0.0;
  std::size_t counted = 0;
  bool all_excluded = false;
};

/// Fraction of usable pixels whose binarised index differs between the
/// frame before and the frame after the event. `excluded` marks pixels
/// that take no part (cloud or missing).
inline ClassScore class_score(const Raster& before, const Raster& after, std::size_t band_x, std::size_t band_y,
                              double binarize_threshold, std::span<const std::uint8_t> excluded = {}) {
  if (before.bands != after.bands || before.height != after.height || before.width != after.width)
    throw ConfigError("class_score: frames differ in shape");
  const auto ib = index_image(before, band_x, band_y);
  const auto ia = index_image(after, band_x, band_y);
  ClassScore out;
  std::size_t flipped = 0;
  for (std::size_t p = 0; p < ib.size(); ++p) {
    if (!excluded.empty() && excluded[p]) continue;
    ++out.counted;
    flipped += (ib[p] > binarize_threshold) != (ia[p] > binarize_threshold);
  }
  if (out.counted == 0) {
    out.all_excluded = true;
    return out;
  }
  out.score = static_cast<double>(flipped) / static_cast<double>(out.counted);
  return out;
}

/// Pixels excluded from index scoring: cloud in the mask or missing.
inline std::vector<std::uint8_t> excluded_pixels(const SceneBundle& scene) {
  std::vector<std::uint8_t> ex(scene.height() * scene.width(), 0);
  for (std::size_t p = 0; p < ex.size(); ++p) {
    ex[p] = (scene.mask[p] == MaskLabel::cloud) || scene.missing[p];
  }
  return ex;
}

inline ClassScore class_score(const SceneBundle& scene, const IndexRule& rule) {
  return class_score(scene.frames[frames_per_event - 2], scene.frames[frames_per_event - 1],
                     scene.band_position(rule.band_x), scene.band_position(rule.band_y),
                     rule.binarize_threshold, excluded_pixels(scene));
}

struct Classification {
  DisasterClass cls = DisasterClass::hurricane;
  std::vector<double> scores;  // one per rule evaluated, in order
  bool overridden = false;
  bool warning = false;        // some rule saw no usable pixels
};

/// Walks the rule chain; with `override_class` set the tree is bypassed.
inline Classification classify_event(const SceneBundle& scene, const FeatureEngSpec& spec,
                                     std::optional<DisasterClass> override_class = std::nullopt) {
  Classification out;
  if (override_class) {
    out.cls = *override_class;
    out.overridden = true;
    return out;
  }
  if (spec.sensor != scene.sensor) throw ConfigError("classify_event: feature spec targets a different sensor");
  for (const auto& rule : spec.rules) {
    const auto s = class_score(scene, rule);
    out.scores.push_back(s.score);
    out.warning = out.warning || s.all_excluded;
    if (!s.all_excluded && s.score >= rule.score_threshold) {
      out.cls = rule.class_on_true;
      return out;
    }
  }
  out.cls = spec.fallback;
  return out;
}

inline std::vector<std::size_t> select_bands(DisasterClass c, const FeatureEngSpec& spec) {
  auto it = spec.band_subsets.find(c);
  if (it == spec.band_subsets.end())
    throw ConfigError("select_bands: no subset for class " + std::string(to_string(c)));
  auto bands = it->second;
  std::sort(bands.begin(), bands.end());
  return bands;
}

}  // namespace pann

#endif  // PANN_FEATURENG_HPP
