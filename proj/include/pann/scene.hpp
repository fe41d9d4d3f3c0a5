#ifndef PANN_SCENE_HPP
#define PANN_SCENE_HPP

// One natural-disaster event: five co-registered multi-band frames, the
// change/cloud mask and the per-band log-space normalisation bounds.

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "pann/binary_io.hpp"
#include "pann/common.hpp"

namespace pann {

enum class Sensor : std::uint8_t { sentinel2, landsat8 };

enum class DisasterClass : std::uint8_t { fire, flood, hurricane, landslide };

inline constexpr std::array<DisasterClass, 4> all_disaster_classes = {
    DisasterClass::fire, DisasterClass::flood, DisasterClass::hurricane, DisasterClass::landslide};

inline std::string_view to_string(Sensor s) { return s == Sensor::sentinel2 ? "sentinel2" : "landsat8"; }

inline Sensor parse_sensor(std::string_view s) {
  if (s == "sentinel2" || s == "s2") return Sensor::sentinel2;
  if (s == "landsat8" || s == "l8") return Sensor::landsat8;
  throw ConfigError("unknown sensor '" + std::string(s) + "'");
}

inline std::string_view to_string(DisasterClass c) {
  switch (c) {
    case DisasterClass::fire: return "fire";
    case DisasterClass::flood: return "flood";
    case DisasterClass::hurricane: return "hurricane";
    case DisasterClass::landslide: return "landslide";
  }
  return "?";
}

inline DisasterClass parse_disaster_class(std::string_view s) {
  for (auto c : all_disaster_classes) {
    if (to_string(c) == s) return c;
  }
  // plural spellings used by the public dataset folders
  if (s == "fires") return DisasterClass::fire;
  if (s == "floods") return DisasterClass::flood;
  if (s == "hurricanes") return DisasterClass::hurricane;
  if (s == "landslides") return DisasterClass::landslide;
  throw ConfigError("unknown disaster class '" + std::string(s) + "'");
}

/// Band labels in network-index order (index m = position + 1).
inline std::vector<std::string> sensor_band_labels(Sensor s) {
  if (s == Sensor::sentinel2) return {"B2", "B3", "B4", "B5", "B6", "B7", "B8", "B8a", "B11", "B12"};
  return {"B2", "B3", "B4", "B5", "B6", "B7", "B9", "B10", "B11"};
}

inline std::size_t sensor_band_count(Sensor s) { return s == Sensor::sentinel2 ? 10 : 9; }
inline std::size_t sensor_tile_side(Sensor s) { return s == Sensor::sentinel2 ? 32 : 16; }

/// Band-major, row-major float32 image.
struct Raster {
  std::size_t bands = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<float> data;

  Raster() = default;
  Raster(std::size_t b, std::size_t h, std::size_t w, float fill = 0.0f)
      : bands(b), height(h), width(w), data(b * h * w, fill) {}

  float& at(std::size_t b, std::size_t r, std::size_t c) { return data[(b * height + r) * width + c]; }
  float at(std::size_t b, std::size_t r, std::size_t c) const { return data[(b * height + r) * width + c]; }
  std::size_t plane() const { return height * width; }
};

struct BandStats {
  double min = 0.0;  // log space
  double max = 1.0;
};

enum MaskLabel : std::uint8_t { unaffected = 0, affected = 1, cloud = 2 };

inline constexpr std::size_t frames_per_event = 5;

struct SceneBundle {
  std::string event;
  Sensor sensor = Sensor::sentinel2;
  std::optional<DisasterClass> event_class;  // category the event is filed under
  std::vector<Raster> frames;
  std::vector<std::string> band_labels;
  std::vector<BandStats> norm_stats;
  std::vector<std::uint8_t> mask;     // H x W MaskLabel
  std::vector<std::uint8_t> missing;  // H x W, 1 = missing

  std::size_t height() const { return frames.empty() ? 0 : frames.front().height; }
  std::size_t width() const { return frames.empty() ? 0 : frames.front().width; }
  std::size_t bands() const { return frames.empty() ? 0 : frames.front().bands; }

  /// Zero-based band position of a label, or throws.
  std::size_t band_position(std::string_view label) const {
    for (std::size_t i = 0; i < band_labels.size(); ++i) {
      if (band_labels[i] == label) return i;
    }
    throw ConfigError("scene '" + event + "': band " + std::string(label) + " missing");
  }

  void validate() const {
    const std::string who = "scene '" + event + "': ";
    if (frames.size() != frames_per_event) throw FormatError(who + "expected 5 frames");
    const std::size_t b = bands(), h = height(), w = width();
    if (h == 0 || w == 0) throw FormatError(who + "empty frame");
    for (const auto& f : frames) {
      if (f.bands != b || f.height != h || f.width != w || f.data.size() != b * h * w)
        throw FormatError(who + "frames differ in shape");
    }
    if (b != sensor_band_count(sensor)) throw FormatError(who + "band count does not match sensor");
    if (band_labels.size() != b) throw FormatError(who + "band label count mismatch");
    if (norm_stats.size() != b) throw FormatError(who + "norm_stats count mismatch");
    for (const auto& s : norm_stats) {
      if (!(s.min < s.max)) throw FormatError(who + "norm_stats require min < max");
    }
    if (mask.size() != h * w) throw FormatError(who + "mask dims do not match frames");
    for (auto m : mask) {
      if (m > MaskLabel::cloud) throw FormatError(who + "mask label outside {0,1,2}");
    }
    if (missing.size() != h * w) throw FormatError(who + "missing-mask dims do not match frames");
  }
};

// ---------------------------------------------------------------------------
// On-disk bundle: manifest.json + frame_<t>.raw + mask.raw + missing.raw

inline constexpr std::uint16_t sbnd_version = 1;

inline void write_frame(const std::filesystem::path& path, const Raster& r) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("cannot write " + path.string());
  os.write("SBND", 4);
  io::put_le<std::uint16_t>(os, sbnd_version);
  io::put_le<std::uint32_t>(os, static_cast<std::uint32_t>(r.bands));
  io::put_le<std::uint32_t>(os, static_cast<std::uint32_t>(r.height));
  io::put_le<std::uint32_t>(os, static_cast<std::uint32_t>(r.width));
  for (float v : r.data) io::put_le<float>(os, v);
}

inline Raster read_frame(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open " + path.string());
  io::expect_magic(is, "SBND", path.string());
  if (io::get_le<std::uint16_t>(is) != sbnd_version) throw FormatError(path.string() + ": unsupported version");
  const auto b = io::get_le<std::uint32_t>(is);
  const auto h = io::get_le<std::uint32_t>(is);
  const auto w = io::get_le<std::uint32_t>(is);
  Raster r(b, h, w);
  for (auto& v : r.data) v = io::get_le<float>(is);
  return r;
}

namespace detail {

inline void write_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("cannot write " + path.string());
  os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

inline std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path, std::size_t expected) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open " + path.string());
  std::vector<std::uint8_t> out(expected);
  if (!is.read(reinterpret_cast<char*>(out.data()), static_cast<std::streamsize>(expected)))
    throw FormatError(path.string() + ": truncated");
  if (is.peek() != std::char_traits<char>::eof()) throw FormatError(path.string() + ": trailing bytes");
  return out;
}

}  // namespace detail

inline void save_bundle(const SceneBundle& scene, const std::filesystem::path& dir) {
  scene.validate();
  std::filesystem::create_directories(dir);
  nlohmann::json manifest;
  manifest["event"] = scene.event;
  manifest["sensor"] = to_string(scene.sensor);
  if (scene.event_class) manifest["event_class"] = to_string(*scene.event_class);
  manifest["dims"] = {{"bands", scene.bands()}, {"height", scene.height()}, {"width", scene.width()}};
  manifest["T"] = scene.frames.size();
  manifest["band_labels"] = scene.band_labels;
  auto stats = nlohmann::json::array();
  for (const auto& s : scene.norm_stats) stats.push_back({{"min", s.min}, {"max", s.max}});
  manifest["norm_stats"] = stats;
  auto frames = nlohmann::json::array();
  for (std::size_t t = 0; t < scene.frames.size(); ++t) {
    const std::string name = "frame_" + std::to_string(t + 1) + ".raw";
    write_frame(dir / name, scene.frames[t]);
    frames.push_back(name);
  }
  manifest["paths"] = {{"frames", frames}, {"mask", "mask.raw"}, {"missing", "missing.raw"}};
  detail::write_bytes(dir / "mask.raw", scene.mask);
  detail::write_bytes(dir / "missing.raw", scene.missing);
  std::ofstream(dir / "manifest.json") << manifest.dump(2) << '\n';
}

inline SceneBundle load_bundle(const std::filesystem::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw FormatError("bundle " + dir.string() + ": manifest.json missing");
  nlohmann::json m;
  try {
    m = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("bundle " + dir.string() + ": " + e.what());
  }
  try {
    SceneBundle s;
    s.event = m.value("event", dir.filename().string());
    s.sensor = parse_sensor(m.at("sensor").get<std::string>());
    if (m.contains("event_class")) s.event_class = parse_disaster_class(m.at("event_class").get<std::string>());
    s.band_labels = m.at("band_labels").get<std::vector<std::string>>();
    for (const auto& st : m.at("norm_stats")) s.norm_stats.push_back({st.at("min").get<double>(), st.at("max").get<double>()});
    const auto& paths = m.at("paths");
    const auto t = m.at("T").get<std::size_t>();
    const auto frame_paths = paths.at("frames").get<std::vector<std::string>>();
    if (t != frames_per_event || frame_paths.size() != t)
      throw FormatError("bundle " + dir.string() + ": expected 5 frames");
    for (const auto& p : frame_paths) s.frames.push_back(read_frame(dir / p));
    const auto h = m.at("dims").at("height").get<std::size_t>();
    const auto w = m.at("dims").at("width").get<std::size_t>();
    if (s.height() != h || s.width() != w) throw FormatError("bundle " + dir.string() + ": dims disagree with frames");
    s.mask = detail::read_bytes(dir / paths.at("mask").get<std::string>(), h * w);
    s.missing = detail::read_bytes(dir / paths.at("missing").get<std::string>(), h * w);
    s.validate();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("bundle " + dir.string() + ": " + e.what());
  }
}

}  // namespace pann

#endif  // PANN_SCENE_HPP
