#ifndef PANN_CHANGEDET_HPP
#define PANN_CHANGEDET_HPP

// Distance-based change scores and per-pixel change maps.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "pann/binary_io.hpp"
#include "pann/common.hpp"
#include "pann/pipeline.hpp"
#include "pann/scene.hpp"

namespace pann {

enum class DistanceMetric : std::uint8_t { euclidean, cosine, correlation };

inline std::string_view to_string(DistanceMetric m) {
  switch (m) {
    case DistanceMetric::euclidean: return "euclidean";
    case DistanceMetric::cosine: return "cosine";
    case DistanceMetric::correlation: return "correlation";
  }
  return "?";
}

inline DistanceMetric parse_metric(std::string_view s) {
  if (s == "euclidean") return DistanceMetric::euclidean;
  if (s == "cosine") return DistanceMetric::cosine;
  if (s == "correlation") return DistanceMetric::correlation;
  throw ConfigError("unknown metric '" + std::string(s) + "'");
}

namespace detail {

inline void require_same_length(std::size_t a, std::size_t b) {
  if (a != b) throw ConfigError("distance: vectors differ in length");
}

}  // namespace detail

inline double euclidean_dist(std::span<const double> u, std::span<const double> v) {
  detail::require_same_length(u.size(), v.size());
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) s += (u[i] - v[i]) * (u[i] - v[i]);
  return std::sqrt(s);
}

/// 1 - cos(angle); 1 when either vector has zero norm.
inline double cosine_dist(std::span<const double> u, std::span<const double> v) {
  detail::require_same_length(u.size(), v.size());
  double dot = 0.0, uu = 0.0, vv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dot += u[i] * v[i];
    uu += u[i] * u[i];
    vv += v[i] * v[i];
  }
  if (uu == 0.0 || vv == 0.0) return 1.0;
  const double cos = dot / (std::sqrt(uu) * std::sqrt(vv));
  return std::clamp(1.0 - cos, 0.0, 2.0);
}

/// Cosine distance of the mean-centred vectors.
inline double correlation_dist(std::span<const double> u, std::span<const double> v) {
  detail::require_same_length(u.size(), v.size());
  if (u.size() < 2) throw ConfigError("correlation distance needs at least two entries");
  const double n = static_cast<double>(u.size());
  const double mu = std::accumulate(u.begin(), u.end(), 0.0) / n;
  const double mv = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double dot = 0.0, uu = 0.0, vv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double a = u[i] - mu;
    const double b = v[i] - mv;
    dot += a * b;
    uu += a * a;
    vv += b * b;
  }
  if (uu == 0.0 || vv == 0.0) return 1.0;
  const double cos = dot / (std::sqrt(uu) * std::sqrt(vv));
  return std::clamp(1.0 - cos, 0.0, 2.0);
}

inline double distance(DistanceMetric m, std::span<const double> u, std::span<const double> v) {
  switch (m) {
    case DistanceMetric::euclidean: return euclidean_dist(u, v);
    case DistanceMetric::cosine: return cosine_dist(u, v);
    case DistanceMetric::correlation: return correlation_dist(u, v);
  }
  return 0.0;
}

/// Minimum distance between the last frame and each earlier frame.
inline double change_score(std::span<const std::vector<double>> frames, DistanceMetric m) {
  if (frames.size() < 2) throw ConfigError("change_score: need at least two frames");
  const auto& last = frames.back();
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < frames.size(); ++i) best = std::min(best, distance(m, frames[i], last));
  return best;
}

inline double change_score(const FeatureSequence& seq, DistanceMetric m) { return change_score(seq.features, m); }

/// Pixel-space vectors used by the baseline: per frame, either the pooled
/// selected-band planes or the raw full-resolution tiles, concatenated.
inline std::vector<std::vector<double>> pixel_vectors(const TileSequence& ts, bool raw_tiles = false) {
  const std::size_t T = ts.pooled.size() / (ts.n_bands() * pooled_side * pooled_side);
  std::vector<std::vector<double>> out(T);
  for (std::size_t t = 0; t < T; ++t) {
    if (raw_tiles) {
      for (std::size_t n = 0; n < ts.n_bands(); ++n) {
        const auto plane = ts.tile(t, n);
        out[t].insert(out[t].end(), plane.begin(), plane.end());
      }
    } else {
      const auto plane = ts.pooled_frame(t);
      out[t].assign(plane.begin(), plane.end());
    }
  }
  return out;
}

inline double baseline_score(const TileSequence& ts, DistanceMetric m, bool raw_tiles = false) {
  return change_score(pixel_vectors(ts, raw_tiles), m);
}

struct ChangeMap {
  std::string event;
  DistanceMetric metric = DistanceMetric::correlation;
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> scores;       // row-major
  std::vector<std::uint8_t> valid;  // 1 = usable pixel
};

/// Broadcasts one score per full tile to its pixel block. Cloud pixels and
/// pixels outside every full tile are invalid.
inline ChangeMap assemble_change_map(std::span<const TileLoc> locs, std::span<const double> scores,
                                     std::size_t height, std::size_t width, std::size_t side,
                                     std::span<const std::uint8_t> mask) {
  if (locs.size() != scores.size()) throw ConfigError("assemble_change_map: one score per tile required");
  if (!mask.empty() && mask.size() != height * width) throw ConfigError("assemble_change_map: mask dims mismatch");
  if (side == 0 || locs.size() != (height / side) * (width / side))
    throw ConfigError("assemble_change_map: tile count does not match scene dims");
  ChangeMap map;
  map.height = height;
  map.width = width;
  map.scores.assign(height * width, 0.0);
  map.valid.assign(height * width, 0);
  for (std::size_t k = 0; k < locs.size(); ++k) {
    const auto [a, b] = locs[k];
    if ((a + 1) * side > height || (b + 1) * side > width)
      throw ConfigError("assemble_change_map: tile outside the scene");
    for (std::size_t r = a * side; r < (a + 1) * side; ++r) {
      for (std::size_t c = b * side; c < (b + 1) * side; ++c) {
        const std::size_t p = r * width + c;
        map.scores[p] = scores[k];
        map.valid[p] = mask.empty() || mask[p] != MaskLabel::cloud;
      }
    }
  }
  return map;
}

// Raw map: "CMAP", u32 height, u32 width, f64 scores row-major (LE).
inline void write_cmap(const std::filesystem::path& path, const ChangeMap& map) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("cannot write " + path.string());
  os.write("CMAP", 4);
  io::put_le<std::uint32_t>(os, static_cast<std::uint32_t>(map.height));
  io::put_le<std::uint32_t>(os, static_cast<std::uint32_t>(map.width));
  for (double s : map.scores) io::put_le<double>(os, s);
}

inline ChangeMap read_cmap(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open " + path.string());
  io::expect_magic(is, "CMAP", path.string());
  ChangeMap map;
  map.height = io::get_le<std::uint32_t>(is);
  map.width = io::get_le<std::uint32_t>(is);
  map.scores.resize(map.height * map.width);
  for (auto& s : map.scores) s = io::get_le<double>(is);
  return map;
}

/// 16-bit binary PGM, scores min-max scaled over valid pixels; invalid
/// pixels are written as 0.
inline void write_pgm(const std::filesystem::path& path, const ChangeMap& map) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (std::size_t p = 0; p < map.scores.size(); ++p) {
    if (!map.valid[p]) continue;
    lo = std::min(lo, map.scores[p]);
    hi = std::max(hi, map.scores[p]);
  }
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("cannot write " + path.string());
  os << "P5\n" << map.width << ' ' << map.height << "\n65535\n";
  for (std::size_t p = 0; p < map.scores.size(); ++p) {
    std::uint16_t v = 0;
    if (map.valid[p] && hi > lo) v = static_cast<std::uint16_t>(std::lround((map.scores[p] - lo) / (hi - lo) * 65535.0));
    const char bytes[2] = {static_cast<char>(v >> 8), static_cast<char>(v & 0xff)};
    os.write(bytes, 2);
  }
}

/// Binary PBM of the invalid mask (1 = invalid pixel).
inline void write_invalid_pbm(const std::filesystem::path& path, const ChangeMap& map) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("cannot write " + path.string());
  os << "P4\n" << map.width << ' ' << map.height << '\n';
  const std::size_t row_bytes = (map.width + 7) / 8;
  std::vector<char> row(row_bytes);
  for (std::size_t r = 0; r < map.height; ++r) {
    std::fill(row.begin(), row.end(), 0);
    for (std::size_t c = 0; c < map.width; ++c) {
      if (!map.valid[r * map.width + c]) row[c / 8] = static_cast<char>(row[c / 8] | (0x80 >> (c % 8)));
    }
    os.write(row.data(), static_cast<std::streamsize>(row_bytes));
  }
}

}  // namespace pann

#endif  // PANN_CHANGEDET_HPP
