#ifndef PANN_PIPELINE_HPP
#define PANN_PIPELINE_HPP

// Scene -> normalised frames -> tile sequences -> pooled electrode inputs ->
// per-band network readouts concatenated into feature vectors.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <memory>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "pann/dynamics.hpp"
#include "pann/netgen.hpp"
#include "pann/parallel.hpp"
#include "pann/scene.hpp"

namespace pann {

inline constexpr float missing_fill = 0.005f;
inline constexpr std::size_t pooled_side = 16;

/// Log-scale each band into [-1, 1] using fixed log-space bounds. Missing
/// pixels and non-positive reflectances become the 0.005 fill.
inline Raster normalize(const Raster& raw, std::span<const BandStats> stats, std::span<const std::uint8_t> missing) {
  if (stats.size() != raw.bands) throw ConfigError("normalize: one (min, max) pair per band required");
  if (!missing.empty() && missing.size() != raw.plane()) throw ConfigError("normalize: missing mask dims mismatch");
  Raster out(raw.bands, raw.height, raw.width);
  const std::size_t plane = raw.plane();
  for (std::size_t b = 0; b < raw.bands; ++b) {
    const double lo = stats[b].min;
    const double span = stats[b].max - stats[b].min;
    for (std::size_t p = 0; p < plane; ++p) {
      const float x = raw.data[b * plane + p];
      if ((!missing.empty() && missing[p]) || !(x > 0.0f)) {
        out.data[b * plane + p] = missing_fill;
        continue;
      }
      const double scaled = 2.0 * (std::log(static_cast<double>(x)) - lo) / span - 1.0;
      out.data[b * plane + p] = static_cast<float>(std::clamp(scaled, -1.0, 1.0));
    }
  }
  return out;
}

/// Tile grid coordinates: a = tile row, b = tile column.
struct TileLoc {
  std::size_t a = 0;
  std::size_t b = 0;
  friend bool operator==(const TileLoc&, const TileLoc&) = default;
};

/// Full tiles only, column by column from the top-left corner.
inline std::vector<TileLoc> tile_locations(std::size_t height, std::size_t width, std::size_t side) {
  if (side == 0 || height < side || width < side) throw ConfigError("tile: scene smaller than one tile");
  std::vector<TileLoc> locs;
  const std::size_t rows = height / side, cols = width / side;
  locs.reserve(rows * cols);
  for (std::size_t b = 0; b < cols; ++b) {
    for (std::size_t a = 0; a < rows; ++a) locs.push_back({a, b});
  }
  return locs;
}

/// 2x2 / stride-2 max pooling of one square band plane.
inline std::vector<float> maxpool(std::span<const float> plane, std::size_t side) {
  if (side % 2 != 0) throw ConfigError("maxpool: odd tile side");
  if (plane.size() != side * side) throw ConfigError("maxpool: plane size does not match side");
  const std::size_t half = side / 2;
  std::vector<float> out(half * half);
  for (std::size_t r = 0; r < half; ++r) {
    for (std::size_t c = 0; c < half; ++c) {
      const float* top = plane.data() + (2 * r) * side + 2 * c;
      const float* bottom = top + side;
      out[r * half + c] = std::max({top[0], top[1], bottom[0], bottom[1]});
    }
  }
  return out;
}

/// T x N x s x s tile stack at one grid location plus its 16 x 16 pooled
/// form. `bands` are the 1-based network indices the N planes came from.
struct TileSequence {
  TileLoc loc;
  std::size_t side = 0;
  std::vector<std::size_t> bands;
  std::vector<float> tiles;   // [t][n][row][col]
  std::vector<float> pooled;  // [t][n][16][16]

  std::size_t n_bands() const { return bands.size(); }
  std::span<const float> tile(std::size_t t, std::size_t n) const {
    return {tiles.data() + (t * bands.size() + n) * side * side, side * side};
  }
  std::span<const float> pooled_plane(std::size_t t, std::size_t n) const {
    return {pooled.data() + (t * bands.size() + n) * pooled_side * pooled_side, pooled_side * pooled_side};
  }
  /// All pooled planes of frame t, band-ascending.
  std::span<const float> pooled_frame(std::size_t t) const {
    const std::size_t k = bands.size() * pooled_side * pooled_side;
    return {pooled.data() + t * k, k};
  }
};

/// Cuts normalised frames into tile sequences for the given 1-based band
/// indices (all bands when empty). Tiles wider than 16 are max-pooled down
/// to 16 x 16; 16 x 16 tiles pass through unchanged.
inline std::vector<TileSequence> tile(std::span<const Raster> frames, std::size_t side,
                                      std::vector<std::size_t> bands = {}) {
  if (frames.empty()) throw ConfigError("tile: no frames");
  const Raster& first = frames.front();
  if (bands.empty()) {
    for (std::size_t m = 1; m <= first.bands; ++m) bands.push_back(m);
  }
  std::sort(bands.begin(), bands.end());
  for (auto m : bands) {
    if (m == 0 || m > first.bands) throw ConfigError("tile: band index " + std::to_string(m) + " missing from scene");
  }
  if (side < pooled_side || (side != pooled_side && side != 2 * pooled_side))
    throw ConfigError("tile: side must be 16 or 32");

  const auto locs = tile_locations(first.height, first.width, side);
  std::vector<TileSequence> out;
  out.reserve(locs.size());
  const std::size_t T = frames.size();
  const std::size_t N = bands.size();
  for (const auto& loc : locs) {
    TileSequence ts;
    ts.loc = loc;
    ts.side = side;
    ts.bands = bands;
    ts.tiles.resize(T * N * side * side);
    ts.pooled.resize(T * N * pooled_side * pooled_side);
    for (std::size_t t = 0; t < T; ++t) {
      for (std::size_t n = 0; n < N; ++n) {
        float* dst = ts.tiles.data() + (t * N + n) * side * side;
        for (std::size_t r = 0; r < side; ++r) {
          for (std::size_t c = 0; c < side; ++c) {
            dst[r * side + c] = frames[t].at(bands[n] - 1, loc.a * side + r, loc.b * side + c);
          }
        }
        float* pdst = ts.pooled.data() + (t * N + n) * pooled_side * pooled_side;
        if (side == pooled_side) {
          std::copy(dst, dst + side * side, pdst);
        } else {
          const auto pooled = maxpool({dst, side * side}, side);
          std::copy(pooled.begin(), pooled.end(), pdst);
        }
      }
    }
    out.push_back(std::move(ts));
  }
  return out;
}

struct FeatureSequence {
  TileLoc loc;
  std::vector<std::size_t> band_order;        // ascending network indices
  std::vector<std::vector<double>> features;  // one vector per frame
};

enum class ResetMode : std::uint8_t { persistent, per_tile };

/// Owns one memristive network per spectral band (identical topology,
/// independent state). Under the persistent mode states carry over between
/// tiles and between calls, i.e. across events.
class FeatureExtractor {
 public:
  FeatureExtractor(const NetworkGraph& graph, DynamicsConfig config, std::size_t threads = 1)
      : graph_(&graph), config_(config), threads_(std::max<std::size_t>(1, threads)) {
    config_.validate();
    if (graph.input_index.size() != pooled_side * pooled_side)
      throw ConfigError("feature extraction requires a 16 x 16 electrode grid");
  }

  std::size_t readout_size() const { return graph_->readout_ids.size(); }

  /// Network for a 1-based band index; created with zero state on first use.
  MemristiveNetwork& network(std::size_t band) {
    auto& slot = networks_[band];
    if (!slot) slot = std::make_unique<MemristiveNetwork>(*graph_, config_);
    return *slot;
  }

  void reset_all() {
    for (auto& [band, net] : networks_) net->reset();
  }

  std::vector<FeatureSequence> extract(std::span<const TileSequence> tiles, ResetMode mode) {
    std::vector<FeatureSequence> out(tiles.size());
    if (tiles.empty()) return out;
    const auto& bands = tiles.front().bands;
    const std::size_t n_bands = bands.size();
    const std::size_t T = tiles.front().pooled.size() / (n_bands * pooled_side * pooled_side);
    const std::size_t R = readout_size();
    for (std::size_t i = 0; i < tiles.size(); ++i) {
      if (tiles[i].bands != bands) throw ConfigError("extract: tiles disagree on band selection");
      out[i].loc = tiles[i].loc;
      out[i].band_order = bands;
      out[i].features.assign(T, std::vector<double>(R * n_bands, 0.0));
    }

    auto run_tile = [&](MemristiveNetwork& net, std::size_t slot, std::size_t i, InputFrame& frame,
                        std::vector<double>& readout) {
      for (std::size_t t = 0; t < T; ++t) {
        const auto plane = tiles[i].pooled_plane(t, slot);
        std::copy(plane.begin(), plane.end(), frame.voltages.begin());
        net.step(frame);
        net.readout_into(readout);
        std::copy(readout.begin(), readout.end(), out[i].features[t].begin() + slot * R);
      }
    };

    if (mode == ResetMode::persistent) {
      // tiles stay sequential inside each band-network; bands run concurrently
      for (auto m : bands) network(m);
      parallel_for(n_bands, threads_, [&](std::size_t, std::size_t slot) {
        MemristiveNetwork& net = network_at(bands[slot]);
        InputFrame frame;
        frame.voltages.resize(pooled_side * pooled_side);
        std::vector<double> readout;
        for (std::size_t i = 0; i < tiles.size(); ++i) run_tile(net, slot, i, frame, readout);
      });
      return out;
    }

    // per_tile: every tile starts from zero state, so tiles are independent
    const std::size_t workers = std::max<std::size_t>(1, std::min(threads_, tiles.size()));
    std::vector<std::unique_ptr<MemristiveNetwork>> scratch(workers);
    parallel_for(tiles.size(), workers, [&](std::size_t w, std::size_t i) {
      if (!scratch[w]) scratch[w] = std::make_unique<MemristiveNetwork>(*graph_, config_);
      MemristiveNetwork& net = *scratch[w];
      InputFrame frame;
      frame.voltages.resize(pooled_side * pooled_side);
      std::vector<double> readout;
      for (std::size_t slot = 0; slot < n_bands; ++slot) {
        net.reset();
        run_tile(net, slot, i, frame, readout);
      }
    });
    return out;
  }

 private:
  MemristiveNetwork& network_at(std::size_t band) { return *networks_.at(band); }

  const NetworkGraph* graph_;
  DynamicsConfig config_;
  std::size_t threads_;
  std::map<std::size_t, std::unique_ptr<MemristiveNetwork>> networks_;
};

/// Writes `event,tile_a,tile_b,frame,f_0..f_{K-1}` rows (frames 1-based).
inline void write_features_csv(std::ostream& os, std::string_view event, std::span<const FeatureSequence> seqs,
                               bool header = true) {
  const std::size_t k = seqs.empty() || seqs.front().features.empty() ? 0 : seqs.front().features.front().size();
  if (header) {
    os << "event,tile_a,tile_b,frame";
    for (std::size_t i = 0; i < k; ++i) os << ",f_" << i;
    os << '\n';
  }
  char buf[32];
  for (const auto& s : seqs) {
    for (std::size_t t = 0; t < s.features.size(); ++t) {
      os << event << ',' << s.loc.a << ',' << s.loc.b << ',' << (t + 1);
      for (double v : s.features[t]) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        os << ',' << buf;
      }
      os << '\n';
    }
  }
}

}  // namespace pann

#endif  // PANN_PIPELINE_HPP
