#ifndef PANN_NETGEN_HPP
#define PANN_NETGEN_HPP

// Stochastic nanowire layout, junction detection and graph construction.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <tuple>
#include <vector>

#include <boost/random/gamma_distribution.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_01.hpp>
#include <boost/random/uniform_int_distribution.hpp>

#include "pann/common.hpp"

namespace pann {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

/// Geometry of one simulated nanowire network. Lengths are in micrometres.
struct NetgenConfig {
  double plane_side = 158.0;
  std::uint32_t n_wires = 803;
  double wire_len_mean = 30.0;
  double wire_len_std = 6.0;
  double center_beta = 5.0;
  // unset: half the plane side
  std::optional<double> center_scale;
  std::uint32_t electrode_grid = 16;
  double electrode_diameter = 5.0;
  double electrode_margin = 15.0;
  double electrode_pitch = 8.0;
  std::uint64_t seed = 0;

  double scale() const { return center_scale.value_or(plane_side / 2.0); }
  std::uint32_t n_electrodes() const { return electrode_grid * electrode_grid; }

  void validate() const {
    if (!(plane_side > 0.0)) throw ConfigError("netgen: plane_side must be positive");
    if (n_wires == 0) throw ConfigError("netgen: n_wires must be positive");
    if (!(wire_len_mean > 0.0))
      throw ConfigError("netgen: wire_len_mean must be positive (length truncation would not terminate)");
    if (!(wire_len_std >= 0.0)) throw ConfigError("netgen: wire_len_std must be non-negative");
    if (!(center_beta > 0.0)) throw ConfigError("netgen: center_beta must be positive");
    if (!(scale() > 0.0)) throw ConfigError("netgen: center_scale must be positive");
    if (electrode_grid == 0) throw ConfigError("netgen: electrode_grid must be positive");
    if (!(electrode_diameter > 0.0) || !(electrode_pitch > 0.0) || !(electrode_margin >= 0.0))
      throw ConfigError("netgen: electrode geometry must be positive");
    if (electrode_margin + (electrode_grid - 1) * electrode_pitch > plane_side)
      throw ConfigError("netgen: electrode grid does not fit inside the plane");
  }
};

struct Wire {
  Point center;
  double theta = 0.0;  // [0, pi)
  double length = 0.0;

  Point end_a() const {
    return {center.x - 0.5 * length * std::cos(theta), center.y - 0.5 * length * std::sin(theta)};
  }
  Point end_b() const {
    return {center.x + 0.5 * length * std::cos(theta), center.y + 0.5 * length * std::sin(theta)};
  }
};

struct Electrode {
  Point center;
  double radius = 0.0;
};

struct NanowireLayout {
  std::vector<Wire> wires;
  // row-major over the grid: index = row * grid + col, row follows y
  std::vector<Electrode> electrodes;
  std::uint32_t electrode_grid = 0;
  double plane_side = 0.0;
};

enum class NodeKind : std::uint8_t { wire, electrode };
enum class JunctionKind : std::uint8_t { wire_wire, wire_electrode };

/// A contact between two network nodes. Node ids follow the graph
/// convention: wires are [0, n_wires), electrodes follow in grid order.
struct Junction {
  std::uint32_t a = 0;  // a < b
  std::uint32_t b = 0;
  JunctionKind kind = JunctionKind::wire_wire;
  Point at;

  friend bool operator<(const Junction& l, const Junction& r) {
    return std::tie(l.a, l.b, l.at.x, l.at.y) < std::tie(r.a, r.b, r.at.x, r.at.y);
  }
};

struct Edge {
  std::uint32_t u = 0;  // u < v
  std::uint32_t v = 0;
  JunctionKind kind = JunctionKind::wire_wire;
  Point at;
};

/// Immutable network topology shared by every band-network.
struct NetworkGraph {
  NetgenConfig config;
  std::vector<NodeKind> nodes;
  std::vector<Edge> edges;
  std::vector<std::uint32_t> input_index;  // grid position -> node id
  std::vector<std::uint32_t> readout_ids;  // ascending, wire nodes only

  std::size_t node_count() const { return nodes.size(); }
  std::size_t edge_count() const { return edges.size(); }
};

namespace detail {

inline double cross(Point a, Point b) { return a.x * b.y - a.y * b.x; }
inline Point sub(Point a, Point b) { return {a.x - b.x, a.y - b.y}; }

template <class Rng>
double sample_generalized_normal(Rng& rng, double mean, double scale, double beta) {
  boost::random::gamma_distribution<double> gamma(1.0 / beta, 1.0);
  boost::random::uniform_01<double> coin;
  const double magnitude = scale * std::pow(gamma(rng), 1.0 / beta);
  return coin(rng) < 0.5 ? mean - magnitude : mean + magnitude;
}

}  // namespace detail

inline NanowireLayout generate_layout(const NetgenConfig& config) {
  config.validate();
  std::mt19937_64 rng(derive_seed(config.seed, "netgen.layout"));
  boost::random::uniform_01<double> unit;
  boost::random::normal_distribution<double> length_dist(config.wire_len_mean, config.wire_len_std);

  const double side = config.plane_side;
  const double mid = side / 2.0;
  auto coordinate = [&] {
    for (;;) {
      const double c = detail::sample_generalized_normal(rng, mid, config.scale(), config.center_beta);
      if (c >= 0.0 && c <= side) return c;
    }
  };

  NanowireLayout layout;
  layout.plane_side = side;
  layout.electrode_grid = config.electrode_grid;
  layout.wires.reserve(config.n_wires);
  for (std::uint32_t i = 0; i < config.n_wires; ++i) {
    Wire w;
    w.center.x = coordinate();
    w.center.y = coordinate();
    w.theta = std::numbers::pi * unit(rng);
    if (w.theta >= std::numbers::pi) w.theta = 0.0;
    do {
      w.length = length_dist(rng);
    } while (!(w.length > 0.0));
    layout.wires.push_back(w);
  }

  const std::uint32_t grid = config.electrode_grid;
  layout.electrodes.reserve(std::size_t{grid} * grid);
  for (std::uint32_t row = 0; row < grid; ++row) {
    for (std::uint32_t col = 0; col < grid; ++col) {
      layout.electrodes.push_back({{config.electrode_margin + col * config.electrode_pitch,
                                    config.electrode_margin + row * config.electrode_pitch},
                                   config.electrode_diameter / 2.0});
    }
  }
  return layout;
}

/// Intersection of segments [p0,p1] and [q0,q1]. Collinear overlaps report
/// the overlap midpoint.
inline std::optional<Point> segment_intersection(Point p0, Point p1, Point q0, Point q1) {
  using detail::cross;
  using detail::sub;
  const Point d = sub(p1, p0);
  const Point e = sub(q1, q0);
  const Point w = sub(q0, p0);
  const double denom = cross(d, e);
  const double dd = d.x * d.x + d.y * d.y;
  const double ee = e.x * e.x + e.y * e.y;
  constexpr double eps = 1e-12;

  if (std::abs(denom) > eps * std::sqrt(dd * ee)) {
    const double t = cross(w, e) / denom;
    const double u = cross(w, d) / denom;
    if (t < 0.0 || t > 1.0 || u < 0.0 || u > 1.0) return std::nullopt;
    return Point{p0.x + t * d.x, p0.y + t * d.y};
  }
  // parallel: only collinear segments can touch
  if (dd == 0.0 || std::abs(cross(w, d)) > eps * dd * std::sqrt(1.0 + (w.x * w.x + w.y * w.y) / dd))
    return std::nullopt;
  const double s0 = (w.x * d.x + w.y * d.y) / dd;
  const Point w1 = sub(q1, p0);
  const double s1 = (w1.x * d.x + w1.y * d.y) / dd;
  const double lo = std::max(0.0, std::min(s0, s1));
  const double hi = std::min(1.0, std::max(s0, s1));
  if (lo > hi) return std::nullopt;
  const double mid = 0.5 * (lo + hi);
  return Point{p0.x + mid * d.x, p0.y + mid * d.y};
}

/// Point of segment [p0,p1] closest to c.
inline Point closest_point_on_segment(Point p0, Point p1, Point c) {
  const Point d = detail::sub(p1, p0);
  const double dd = d.x * d.x + d.y * d.y;
  if (dd == 0.0) return p0;
  const double t = std::clamp(((c.x - p0.x) * d.x + (c.y - p0.y) * d.y) / dd, 0.0, 1.0);
  return {p0.x + t * d.x, p0.y + t * d.y};
}

/// All wire-wire and wire-electrode contacts, sorted by node-id pair.
inline std::vector<Junction> detect_junctions(const NanowireLayout& layout) {
  const auto n = static_cast<std::uint32_t>(layout.wires.size());
  struct Segment {
    Point a, b;
    double xmin, xmax, ymin, ymax;
  };
  std::vector<Segment> segs;
  segs.reserve(n);
  for (const auto& w : layout.wires) {
    const Point a = w.end_a();
    const Point b = w.end_b();
    segs.push_back({a, b, std::min(a.x, b.x), std::max(a.x, b.x), std::min(a.y, b.y), std::max(a.y, b.y)});
  }

  std::vector<Junction> out;
  for (std::uint32_t i = 0; i < n; ++i) {
    const Segment& s = segs[i];
    for (std::uint32_t j = i + 1; j < n; ++j) {
      const Segment& t = segs[j];
      if (t.xmin > s.xmax || t.xmax < s.xmin || t.ymin > s.ymax || t.ymax < s.ymin) continue;
      if (auto p = segment_intersection(s.a, s.b, t.a, t.b)) {
        out.push_back({i, j, JunctionKind::wire_wire, *p});
      }
    }
    for (std::uint32_t k = 0; k < layout.electrodes.size(); ++k) {
      const Electrode& e = layout.electrodes[k];
      if (e.center.x + e.radius < s.xmin || e.center.x - e.radius > s.xmax ||
          e.center.y + e.radius < s.ymin || e.center.y - e.radius > s.ymax)
        continue;
      const Point p = closest_point_on_segment(s.a, s.b, e.center);
      if (std::hypot(p.x - e.center.x, p.y - e.center.y) <= e.radius) {
        out.push_back({i, n + k, JunctionKind::wire_electrode, p});
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

/// Graph over wires and electrodes. Parallel contacts between the same node
/// pair collapse into one edge; readout nodes are drawn from wire nodes.
inline NetworkGraph build_graph(const NetgenConfig& config, const NanowireLayout& layout,
                                std::span<const Junction> junctions, std::uint64_t seed,
                                std::uint32_t n_readout = 400) {
  const auto n_wires = static_cast<std::uint32_t>(layout.wires.size());
  const auto n_electrodes = static_cast<std::uint32_t>(layout.electrodes.size());
  if (n_readout > n_wires) throw ConfigError("build_graph: n_readout exceeds the number of wire nodes");

  NetworkGraph g;
  g.config = config;
  g.nodes.assign(n_wires, NodeKind::wire);
  g.nodes.resize(std::size_t{n_wires} + n_electrodes, NodeKind::electrode);

  std::vector<Junction> sorted(junctions.begin(), junctions.end());
  std::sort(sorted.begin(), sorted.end());
  for (const auto& j : sorted) {
    if (j.a == j.b) continue;
    if (!g.edges.empty() && g.edges.back().u == j.a && g.edges.back().v == j.b) continue;
    g.edges.push_back({j.a, j.b, j.kind, j.at});
  }

  g.input_index.resize(n_electrodes);
  for (std::uint32_t k = 0; k < n_electrodes; ++k) g.input_index[k] = n_wires + k;

  // partial Fisher-Yates
  std::mt19937_64 rng(derive_seed(seed, "netgen.readout"));
  std::vector<std::uint32_t> pool(n_wires);
  for (std::uint32_t i = 0; i < n_wires; ++i) pool[i] = i;
  for (std::uint32_t i = 0; i < n_readout; ++i) {
    boost::random::uniform_int_distribution<std::uint32_t> pick(i, n_wires - 1);
    std::swap(pool[i], pool[pick(rng)]);
  }
  g.readout_ids.assign(pool.begin(), pool.begin() + n_readout);
  std::sort(g.readout_ids.begin(), g.readout_ids.end());
  return g;
}

/// generate_layout -> detect_junctions -> build_graph with seeds taken
/// from config.seed.
inline NetworkGraph make_network(const NetgenConfig& config, std::uint32_t n_readout = 400) {
  const auto layout = generate_layout(config);
  const auto junctions = detect_junctions(layout);
  return build_graph(config, layout, junctions, config.seed, n_readout);
}

}  // namespace pann

#endif  // PANN_NETGEN_HPP
