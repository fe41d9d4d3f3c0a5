#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include "pann/graph_io.hpp"
#include "pann/netgen.hpp"

using namespace pann;

namespace {

double distance_to_segment(Point p, Point a, Point b) {
  const Point q = closest_point_on_segment(a, b, p);
  return std::hypot(p.x - q.x, p.y - q.y);
}

NanowireLayout hand_layout(std::vector<Wire> wires) {
  NanowireLayout l;
  l.plane_side = 100.0;
  l.electrode_grid = 0;
  l.wires = std::move(wires);
  return l;
}

}  // namespace

TEST(Netgen, DefaultCountsMatchPaperGeometry) {
  NetgenConfig c;
  c.seed = 11;
  const auto layout = generate_layout(c);
  EXPECT_EQ(layout.wires.size(), 803u);
  EXPECT_EQ(layout.electrodes.size(), 256u);
}

TEST(Netgen, ElectrodeGridSpansMarginToLastPitch) {
  NetgenConfig c;
  const auto layout = generate_layout(c);
  // 15 + 15 * 8 = 135 <= 158
  EXPECT_DOUBLE_EQ(layout.electrodes.front().center.x, 15.0);
  EXPECT_DOUBLE_EQ(layout.electrodes.front().center.y, 15.0);
  EXPECT_DOUBLE_EQ(layout.electrodes.back().center.x, 135.0);
  EXPECT_DOUBLE_EQ(layout.electrodes.back().center.y, 135.0);
  EXPECT_DOUBLE_EQ(layout.electrodes[1].center.x, 23.0);
  EXPECT_DOUBLE_EQ(layout.electrodes[16].center.y, 23.0);
  EXPECT_DOUBLE_EQ(layout.electrodes.front().radius, 2.5);
}

TEST(Netgen, LayoutIsDeterministicBySeed) {
  NetgenConfig c;
  c.n_wires = 1;
  c.seed = 42;
  const auto a = generate_layout(c);
  const auto b = generate_layout(c);
  ASSERT_EQ(a.wires.size(), 1u);
  EXPECT_EQ(a.wires[0].center.x, b.wires[0].center.x);
  EXPECT_EQ(a.wires[0].center.y, b.wires[0].center.y);
  EXPECT_EQ(a.wires[0].theta, b.wires[0].theta);
  EXPECT_EQ(a.wires[0].length, b.wires[0].length);
}

TEST(Netgen, LayoutInvariants) {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    NetgenConfig c;
    c.seed = seed;
    for (const auto& w : generate_layout(c).wires) {
      EXPECT_GE(w.center.x, 0.0);
      EXPECT_LE(w.center.x, c.plane_side);
      EXPECT_GE(w.center.y, 0.0);
      EXPECT_LE(w.center.y, c.plane_side);
      EXPECT_GE(w.theta, 0.0);
      EXPECT_LT(w.theta, std::numbers::pi);
      EXPECT_GT(w.length, 0.0);
    }
  }
}

TEST(Netgen, RejectsInvalidConfigs) {
  NetgenConfig c;
  c.wire_len_mean = 0.0;
  EXPECT_THROW(generate_layout(c), ConfigError);
  c = {};
  c.wire_len_mean = -3.0;
  EXPECT_THROW(generate_layout(c), ConfigError);
  c = {};
  c.n_wires = 0;
  EXPECT_THROW(generate_layout(c), ConfigError);
  c = {};
  c.electrode_margin = 40.0;  // 40 + 15 * 8 > 158
  EXPECT_THROW(generate_layout(c), ConfigError);
  c = {};
  c.plane_side = -1.0;
  EXPECT_THROW(generate_layout(c), ConfigError);
}

TEST(Junctions, RightAngleCrossing) {
  const auto layout = hand_layout({{{10, 10}, 0.0, 8.0}, {{10, 10}, std::numbers::pi / 2, 8.0}});
  const auto j = detect_junctions(layout);
  ASSERT_EQ(j.size(), 1u);
  EXPECT_NEAR(j[0].at.x, 10.0, 1e-12);
  EXPECT_NEAR(j[0].at.y, 10.0, 1e-12);
  EXPECT_EQ(j[0].kind, JunctionKind::wire_wire);
}

TEST(Junctions, ParallelWiresDoNotTouch) {
  const auto layout = hand_layout({{{10, 10}, 0.3, 8.0}, {{10, 12}, 0.3, 8.0}});
  EXPECT_TRUE(detect_junctions(layout).empty());
}

TEST(Junctions, CollinearOverlapGivesMidpoint) {
  // [0,10] and [6,16] on the x axis overlap on [6,10]
  const auto layout = hand_layout({{{5, 0}, 0.0, 10.0}, {{11, 0}, 0.0, 10.0}});
  const auto j = detect_junctions(layout);
  ASSERT_EQ(j.size(), 1u);
  EXPECT_NEAR(j[0].at.x, 8.0, 1e-12);
  EXPECT_NEAR(j[0].at.y, 0.0, 1e-12);
}

TEST(Junctions, WireTouchingElectrodeDisk) {
  NanowireLayout l = hand_layout({{{10, 12}, 0.0, 10.0}, {{10, 20}, 0.0, 10.0}});
  l.electrodes.push_back({{10, 10}, 2.5});
  const auto j = detect_junctions(l);
  ASSERT_EQ(j.size(), 1u);
  EXPECT_EQ(j[0].kind, JunctionKind::wire_electrode);
  EXPECT_EQ(j[0].a, 0u);
  EXPECT_EQ(j[0].b, 2u);  // first electrode follows the two wires
  EXPECT_NEAR(j[0].at.x, 10.0, 1e-12);
  EXPECT_NEAR(j[0].at.y, 12.0, 1e-12);
}

TEST(Junctions, CountAcrossSeedsWithinPlausibleRange) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    NetgenConfig c;
    c.seed = seed;
    const auto n = detect_junctions(generate_layout(c)).size();
    EXPECT_GE(n, 9000u) << "seed " << seed;
    EXPECT_LE(n, 16000u) << "seed " << seed;
  }
}

TEST(Junctions, CoordinatesLieOnBothPrimitives) {
  NetgenConfig c;
  c.seed = 5;
  const auto layout = generate_layout(c);
  const auto n = static_cast<std::uint32_t>(layout.wires.size());
  for (const auto& j : detect_junctions(layout)) {
    const auto& wa = layout.wires[j.a];
    EXPECT_LE(distance_to_segment(j.at, wa.end_a(), wa.end_b()), 1e-9);
    if (j.kind == JunctionKind::wire_wire) {
      const auto& wb = layout.wires[j.b];
      EXPECT_LE(distance_to_segment(j.at, wb.end_a(), wb.end_b()), 1e-9);
    } else {
      const auto& e = layout.electrodes[j.b - n];
      EXPECT_LE(std::hypot(j.at.x - e.center.x, j.at.y - e.center.y), e.radius + 1e-9);
    }
  }
}

TEST(Graph, NodeAndReadoutCounts) {
  NetgenConfig c;
  c.seed = 3;
  const auto g = make_network(c);
  EXPECT_EQ(g.node_count(), 1059u);
  EXPECT_EQ(g.input_index.size(), 256u);
  ASSERT_EQ(g.readout_ids.size(), 400u);
  EXPECT_TRUE(std::is_sorted(g.readout_ids.begin(), g.readout_ids.end()));
  EXPECT_EQ(std::set<std::uint32_t>(g.readout_ids.begin(), g.readout_ids.end()).size(), 400u);
  for (auto id : g.readout_ids) EXPECT_EQ(g.nodes[id], NodeKind::wire);
  for (std::size_t k = 0; k < g.input_index.size(); ++k) EXPECT_EQ(g.input_index[k], 803u + k);
}

TEST(Graph, EdgesAreSimpleAndCanonical) {
  NetgenConfig c;
  c.seed = 8;
  const auto g = make_network(c);
  std::set<std::pair<std::uint32_t, std::uint32_t>> seen;
  for (const auto& e : g.edges) {
    EXPECT_LT(e.u, e.v);
    EXPECT_TRUE(seen.insert({e.u, e.v}).second);
    if (e.kind == JunctionKind::wire_electrode) {
      EXPECT_EQ(g.nodes[e.u], NodeKind::wire);
      EXPECT_EQ(g.nodes[e.v], NodeKind::electrode);
    }
  }
}

TEST(Graph, ParallelContactsMerge) {
  const auto layout = hand_layout({{{5, 0}, 0.0, 10.0}, {{11, 0}, 0.0, 10.0}});
  NetgenConfig c;
  std::vector<Junction> js = {{0, 1, JunctionKind::wire_wire, {8, 0}}, {0, 1, JunctionKind::wire_wire, {9, 0}}};
  const auto g = build_graph(c, layout, js, 0, 1);
  EXPECT_EQ(g.edge_count(), 1u);
}

TEST(Graph, NoJunctionsStillHasAllNodes) {
  NetgenConfig c;
  const auto layout = generate_layout(c);
  const auto g = build_graph(c, layout, {}, 1);
  EXPECT_EQ(g.node_count(), 1059u);
  EXPECT_EQ(g.edge_count(), 0u);
}

TEST(Graph, TooManyReadoutsRejected) {
  NetgenConfig c;
  c.n_wires = 10;
  const auto layout = generate_layout(c);
  EXPECT_THROW(build_graph(c, layout, {}, 0, 11), ConfigError);
}

TEST(Graph, SerialisationIsDeterministicAndRoundTrips) {
  NetgenConfig c;
  c.seed = 99;
  const auto a = to_json(make_network(c)).dump();
  const auto b = to_json(make_network(c)).dump();
  EXPECT_EQ(a, b);
  const auto back = graph_from_json(nlohmann::json::parse(a));
  EXPECT_EQ(to_json(back).dump(), a);
}

TEST(Graph, RelabellingWiresGivesIsomorphicGraph) {
  NetgenConfig c;
  c.seed = 21;
  const auto layout = generate_layout(c);
  const auto n = layout.wires.size();
  std::vector<std::uint32_t> perm(n);
  for (std::uint32_t i = 0; i < n; ++i) perm[i] = i;
  std::mt19937 rng(4);
  std::shuffle(perm.begin(), perm.end(), rng);
  NanowireLayout permuted = layout;
  for (std::size_t i = 0; i < n; ++i) permuted.wires[perm[i]] = layout.wires[i];

  const auto g1 = build_graph(c, layout, detect_junctions(layout), 0);
  const auto g2 = build_graph(c, permuted, detect_junctions(permuted), 0);
  ASSERT_EQ(g1.edge_count(), g2.edge_count());
  auto relabel = [&](std::uint32_t id) { return id < n ? perm[id] : id; };
  std::set<std::pair<std::uint32_t, std::uint32_t>> mapped, actual;
  for (const auto& e : g1.edges) {
    const auto u = relabel(e.u), v = relabel(e.v);
    mapped.insert({std::min(u, v), std::max(u, v)});
  }
  for (const auto& e : g2.edges) actual.insert({e.u, e.v});
  EXPECT_EQ(mapped, actual);
}
