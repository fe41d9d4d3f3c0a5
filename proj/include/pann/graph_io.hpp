#ifndef PANN_GRAPH_IO_HPP
#define PANN_GRAPH_IO_HPP

// JSON form of a NetworkGraph: {config, nodes, edges, readout_ids, input_index}.
// Doubles are emitted in shortest round-trip form, so parse(dump(g)) == g.

#include <string>

#include <nlohmann/json.hpp>

#include "pann/common.hpp"
#include "pann/netgen.hpp"

namespace pann {

inline nlohmann::json to_json(const NetgenConfig& c) {
  nlohmann::json j = {{"plane_side", c.plane_side},
                      {"n_wires", c.n_wires},
                      {"wire_len_mean", c.wire_len_mean},
                      {"wire_len_std", c.wire_len_std},
                      {"center_beta", c.center_beta},
                      {"center_scale", c.scale()},
                      {"electrode_grid", c.electrode_grid},
                      {"electrode_diameter", c.electrode_diameter},
                      {"electrode_margin", c.electrode_margin},
                      {"electrode_pitch", c.electrode_pitch},
                      {"seed", c.seed}};
  return j;
}

inline NetgenConfig netgen_config_from_json(const nlohmann::json& j) {
  NetgenConfig c;
  c.plane_side = j.value("plane_side", c.plane_side);
  c.n_wires = j.value("n_wires", c.n_wires);
  c.wire_len_mean = j.value("wire_len_mean", c.wire_len_mean);
  c.wire_len_std = j.value("wire_len_std", c.wire_len_std);
  c.center_beta = j.value("center_beta", c.center_beta);
  if (j.contains("center_scale")) c.center_scale = j.at("center_scale").get<double>();
  c.electrode_grid = j.value("electrode_grid", c.electrode_grid);
  c.electrode_diameter = j.value("electrode_diameter", c.electrode_diameter);
  c.electrode_margin = j.value("electrode_margin", c.electrode_margin);
  c.electrode_pitch = j.value("electrode_pitch", c.electrode_pitch);
  c.seed = j.value("seed", c.seed);
  return c;
}

inline nlohmann::json to_json(const NetworkGraph& g) {
  nlohmann::json nodes = nlohmann::json::array();
  for (auto k : g.nodes) nodes.push_back(k == NodeKind::wire ? "wire" : "electrode");
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& e : g.edges) {
    edges.push_back({{"u", e.u},
                     {"v", e.v},
                     {"kind", e.kind == JunctionKind::wire_wire ? "wire-wire" : "wire-electrode"},
                     {"x", e.at.x},
                     {"y", e.at.y}});
  }
  return {{"config", to_json(g.config)},
          {"nodes", nodes},
          {"edges", edges},
          {"readout_ids", g.readout_ids},
          {"input_index", g.input_index}};
}

inline NetworkGraph graph_from_json(const nlohmann::json& j) {
  try {
    NetworkGraph g;
    g.config = netgen_config_from_json(j.at("config"));
    for (const auto& n : j.at("nodes")) {
      const auto s = n.get<std::string>();
      if (s == "wire") g.nodes.push_back(NodeKind::wire);
      else if (s == "electrode") g.nodes.push_back(NodeKind::electrode);
      else throw FormatError("graph: unknown node kind " + s);
    }
    for (const auto& e : j.at("edges")) {
      const auto kind = e.at("kind").get<std::string>();
      Edge edge{e.at("u").get<std::uint32_t>(), e.at("v").get<std::uint32_t>(),
                kind == "wire-wire" ? JunctionKind::wire_wire : JunctionKind::wire_electrode,
                {e.at("x").get<double>(), e.at("y").get<double>()}};
      if (edge.u >= edge.v || edge.v >= g.nodes.size()) throw FormatError("graph: malformed edge");
      g.edges.push_back(edge);
    }
    g.readout_ids = j.at("readout_ids").get<std::vector<std::uint32_t>>();
    g.input_index = j.at("input_index").get<std::vector<std::uint32_t>>();
    for (auto id : g.readout_ids) {
      if (id >= g.nodes.size() || g.nodes[id] != NodeKind::wire) throw FormatError("graph: readout id not a wire node");
    }
    for (auto id : g.input_index) {
      if (id >= g.nodes.size() || g.nodes[id] != NodeKind::electrode) throw FormatError("graph: input id not an electrode");
    }
    return g;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("graph: ") + e.what());
  }
}

}  // namespace pann

#endif  // PANN_GRAPH_IO_HPP
