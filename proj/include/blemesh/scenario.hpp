/*
 * Scenario assembly: topologies (grids and the office layout), traffic
 * specification, experiment presets, and the scenario/interference file
 * formats. All JSON I/O for the project lives here.
 *
 * Scenario files are strict: unknown keys, duplicate node ids, and malformed
 * values are schema errors that name the offending element.
 */
#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "blemesh/interference.hpp"
#include "blemesh/node.hpp"
#include "blemesh/radio.hpp"
#include "blemesh/time.hpp"

namespace blemesh {

using json = nlohmann::json;

struct SchemaError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NodePlacement {
  NodeId id = 0;
  double x_m = 0.0;
  double y_m = 0.0;
  bool relay = true;
};

struct Topology {
  std::vector<NodePlacement> nodes;
  double radio_range_m = 9.0;  // fixed-PER connectivity radius
  std::string label;

  void validate() const {
    if (nodes.empty()) throw SchemaError("topology: node list is empty");
    std::set<NodeId> ids;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      const auto& n = nodes[i];
      if (!std::isfinite(n.x_m) || !std::isfinite(n.y_m))
        throw SchemaError("topology: nodes[" + std::to_string(i) + "] has non-finite coordinates");
      if (!ids.insert(n.id).second)
        throw SchemaError("topology: duplicate node id " + std::to_string(n.id) + " at nodes[" +
                          std::to_string(i) + "]");
    }
  }

  const NodePlacement* find(NodeId id) const {
    for (const auto& n : nodes)
      if (n.id == id) return &n;
    return nullptr;
  }
};

struct TrafficSpec {
  NodeId source = 1;
  NodeId destination = 2;
  int replica_count = 0;
  Micros replica_gap = 30 * kMicrosPerMilli;
  double side_traffic_fraction = 0.0;
  Micros side_traffic_window = 70 * kMicrosPerMilli;

  void validate() const {
    if (source == destination) throw SchemaError("traffic: source equals destination");
    if (side_traffic_fraction < 0.0 || side_traffic_fraction > 1.0)
      throw SchemaError("traffic: side_traffic_fraction must be in [0,1]");
    if (replica_count < 0) throw SchemaError("traffic: replica_count must be >= 0");
    if (replica_gap < 0 || side_traffic_window < 0)
      throw SchemaError("traffic: time fields must be >= 0");
  }
};

struct PlanDefaults {
  std::uint64_t seed = 1;
  int replications = 10000;
  Micros horizon = 10 * kMicrosPerSecond;
  Micros warmup = 0;

  void validate() const {
    if (replications < 1) throw SchemaError("plan: replications must be >= 1");
    if (horizon <= warmup) throw SchemaError("plan: horizon must exceed warmup");
    if (warmup < 0) throw SchemaError("plan: warmup must be >= 0");
  }
};

struct Scenario {
  std::string label = "scenario";
  Topology topology;
  TrafficSpec traffic;
  RadioParams radio;
  PerMode per_mode = PerMode::fixed(0.0);
  TimingConfig timing;  // per-node protocol defaults
  int cache_capacity = 255;
  int default_ttl = 64;
  int relay_queue_depth = 1;
  std::shared_ptr<const InterferenceMap> interference;
  int interference_window = 0;
  bool wlan_interference = true;  // off: keep the map but feed I_W = 0
  std::optional<PlanDefaults> plan;

  void validate() const {
    topology.validate();
    traffic.validate();
    radio.validate();
    timing.validate();
    if (cache_capacity < 1) throw SchemaError("scenario: cache_capacity must be >= 1");
    if (default_ttl < 1) throw SchemaError("scenario: default_ttl must be >= 1");
    if (relay_queue_depth < 1) throw SchemaError("scenario: relay_queue_depth must be >= 1");
    if (!topology.find(traffic.source))
      throw SchemaError("traffic: source id " + std::to_string(traffic.source) + " not in topology");
    if (!topology.find(traffic.destination))
      throw SchemaError("traffic: destination id " + std::to_string(traffic.destination) +
                        " not in topology");
    if (!per_mode.uses_sinr() && !(topology.radio_range_m > 0))
      throw SchemaError("radio: range_m must be > 0 in fixed-PER mode");
    if (per_mode.model == PerModel::Fixed &&
        (per_mode.fixed_per < 0 || per_mode.fixed_per > 1))
      throw SchemaError("per_mode: fixed per must be in [0,1]");
    if (interference) {
      if (interference_window < 0 ||
          static_cast<std::size_t>(interference_window) >= interference->window_count())
        throw SchemaError("scenario: interference_window out of range");
    }
    if (plan) plan->validate();
  }

  /// Full per-device configuration for one placement.
  NodeConfig node_config(const NodePlacement& p) const {
    NodeConfig c;
    c.id = p.id;
    c.x_m = p.x_m;
    c.y_m = p.y_m;
    c.is_relay = p.relay;
    c.timing = timing;
    c.cache_capacity = cache_capacity;
    c.default_ttl = default_ttl;
    c.relay_queue_depth = relay_queue_depth;
    return c;
  }
};

/*
 * Topology generators.
 */

/// Rectangular lattice at pitch `spacing`, ids row-major starting at 1, all
/// relays. `extra_cols` adds nodes in one additional row (used to hit node
/// counts that no rectangle matches).
inline Topology generate_grid(double spacing, int rows, int cols, double radio_range,
                              const std::vector<int>& extra_cols = {}, std::string label = "grid") {
  if (spacing <= 0) throw std::invalid_argument("grid: spacing must be > 0");
  if (static_cast<long>(rows) * cols < 2) throw std::invalid_argument("grid: need at least 2 nodes");
  Topology t;
  t.radio_range_m = radio_range;
  t.label = std::move(label);
  NodeId id = 1;
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c)
      t.nodes.push_back(NodePlacement{id++, c * spacing, r * spacing, true});
  for (int c : extra_cols)
    t.nodes.push_back(NodePlacement{id++, c * spacing, rows * spacing, true});
  return t;
}

/*
 * The four scalability grids. Node counts and spacings follow the reference
 * densification study (52/68/86/106 devices at 8.8/8/7.2/6.6 m); the exact
 * grid shape is not published, so shapes are chosen to reproduce the
 * observed sparse-to-dense behavior: the sparsest deployment offers the
 * fewest and longest parallel routes, the densest the most hops.
 */
inline Topology scalability_topology(char letter) {
  switch (letter) {
    case 'A': return generate_grid(8.8, 2, 26, 9.0, {}, "topology-A");
    case 'B': return generate_grid(8.0, 4, 17, 9.0, {}, "topology-B");
    case 'C': return generate_grid(7.2, 5, 17, 9.0, {8}, "topology-C");
    case 'D': return generate_grid(6.6, 3, 35, 9.0, {17}, "topology-D");
    default: throw std::invalid_argument("scalability topology letter must be A..D");
  }
}

/// Rectangle-corner endpoints: source at the origin node, destination at the
/// opposite corner of the base rectangle (maximal grid separation).
inline void assign_grid_endpoints(Scenario& s, int rows, int cols) {
  s.traffic.source = 1;
  s.traffic.destination = static_cast<NodeId>(rows) * static_cast<NodeId>(cols);
}

/// 28-relay office deployment, 40 x 20 m. Coordinates are a synthetic layout
/// of the density used in the interference study: a top corridor, a middle
/// row, and a bottom section whose right side (nodes 17, 20-22, 26-28)
/// clusters near the interference hotspot corner.
inline Topology office_topology() {
  Topology t;
  t.label = "office-28";
  t.radio_range_m = 9.0;  // unused in SINR mode
  const std::vector<std::array<double, 2>> xy = {
      {1.5, 18.5},  // 1  traced source
      {38.5, 18.5}, // 2  traced destination
      {6.0, 19.0},  {11.0, 18.0}, {16.0, 19.0}, {21.0, 18.5}, {26.0, 19.0},
      {31.0, 18.0}, {35.0, 19.0},                                            // 3..9
      {2.0, 13.0},  {8.0, 12.5},  {14.0, 13.0}, {20.0, 12.5}, {26.0, 13.0},
      {32.0, 12.5}, {38.0, 13.0},                                            // 10..16
      {29.0, 6.5},                                                           // 17
      {2.5, 7.0},   {8.0, 6.5},                                              // 18, 19
      {33.0, 7.0},  {37.0, 6.5},  {30.5, 1.5},                               // 20, 21, 22
      {5.0, 1.0},   {12.0, 6.5},  {17.0, 1.5},                               // 23, 24, 25
      {38.5, 1.5},  {34.0, 1.0},  {25.0, 2.0},                               // 26, 27, 28
  };
  NodeId id = 1;
  for (const auto& p : xy) t.nodes.push_back(NodePlacement{id++, p[0], p[1], true});
  return t;
}

/// Office interference: hotspots in the bottom-right corner on the 802.15.4
/// channels overlapping the three ADV channels, heavier on the channel that
/// shares spectrum with WLAN channel 1. Four daily windows scale the field
/// with the WLAN load (quiet morning, busiest early afternoon).
inline std::shared_ptr<const InterferenceMap> office_interference_map() {
  // The access point sits past the bottom-right corner; its channel-1
  // spectrum partially overlaps ADV channel 37, the other two ADV channels
  // pick up less. Field strengths are tuned so the corner sub-network
  // degrades during busy hours while the top corridor keeps carrying
  // traffic.
  const std::vector<InterferenceHotspot> hotspots = {
      {38.0, 1.0, -40.0, 1.5, map_channel(AdvChannel::Ch37)},
      {38.0, 1.0, -46.0, 1.5, map_channel(AdvChannel::Ch38)},
      {38.0, 1.0, -46.0, 1.5, map_channel(AdvChannel::Ch39)},
      {30.0, 4.0, -50.0, 1.5, map_channel(AdvChannel::Ch37)},
  };
  const std::vector<TimeWindow> windows = {
      {7 * 3600.0, 10 * 3600.0, 1.0},   // 7 am - 10 am
      {10 * 3600.0, 14 * 3600.0, 1.0},  // 10 am - 2 pm
      {14 * 3600.0, 17 * 3600.0, 1.0},  // 2 pm - 5 pm
      {17 * 3600.0, 20 * 3600.0, 1.0},  // 5 pm - 8 pm
  };
  const std::vector<double> offsets_db = {-20.0, -10.0, -3.0, -7.0};
  return std::make_shared<InterferenceMap>(
      InterferenceMap::synthetic(hotspots, windows, offsets_db));
}

/*
 * Presets. Each preset is a base scenario plus a parameter grid; running a
 * preset executes every cell of the grid.
 */
struct SweepAxis {
  std::string param;
  std::vector<std::string> values;
};

struct ExperimentPreset {
  std::string name;
  Scenario base;
  std::vector<SweepAxis> axes;

  std::size_t cell_count() const {
    std::size_t n = 1;
    for (const auto& a : axes) n *= a.values.size();
    return n;
  }
};

inline std::vector<std::string> preset_names() {
  return {"replica-study",
          "timing-matrix",
          "scalability-a",
          "scalability-b",
          "scalability-c",
          "scalability-d",
          "scalability-side-traffic-short",
          "scalability-side-traffic-long",
          "office-interference"};
}

inline Scenario grid_base_scenario(char letter) {
  Scenario s;
  s.topology = scalability_topology(letter);
  switch (letter) {
    case 'A': assign_grid_endpoints(s, 2, 26); break;
    case 'B': assign_grid_endpoints(s, 4, 17); break;
    case 'C': assign_grid_endpoints(s, 5, 17); break;
    case 'D': assign_grid_endpoints(s, 3, 35); break;
  }
  s.timing.inter_pdu_min = millis_to_micros(3);
  s.timing.inter_pdu_max = millis_to_micros(5);
  s.timing.backoff_min = 0;
  s.timing.backoff_max = millis_to_micros(20);
  s.timing.scan_interval = millis_to_micros(100);
  s.timing.scan_window = millis_to_micros(100);
  s.per_mode = PerMode::fixed(0.0);
  return s;
}

inline ExperimentPreset preset(const std::string& name) {
  ExperimentPreset p;
  p.name = name;
  if (name == "replica-study") {
    p.base = grid_base_scenario('B');
    p.base.label = "replica-study";
    p.base.traffic.replica_gap = millis_to_micros(30);
    p.axes = {{"replica_count", {"0", "1"}}, {"per", {"0", "0.05", "0.1"}}};
    return p;
  }
  if (name == "timing-matrix") {
    p.base = grid_base_scenario('B');
    p.base.label = "timing-matrix";
    p.base.traffic.replica_count = 1;
    SweepAxis inter{"inter_pdu_ms", {"1:2", "2:4", "4:6", "6:8", "8:10"}};
    SweepAxis scan{"scan_ms", {}};
    for (int si = 10; si <= 200; si += 10) scan.values.push_back(std::to_string(si));
    p.axes = {inter, scan};
    return p;
  }
  if (name.rfind("scalability-side-traffic-", 0) == 0) {
    const bool short_gaps = name == "scalability-side-traffic-short";
    if (!short_gaps && name != "scalability-side-traffic-long")
      throw std::invalid_argument("unknown preset: " + name);
    p.base = grid_base_scenario('B');
    p.base.label = name;
    p.base.traffic.replica_count = 1;
    p.base.traffic.side_traffic_fraction = 0.10;
    if (short_gaps) {
      p.base.timing.inter_pdu_min = millis_to_micros(0.1);
      p.base.timing.inter_pdu_max = millis_to_micros(1);
    }
    p.axes = {{"topology", {"A", "B", "C", "D"}}, {"per", {"0", "0.05", "0.1", "0.15"}}};
    return p;
  }
  if (name.rfind("scalability-", 0) == 0 && name.size() == 13) {
    const char letter = static_cast<char>(std::toupper(name.back()));
    p.base = grid_base_scenario(letter);
    p.base.label = name;
    p.base.traffic.replica_count = 1;
    p.axes = {{"per", {"0", "0.05", "0.1", "0.15"}}};
    return p;
  }
  if (name == "office-interference") {
    Scenario s;
    s.label = "office-interference";
    s.topology = office_topology();
    s.traffic.source = 1;
    s.traffic.destination = 2;
    s.traffic.replica_count = 1;
    s.traffic.replica_gap = millis_to_micros(30);
    s.timing.inter_pdu_min = millis_to_micros(3);
    s.timing.inter_pdu_max = millis_to_micros(5);
    s.per_mode = PerMode::sinr_complement();
    s.interference = office_interference_map();
    p.base = s;
    p.axes = {{"interference_window", {"0", "1", "2", "3"}},
              {"wlan_interference", {"on", "off"}}};
    return p;
  }
  throw std::invalid_argument("unknown preset: " + name);
}

/*
 * Sweep parameters recognized by presets, the sweep command, and scenario
 * overrides. Values arrive as strings; ranges use "lo:hi".
 */
inline std::pair<double, double> parse_range(const std::string& v, const std::string& param) {
  const auto sep = v.find(':');
  if (sep == std::string::npos)
    throw std::invalid_argument("parameter " + param + ": expected lo:hi, got '" + v + "'");
  try {
    return {std::stod(v.substr(0, sep)), std::stod(v.substr(sep + 1))};
  } catch (const std::exception&) {
    throw std::invalid_argument("parameter " + param + ": malformed range '" + v + "'");
  }
}

inline void apply_parameter(Scenario& s, const std::string& name, const std::string& value) {
  auto as_double = [&](const std::string& v) {
    try {
      return std::stod(v);
    } catch (const std::exception&) {
      throw std::invalid_argument("parameter " + name + ": malformed number '" + v + "'");
    }
  };
  auto as_int = [&](const std::string& v) {
    try {
      return std::stoi(v);
    } catch (const std::exception&) {
      throw std::invalid_argument("parameter " + name + ": malformed integer '" + v + "'");
    }
  };
  if (name == "per") {
    s.per_mode = PerMode::fixed(as_double(value));
  } else if (name == "per_mode") {
    if (value == "sinr_complement") s.per_mode = PerMode::sinr_complement();
    else if (value == "sinr_published") s.per_mode = PerMode::sinr_published();
    else if (value.rfind("fixed:", 0) == 0) s.per_mode = PerMode::fixed(as_double(value.substr(6)));
    else throw std::invalid_argument("parameter per_mode: expected fixed:<p>, sinr_complement, or sinr_published");
  } else if (name == "replica_count") {
    s.traffic.replica_count = as_int(value);
  } else if (name == "replica_gap_ms") {
    s.traffic.replica_gap = millis_to_micros(as_double(value));
  } else if (name == "inter_pdu_ms") {
    const auto [lo, hi] = parse_range(value, name);
    s.timing.inter_pdu_min = millis_to_micros(lo);
    s.timing.inter_pdu_max = millis_to_micros(hi);
  } else if (name == "backoff_ms") {
    const auto [lo, hi] = parse_range(value, name);
    s.timing.backoff_min = millis_to_micros(lo);
    s.timing.backoff_max = millis_to_micros(hi);
  } else if (name == "scan_interval_ms") {
    s.timing.scan_interval = millis_to_micros(as_double(value));
  } else if (name == "scan_window_ms") {
    s.timing.scan_window = millis_to_micros(as_double(value));
  } else if (name == "scan_ms") {
    s.timing.scan_interval = millis_to_micros(as_double(value));
    s.timing.scan_window = s.timing.scan_interval;
  } else if (name == "side_traffic_fraction") {
    s.traffic.side_traffic_fraction = as_double(value);
  } else if (name == "default_ttl") {
    s.default_ttl = as_int(value);
  } else if (name == "interference_window") {
    s.interference_window = as_int(value);
  } else if (name == "wlan_interference") {
    if (value == "on") s.wlan_interference = true;
    else if (value == "off") s.wlan_interference = false;
    else throw std::invalid_argument("parameter wlan_interference: expected on or off");
  } else if (name == "topology") {
    if (value.size() != 1) throw std::invalid_argument("parameter topology: expected A, B, C, or D");
    const char letter = static_cast<char>(std::toupper(value[0]));
    s.topology = scalability_topology(letter);
    switch (letter) {
      case 'A': assign_grid_endpoints(s, 2, 26); break;
      case 'B': assign_grid_endpoints(s, 4, 17); break;
      case 'C': assign_grid_endpoints(s, 5, 17); break;
      case 'D': assign_grid_endpoints(s, 3, 35); break;
      default: throw std::invalid_argument("parameter topology: expected A, B, C, or D");
    }
  } else {
    throw std::invalid_argument(
        "unknown sweep parameter '" + name +
        "' (known: per, per_mode, replica_count, replica_gap_ms, inter_pdu_ms, backoff_ms, "
        "scan_interval_ms, scan_window_ms, scan_ms, side_traffic_fraction, default_ttl, "
        "interference_window, wlan_interference, topology)");
  }
}

}  // namespace blemesh

#include "blemesh/scenario_io.hpp"
