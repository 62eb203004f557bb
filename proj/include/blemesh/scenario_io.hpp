/*
 * Scenario and interference-map file formats (JSON object trees).
 *
 * Top-level scenario keys: nodes[], radio{}, timing{}, traffic{}, per_mode,
 * interference_map, plus label, interference_window, wlan_interference and
 * an optional plan{} block. Key names are normative; unknown keys anywhere
 * are schema errors.
 */
#pragma once

#include "blemesh/scenario.hpp"

namespace blemesh {

namespace detail {

inline void check_keys(const json& obj, const std::string& ctx,
                       std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw SchemaError(ctx + ": expected an object");
  for (const auto& [key, _] : obj.items()) {
    bool ok = false;
    for (const char* a : allowed)
      if (key == a) {
        ok = true;
        break;
      }
    if (!ok) throw SchemaError(ctx + ": unknown field '" + key + "'");
  }
}

inline double get_num(const json& obj, const std::string& ctx, const char* key, double fallback,
                      bool required = false) {
  if (!obj.contains(key)) {
    if (required) throw SchemaError(ctx + ": missing field '" + key + "'");
    return fallback;
  }
  if (!obj[key].is_number()) throw SchemaError(ctx + "." + key + ": expected a number");
  return obj[key].get<double>();
}

inline int get_int(const json& obj, const std::string& ctx, const char* key, int fallback,
                   bool required = false) {
  if (!obj.contains(key)) {
    if (required) throw SchemaError(ctx + ": missing field '" + key + "'");
    return fallback;
  }
  if (!obj[key].is_number_integer()) throw SchemaError(ctx + "." + key + ": expected an integer");
  return obj[key].get<int>();
}

inline bool get_bool(const json& obj, const std::string& ctx, const char* key, bool fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_boolean()) throw SchemaError(ctx + "." + key + ": expected a boolean");
  return obj[key].get<bool>();
}

inline Micros get_ms(const json& obj, const std::string& ctx, const char* key, Micros fallback) {
  if (!obj.contains(key)) return fallback;
  return millis_to_micros(get_num(obj, ctx, key, 0.0, true));
}

inline std::pair<Micros, Micros> get_ms_range(const json& obj, const std::string& ctx,
                                              const char* key, Micros lo, Micros hi) {
  if (!obj.contains(key)) return {lo, hi};
  const json& v = obj[key];
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
    throw SchemaError(ctx + "." + key + ": expected [min_ms, max_ms]");
  return {millis_to_micros(v[0].get<double>()), millis_to_micros(v[1].get<double>())};
}

/// Line number of a byte offset, for parse errors ("line context").
inline int line_of_offset(const std::string& text, std::size_t offset) {
  int line = 1;
  for (std::size_t i = 0; i < offset && i < text.size(); ++i)
    if (text[i] == '\n') ++line;
  return line;
}

}  // namespace detail

/*
 * Interference map files.
 */
inline json interference_map_to_json(const InterferenceMap& map) {
  json j;
  j["format_version"] = 1;
  j["bandwidth_ratio_db"] = map.bandwidth_ratio_db();
  json windows = json::array();
  for (const auto& w : map.windows()) {
    json jw;
    jw["start_s"] = w.start_s;
    jw["end_s"] = w.end_s;
    jw["duty_cycle"] = w.duty_cycle;
    windows.push_back(jw);
  }
  j["windows"] = windows;
  if (map.analytic()) {
    j["kind"] = "synthetic";
    json hs = json::array();
    for (const auto& h : map.hotspots()) {
      json jh;
      jh["x_m"] = h.x_m;
      jh["y_m"] = h.y_m;
      jh["peak_dbm"] = h.peak_dbm;
      jh["decay_db_per_m"] = h.decay_db_per_m;
      jh["channel_154"] = h.channel_154;
      hs.push_back(jh);
    }
    j["hotspots"] = hs;
    j["window_offsets_db"] = map.window_offsets_db();
  } else {
    j["kind"] = "sampled";
    j["interpolation"] =
        map.interpolation() == Interpolation::InverseDistanceWeighting ? "idw" : "nearest";
    j["idw_exponent"] = map.idw_exponent();
    json cells = json::array();
    for (std::size_t w = 0; w < map.window_count(); ++w) {
      for (AdvChannel ch : kAdvChannels) {
        const auto& pts = map.samples(w, ch);
        if (pts.empty()) continue;
        json cell;
        cell["window"] = w;
        cell["channel"] = adv_channel_number(ch);
        json points = json::array();
        for (const auto& s : pts) points.push_back({s.x_m, s.y_m, s.power_mw});
        cell["points"] = points;
        cells.push_back(cell);
      }
    }
    j["samples"] = cells;
  }
  return j;
}

namespace detail {

inline std::vector<std::tuple<std::size_t, AdvChannel, InterferenceMap::Sample>>
parse_sample_cells(const json& cells, std::size_t window_count) {
  std::vector<std::tuple<std::size_t, AdvChannel, InterferenceMap::Sample>> points;
  for (const auto& cell : cells) {
    check_keys(cell, "interference_map.samples[]", {"window", "channel", "points"});
    const auto w = static_cast<std::size_t>(get_int(cell, "samples[]", "window", 0, true));
    const int ch_num = get_int(cell, "samples[]", "channel", 0, true);
    if (w >= window_count) throw SchemaError("interference_map: sample window out of range");
    AdvChannel ch;
    if (ch_num == 37) ch = AdvChannel::Ch37;
    else if (ch_num == 38) ch = AdvChannel::Ch38;
    else if (ch_num == 39) ch = AdvChannel::Ch39;
    else throw SchemaError("interference_map: sample channel must be 37, 38, or 39");
    if (!cell.contains("points") || !cell["points"].is_array())
      throw SchemaError("interference_map: samples[].points must be an array");
    for (const auto& p : cell["points"]) {
      if (!p.is_array() || p.size() != 3)
        throw SchemaError("interference_map: each point must be [x_m, y_m, power_mw]");
      points.emplace_back(w, ch,
                          InterferenceMap::Sample{p[0].get<double>(), p[1].get<double>(),
                                                  p[2].get<double>()});
    }
  }
  return points;
}

}  // namespace detail

inline InterferenceMap interference_map_from_json(const json& j) {
  detail::check_keys(j, "interference_map",
                     {"format_version", "bandwidth_ratio_db", "windows", "kind", "hotspots",
                      "window_offsets_db", "interpolation", "idw_exponent", "samples"});
  const int version = detail::get_int(j, "interference_map", "format_version", 0, true);
  if (version != 1) throw SchemaError("interference_map: unsupported format_version");
  const double ratio =
      detail::get_num(j, "interference_map", "bandwidth_ratio_db", kDefaultBandwidthRatioDb);
  std::vector<TimeWindow> windows;
  if (!j.contains("windows") || !j["windows"].is_array())
    throw SchemaError("interference_map: missing windows[]");
  for (const auto& jw : j["windows"]) {
    detail::check_keys(jw, "interference_map.windows[]", {"start_s", "end_s", "duty_cycle"});
    TimeWindow w;
    w.start_s = detail::get_num(jw, "windows[]", "start_s", 0.0, true);
    w.end_s = detail::get_num(jw, "windows[]", "end_s", 0.0, true);
    w.duty_cycle = detail::get_num(jw, "windows[]", "duty_cycle", 1.0);
    windows.push_back(w);
  }
  const std::string kind = j.contains("kind") ? j["kind"].get<std::string>() : "sampled";
  if (kind == "synthetic") {
    std::vector<InterferenceHotspot> hotspots;
    if (j.contains("hotspots")) {
      for (const auto& jh : j["hotspots"]) {
        detail::check_keys(jh, "interference_map.hotspots[]",
                           {"x_m", "y_m", "peak_dbm", "decay_db_per_m", "channel_154"});
        InterferenceHotspot h;
        h.x_m = detail::get_num(jh, "hotspots[]", "x_m", 0.0, true);
        h.y_m = detail::get_num(jh, "hotspots[]", "y_m", 0.0, true);
        h.peak_dbm = detail::get_num(jh, "hotspots[]", "peak_dbm", 0.0, true);
        h.decay_db_per_m = detail::get_num(jh, "hotspots[]", "decay_db_per_m", 1.0);
        h.channel_154 = detail::get_int(jh, "hotspots[]", "channel_154", 11, true);
        hotspots.push_back(h);
      }
    }
    std::vector<double> offsets;
    if (j.contains("window_offsets_db")) {
      if (!j["window_offsets_db"].is_array())
        throw SchemaError("interference_map: window_offsets_db must be an array");
      for (const auto& v : j["window_offsets_db"]) offsets.push_back(v.get<double>());
    }
    return InterferenceMap::synthetic(hotspots, std::move(windows), std::move(offsets), ratio);
  }
  if (kind != "sampled") throw SchemaError("interference_map: kind must be sampled or synthetic");
  Interpolation interp = Interpolation::InverseDistanceWeighting;
  if (j.contains("interpolation")) {
    const std::string s = j["interpolation"].get<std::string>();
    if (s == "idw") interp = Interpolation::InverseDistanceWeighting;
    else if (s == "nearest") interp = Interpolation::NearestObserver;
    else throw SchemaError("interference_map: interpolation must be idw or nearest");
  }
  const double expn = detail::get_num(j, "interference_map", "idw_exponent", 2.0);
  const auto points = detail::parse_sample_cells(
      j.contains("samples") ? j["samples"] : json::array(), windows.size());
  return InterferenceMap::from_adapted_samples(std::move(windows), interp, expn, ratio, points);
}

inline void save_interference_map(const InterferenceMap& map, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write interference map: " + path);
  out << interference_map_to_json(map).dump(2) << '\n';
}

inline InterferenceMap load_interference_map(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open interference map: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  try {
    return interference_map_from_json(json::parse(text));
  } catch (const json::parse_error& e) {
    throw SchemaError(path + ":" + std::to_string(detail::line_of_offset(text, e.byte)) +
                      ": JSON parse error: " + e.what());
  }
}

/*
 * Scenario files.
 */
inline json scenario_to_json(const Scenario& s) {
  json j;
  j["label"] = s.label;
  json nodes = json::array();
  for (const auto& n : s.topology.nodes) {
    json jn;
    jn["id"] = n.id;
    jn["x_m"] = n.x_m;
    jn["y_m"] = n.y_m;
    jn["relay"] = n.relay;
    nodes.push_back(jn);
  }
  j["nodes"] = nodes;
  json radio;
  radio["tx_power_dbm"] = s.radio.tx_power_dbm;
  radio["noise_floor_dbm"] = s.radio.noise_floor_dbm;
  radio["sensitivity_dbm"] = s.radio.sensitivity_dbm;
  radio["path_loss_exponent"] = s.radio.path_loss_exponent;
  radio["shadowing_sigma_db"] = s.radio.shadowing_sigma_db;
  radio["reference_distance_m"] = s.radio.reference_distance_m;
  radio["bit_rate_bps"] = s.radio.bit_rate_bps;
  radio["pdu_bits"] = s.radio.pdu_bits;
  radio["per_alpha"] = s.radio.per_alpha;
  radio["range_m"] = s.topology.radio_range_m;
  j["radio"] = radio;
  json timing;
  timing["inter_pdu_ms"] = {micros_to_millis(s.timing.inter_pdu_min),
                            micros_to_millis(s.timing.inter_pdu_max)};
  timing["backoff_ms"] = {micros_to_millis(s.timing.backoff_min),
                          micros_to_millis(s.timing.backoff_max)};
  timing["scan_interval_ms"] = micros_to_millis(s.timing.scan_interval);
  timing["scan_window_ms"] = micros_to_millis(s.timing.scan_window);
  timing["cache_capacity"] = s.cache_capacity;
  timing["default_ttl"] = s.default_ttl;
  timing["relay_queue_depth"] = s.relay_queue_depth;
  j["timing"] = timing;
  json traffic;
  traffic["source"] = s.traffic.source;
  traffic["destination"] = s.traffic.destination;
  traffic["replica_count"] = s.traffic.replica_count;
  traffic["replica_gap_ms"] = micros_to_millis(s.traffic.replica_gap);
  traffic["side_traffic_fraction"] = s.traffic.side_traffic_fraction;
  traffic["side_traffic_window_ms"] = micros_to_millis(s.traffic.side_traffic_window);
  j["traffic"] = traffic;
  json per;
  switch (s.per_mode.model) {
    case PerModel::Fixed:
      per["mode"] = "fixed";
      per["per"] = s.per_mode.fixed_per;
      break;
    case PerModel::SinrDerivedAsPublished: per["mode"] = "sinr_published"; break;
    case PerModel::SinrDerivedComplement: per["mode"] = "sinr_complement"; break;
  }
  j["per_mode"] = per;
  if (s.interference) {
    j["interference_map"] = interference_map_to_json(*s.interference);
    j["interference_window"] = s.interference_window;
    j["wlan_interference"] = s.wlan_interference;
  }
  if (s.plan) {
    json plan;
    plan["seed"] = s.plan->seed;
    plan["replications"] = s.plan->replications;
    plan["horizon_ms"] = micros_to_millis(s.plan->horizon);
    plan["warmup_ms"] = micros_to_millis(s.plan->warmup);
    j["plan"] = plan;
  }
  return j;
}

inline Scenario scenario_from_json(const json& j, const std::string& base_dir = ".") {
  detail::check_keys(j, "scenario",
                     {"label", "nodes", "radio", "timing", "traffic", "per_mode",
                      "interference_map", "interference_window", "wlan_interference", "plan"});
  Scenario s;
  if (j.contains("label")) {
    if (!j["label"].is_string()) throw SchemaError("scenario.label: expected a string");
    s.label = j["label"].get<std::string>();
  }
  if (!j.contains("nodes")) throw SchemaError("scenario: missing nodes[]");
  if (!j["nodes"].is_array()) throw SchemaError("scenario.nodes: expected an array");
  std::size_t idx = 0;
  for (const auto& jn : j["nodes"]) {
    const std::string ctx = "nodes[" + std::to_string(idx) + "]";
    detail::check_keys(jn, ctx, {"id", "x_m", "y_m", "relay"});
    NodePlacement n;
    n.id = static_cast<NodeId>(detail::get_int(jn, ctx, "id", 0, true));
    n.x_m = detail::get_num(jn, ctx, "x_m", 0.0, true);
    n.y_m = detail::get_num(jn, ctx, "y_m", 0.0, true);
    n.relay = detail::get_bool(jn, ctx, "relay", true);
    s.topology.nodes.push_back(n);
    ++idx;
  }
  if (j.contains("radio")) {
    const json& r = j["radio"];
    detail::check_keys(r, "radio",
                       {"tx_power_dbm", "noise_floor_dbm", "sensitivity_dbm", "path_loss_exponent",
                        "shadowing_sigma_db", "reference_distance_m", "bit_rate_bps", "pdu_bits",
                        "per_alpha", "range_m"});
    s.radio.tx_power_dbm = detail::get_num(r, "radio", "tx_power_dbm", s.radio.tx_power_dbm);
    s.radio.noise_floor_dbm = detail::get_num(r, "radio", "noise_floor_dbm", s.radio.noise_floor_dbm);
    s.radio.sensitivity_dbm = detail::get_num(r, "radio", "sensitivity_dbm", s.radio.sensitivity_dbm);
    s.radio.path_loss_exponent =
        detail::get_num(r, "radio", "path_loss_exponent", s.radio.path_loss_exponent);
    s.radio.shadowing_sigma_db =
        detail::get_num(r, "radio", "shadowing_sigma_db", s.radio.shadowing_sigma_db);
    s.radio.reference_distance_m =
        detail::get_num(r, "radio", "reference_distance_m", s.radio.reference_distance_m);
    s.radio.bit_rate_bps = detail::get_num(r, "radio", "bit_rate_bps", s.radio.bit_rate_bps);
    s.radio.pdu_bits = detail::get_int(r, "radio", "pdu_bits", s.radio.pdu_bits);
    s.radio.per_alpha = detail::get_num(r, "radio", "per_alpha", s.radio.per_alpha);
    s.topology.radio_range_m = detail::get_num(r, "radio", "range_m", s.topology.radio_range_m);
  }
  if (j.contains("timing")) {
    const json& t = j["timing"];
    detail::check_keys(t, "timing",
                       {"inter_pdu_ms", "backoff_ms", "scan_interval_ms", "scan_window_ms",
                        "cache_capacity", "default_ttl", "relay_queue_depth"});
    std::tie(s.timing.inter_pdu_min, s.timing.inter_pdu_max) =
        detail::get_ms_range(t, "timing", "inter_pdu_ms", s.timing.inter_pdu_min,
                             s.timing.inter_pdu_max);
    std::tie(s.timing.backoff_min, s.timing.backoff_max) = detail::get_ms_range(
        t, "timing", "backoff_ms", s.timing.backoff_min, s.timing.backoff_max);
    s.timing.scan_interval = detail::get_ms(t, "timing", "scan_interval_ms", s.timing.scan_interval);
    s.timing.scan_window = detail::get_ms(t, "timing", "scan_window_ms", s.timing.scan_window);
    s.cache_capacity = detail::get_int(t, "timing", "cache_capacity", s.cache_capacity);
    s.default_ttl = detail::get_int(t, "timing", "default_ttl", s.default_ttl);
    s.relay_queue_depth = detail::get_int(t, "timing", "relay_queue_depth", s.relay_queue_depth);
  }
  if (j.contains("traffic")) {
    const json& t = j["traffic"];
    detail::check_keys(t, "traffic",
                       {"source", "destination", "replica_count", "replica_gap_ms",
                        "side_traffic_fraction", "side_traffic_window_ms"});
    s.traffic.source = static_cast<NodeId>(detail::get_int(t, "traffic", "source", 1, true));
    s.traffic.destination =
        static_cast<NodeId>(detail::get_int(t, "traffic", "destination", 2, true));
    s.traffic.replica_count = detail::get_int(t, "traffic", "replica_count", 0);
    s.traffic.replica_gap = detail::get_ms(t, "traffic", "replica_gap_ms", s.traffic.replica_gap);
    s.traffic.side_traffic_fraction =
        detail::get_num(t, "traffic", "side_traffic_fraction", 0.0);
    s.traffic.side_traffic_window =
        detail::get_ms(t, "traffic", "side_traffic_window_ms", s.traffic.side_traffic_window);
  }
  if (j.contains("per_mode")) {
    const json& p = j["per_mode"];
    detail::check_keys(p, "per_mode", {"mode", "per"});
    const std::string mode = p.contains("mode") ? p["mode"].get<std::string>() : "fixed";
    if (mode == "fixed") s.per_mode = PerMode::fixed(detail::get_num(p, "per_mode", "per", 0.0));
    else if (mode == "sinr_published") s.per_mode = PerMode::sinr_published();
    else if (mode == "sinr_complement") s.per_mode = PerMode::sinr_complement();
    else throw SchemaError("per_mode.mode: expected fixed, sinr_published, or sinr_complement");
  }
  if (j.contains("interference_map") && !j["interference_map"].is_null()) {
    const json& m = j["interference_map"];
    if (m.is_string()) {
      const std::filesystem::path p(m.get<std::string>());
      const auto resolved = p.is_absolute() ? p : std::filesystem::path(base_dir) / p;
      s.interference =
          std::make_shared<InterferenceMap>(load_interference_map(resolved.string()));
    } else {
      s.interference = std::make_shared<InterferenceMap>(interference_map_from_json(m));
    }
    s.interference_window = detail::get_int(j, "scenario", "interference_window", 0);
    s.wlan_interference = detail::get_bool(j, "scenario", "wlan_interference", true);
  }
  if (j.contains("plan")) {
    const json& p = j["plan"];
    detail::check_keys(p, "plan", {"seed", "replications", "horizon_ms", "warmup_ms"});
    PlanDefaults plan;
    if (p.contains("seed")) plan.seed = p["seed"].get<std::uint64_t>();
    plan.replications = detail::get_int(p, "plan", "replications", plan.replications);
    plan.horizon = detail::get_ms(p, "plan", "horizon_ms", plan.horizon);
    plan.warmup = detail::get_ms(p, "plan", "warmup_ms", plan.warmup);
    s.plan = plan;
  }
  s.validate();
  return s;
}

inline Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open scenario file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw SchemaError(path + ":" + std::to_string(detail::line_of_offset(text, e.byte)) +
                      ": JSON parse error: " + e.what());
  }
  const std::string dir = std::filesystem::path(path).parent_path().string();
  return scenario_from_json(j, dir.empty() ? "." : dir);
}

inline void save_scenario(const Scenario& s, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write scenario file: " + path);
  out << scenario_to_json(s).dump(2) << '\n';
}

/// Topology-only loader: accepts a full scenario file or a bare
/// {"nodes": [...]} document and returns just the placement data.
inline Topology load_topology(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open topology file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw SchemaError(path + ":" + std::to_string(detail::line_of_offset(text, e.byte)) +
                      ": JSON parse error: " + e.what());
  }
  if (!j.is_object()) throw SchemaError(path + ": expected a JSON object");
  const bool bare = std::all_of(j.items().begin(), j.items().end(), [](const auto& item) {
    return item.key() == "nodes" || item.key() == "radio" || item.key() == "label";
  });
  if (!bare) {
    const std::string dir = std::filesystem::path(path).parent_path().string();
    return scenario_from_json(j, dir.empty() ? "." : dir).topology;
  }
  detail::check_keys(j, "topology", {"nodes", "radio", "label"});
  if (!j.contains("nodes") || !j["nodes"].is_array())
    throw SchemaError(path + ": missing nodes[]");
  Topology t;
  std::size_t idx = 0;
  for (const auto& jn : j["nodes"]) {
    const std::string ctx = "nodes[" + std::to_string(idx) + "]";
    detail::check_keys(jn, ctx, {"id", "x_m", "y_m", "relay"});
    NodePlacement n;
    n.id = static_cast<NodeId>(detail::get_int(jn, ctx, "id", 0, true));
    n.x_m = detail::get_num(jn, ctx, "x_m", 0.0, true);
    n.y_m = detail::get_num(jn, ctx, "y_m", 0.0, true);
    n.relay = detail::get_bool(jn, ctx, "relay", true);
    t.nodes.push_back(n);
    ++idx;
  }
  if (j.contains("radio")) {
    detail::check_keys(j["radio"], "radio", {"range_m"});
    t.radio_range_m = detail::get_num(j["radio"], "radio", "range_m", t.radio_range_m);
  }
  if (j.contains("label")) t.label = j["label"].get<std::string>();
  t.validate();
  return t;
}

}  // namespace blemesh
