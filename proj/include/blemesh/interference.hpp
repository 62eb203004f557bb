/*
 * External interference maps.
 *
 * Interference observations are recorded on the IEEE 802.15.4 channel grid
 * by a WSN deployment and have to be remapped before a BLE receiver can use
 * them: a surjective channel mapping picks the 802.15.4 channel overlapping
 * each BLE channel, and a bandwidth-ratio correction accounts for the
 * narrower BLE channel filter. Spatial continuity comes from interpolating
 * the per-window observations in the linear power domain.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "blemesh/radio.hpp"
#include "blemesh/time.hpp"

namespace blemesh {

/// Ratio between BLE and IEEE 802.15.4 channel-filter bandwidths, in dB.
/// Applied as an attenuation: the narrower BLE filter collects less of a
/// wide-band WLAN burst than the radio that recorded it.
constexpr double kDefaultBandwidthRatioDb = -6.02;

/// 802.15.4 channel k (11..26) sits at 2405 + 5 (k - 11) MHz.
inline double ieee802154_center_mhz(int channel) { return 2405.0 + 5.0 * (channel - 11); }

/// The 802.15.4 channel whose center is nearest the BLE channel's center;
/// ties resolve toward the lower channel number.
inline int map_channel(AdvChannel ble_channel) {
  const double f = center_frequency_mhz(ble_channel);
  int best = 11;
  double best_dist = std::abs(ieee802154_center_mhz(11) - f);
  for (int ch = 12; ch <= 26; ++ch) {
    const double dist = std::abs(ieee802154_center_mhz(ch) - f);
    if (dist < best_dist) {
      best = ch;
      best_dist = dist;
    }
  }
  return best;
}

/// Pure dB shift from recorded to BLE-equivalent power.
inline double adapt_power(double p_recorded_dbm, double bandwidth_ratio_db) {
  return p_recorded_dbm + bandwidth_ratio_db;
}

struct RawInterferenceRecord {
  double window_start_s = 0.0;
  double window_end_s = 0.0;
  int channel_154 = 11;
  double x_m = 0.0;
  double y_m = 0.0;
  double power_dbm = 0.0;

  void validate() const {
    if (channel_154 < 11 || channel_154 > 26)
      throw std::invalid_argument("interference record: channel must be in 11..26");
    if (!(window_end_s > window_start_s))
      throw std::invalid_argument("interference record: window must be non-degenerate");
    if (!std::isfinite(x_m) || !std::isfinite(y_m) || !std::isfinite(power_dbm))
      throw std::invalid_argument("interference record: non-finite field");
  }
};

struct TimeWindow {
  double start_s = 0.0;
  double end_s = 0.0;
  double duty_cycle = 1.0;  // probability the interferer is active during a packet
};

enum class Interpolation : std::uint8_t { InverseDistanceWeighting, NearestObserver };

struct MissingInterferenceData : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InterferenceHotspot {
  double x_m = 0.0;
  double y_m = 0.0;
  double peak_dbm = -30.0;
  double decay_db_per_m = 1.0;
  int channel_154 = 11;
};

/*
 * Time/frequency/space interference field. Each (window, BLE channel) cell
 * is either a set of interpolated samples (built from recorded data) or an
 * analytic hotspot sum (synthetic fixtures). Queries return linear mW; a
 * cell with no data reports zero interference.
 */
class InterferenceMap {
 public:
  struct Sample {
    double x_m;
    double y_m;
    double power_mw;  // bandwidth-adapted, linear
  };

  InterferenceMap() = default;

  static InterferenceMap from_records(const std::vector<RawInterferenceRecord>& records,
                                      std::vector<TimeWindow> windows,
                                      Interpolation interpolation = Interpolation::InverseDistanceWeighting,
                                      double idw_exponent = 2.0,
                                      double bandwidth_ratio_db = kDefaultBandwidthRatioDb) {
    InterferenceMap map;
    map.bandwidth_ratio_db_ = bandwidth_ratio_db;
    map.interpolation_ = interpolation;
    map.idw_exponent_ = idw_exponent;
    if (windows.empty()) {
      // Derive windows from the distinct (start, end) pairs seen in the data.
      for (const auto& r : records) {
        const bool seen = std::any_of(windows.begin(), windows.end(), [&](const TimeWindow& w) {
          return w.start_s == r.window_start_s && w.end_s == r.window_end_s;
        });
        if (!seen) windows.push_back(TimeWindow{r.window_start_s, r.window_end_s, 1.0});
      }
      std::sort(windows.begin(), windows.end(),
                [](const TimeWindow& a, const TimeWindow& b) { return a.start_s < b.start_s; });
    }
    map.windows_ = std::move(windows);
    map.samples_.assign(map.windows_.size(), {});
    for (const auto& r : records) {
      r.validate();
      const auto w = map.window_of(r.window_start_s, r.window_end_s);
      if (!w) throw std::invalid_argument("interference record outside every declared window");
      for (AdvChannel ch : kAdvChannels) {
        if (map_channel(ch) != r.channel_154) continue;
        const double adapted = adapt_power(r.power_dbm, bandwidth_ratio_db);
        map.samples_[*w][static_cast<std::size_t>(adv_channel_index(ch))].push_back(
            Sample{r.x_m, r.y_m, dbm_to_mw(adapted)});
      }
    }
    return map;
  }

  /// Rebuilds a sampled map from already-adapted sample points (the
  /// serialized form stores linear mW after bandwidth adaptation).
  static InterferenceMap from_adapted_samples(
      std::vector<TimeWindow> windows, Interpolation interpolation, double idw_exponent,
      double bandwidth_ratio_db,
      const std::vector<std::tuple<std::size_t, AdvChannel, Sample>>& points) {
    InterferenceMap map;
    map.bandwidth_ratio_db_ = bandwidth_ratio_db;
    map.interpolation_ = interpolation;
    map.idw_exponent_ = idw_exponent;
    map.windows_ = std::move(windows);
    map.samples_.assign(map.windows_.size(), {});
    for (const auto& [w, ch, sample] : points) {
      if (w >= map.windows_.size())
        throw std::out_of_range("interference sample references an unknown window");
      map.samples_[w][static_cast<std::size_t>(adv_channel_index(ch))].push_back(sample);
    }
    return map;
  }

  static InterferenceMap synthetic(const std::vector<InterferenceHotspot>& hotspots,
                                   std::vector<TimeWindow> windows,
                                   std::vector<double> window_offsets_db = {},
                                   double bandwidth_ratio_db = kDefaultBandwidthRatioDb) {
    if (windows.empty()) windows.push_back(TimeWindow{0.0, std::numeric_limits<double>::max(), 1.0});
    if (window_offsets_db.empty()) window_offsets_db.assign(windows.size(), 0.0);
    if (window_offsets_db.size() != windows.size())
      throw std::invalid_argument("synthetic map: one offset per window required");
    InterferenceMap map;
    map.bandwidth_ratio_db_ = bandwidth_ratio_db;
    map.windows_ = std::move(windows);
    map.hotspots_ = hotspots;
    map.window_offsets_db_ = std::move(window_offsets_db);
    map.analytic_ = true;
    return map;
  }

  /// Require at least one sample for each listed (window, BLE channel) cell.
  void require(const std::vector<std::pair<std::size_t, AdvChannel>>& cells) const {
    if (analytic_) return;
    std::string missing;
    for (const auto& [w, ch] : cells) {
      if (w >= windows_.size() ||
          samples_[w][static_cast<std::size_t>(adv_channel_index(ch))].empty()) {
        missing += " (window " + std::to_string(w) + ", channel " +
                   std::to_string(adv_channel_number(ch)) + " -> 802.15.4 ch " +
                   std::to_string(map_channel(ch)) + ")";
      }
    }
    if (!missing.empty())
      throw MissingInterferenceData("interference map has no data for:" + missing);
  }

  std::size_t window_count() const { return windows_.size(); }
  const std::vector<TimeWindow>& windows() const { return windows_; }
  double bandwidth_ratio_db() const { return bandwidth_ratio_db_; }
  Interpolation interpolation() const { return interpolation_; }
  double idw_exponent() const { return idw_exponent_; }
  bool analytic() const { return analytic_; }
  const std::vector<InterferenceHotspot>& hotspots() const { return hotspots_; }
  const std::vector<double>& window_offsets_db() const { return window_offsets_db_; }
  const std::vector<Sample>& samples(std::size_t window, AdvChannel ch) const {
    return samples_.at(window)[static_cast<std::size_t>(adv_channel_index(ch))];
  }

  /// Interference power in mW at wall-clock time t. Throws when t falls in
  /// no window: experiments must pin a window explicitly.
  double query(double t_s, AdvChannel channel, double x_m, double y_m) const {
    for (std::size_t w = 0; w < windows_.size(); ++w) {
      if (t_s >= windows_[w].start_s && t_s < windows_[w].end_s)
        return query_window(w, channel, x_m, y_m);
    }
    throw std::out_of_range("interference query outside every map window");
  }

  double query_window(std::size_t window, AdvChannel channel, double x_m, double y_m) const {
    if (window >= windows_.size()) throw std::out_of_range("interference window index");
    if (analytic_) return analytic_power_mw(window, channel, x_m, y_m);
    const auto& pts = samples_[window][static_cast<std::size_t>(adv_channel_index(channel))];
    if (pts.empty()) return 0.0;
    if (interpolation_ == Interpolation::NearestObserver) {
      const Sample* best = &pts.front();
      double best_d2 = sq_dist(*best, x_m, y_m);
      for (const auto& s : pts) {
        const double d2 = sq_dist(s, x_m, y_m);
        if (d2 < best_d2) {
          best = &s;
          best_d2 = d2;
        }
      }
      return best->power_mw;
    }
    // IDW in linear power; exact at sample positions.
    double num = 0.0, den = 0.0;
    for (const auto& s : pts) {
      const double d2 = sq_dist(s, x_m, y_m);
      if (d2 == 0.0) return s.power_mw;
      const double w = std::pow(d2, -idw_exponent_ / 2.0);
      num += w * s.power_mw;
      den += w;
    }
    return num / den;
  }

  double duty_cycle(std::size_t window) const { return windows_.at(window).duty_cycle; }

 private:
  static double sq_dist(const Sample& s, double x, double y) {
    const double dx = s.x_m - x, dy = s.y_m - y;
    return dx * dx + dy * dy;
  }

  std::optional<std::size_t> window_of(double start_s, double end_s) const {
    for (std::size_t w = 0; w < windows_.size(); ++w)
      if (windows_[w].start_s == start_s && windows_[w].end_s == end_s) return w;
    return std::nullopt;
  }

  double analytic_power_mw(std::size_t window, AdvChannel channel, double x, double y) const {
    const int mapped = map_channel(channel);
    double total = 0.0;
    for (const auto& h : hotspots_) {
      if (h.channel_154 != mapped) continue;
      const double d = std::hypot(x - h.x_m, y - h.y_m);
      const double dbm = h.peak_dbm - h.decay_db_per_m * d + window_offsets_db_[window];
      total += dbm_to_mw(dbm);
    }
    return total;
  }

  std::vector<TimeWindow> windows_;
  double bandwidth_ratio_db_ = kDefaultBandwidthRatioDb;
  Interpolation interpolation_ = Interpolation::InverseDistanceWeighting;
  double idw_exponent_ = 2.0;
  // sampled backend: per window, per ADV channel
  std::vector<std::array<std::vector<Sample>, 3>> samples_;
  // analytic backend
  bool analytic_ = false;
  std::vector<InterferenceHotspot> hotspots_;
  std::vector<double> window_offsets_db_;
};

/*
 * Raw record file: delimited text, one record per line,
 *   window_start_s,window_end_s,channel_154,x_m,y_m,power_dbm
 * with a mandatory header line naming exactly those columns.
 */
inline std::vector<RawInterferenceRecord> parse_interference_records(std::istream& in,
                                                                     const std::string& source_name) {
  std::vector<RawInterferenceRecord> records;
  std::string line;
  int line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (!header_seen) {
      std::string squashed;
      for (char c : line)
        if (!std::isspace(static_cast<unsigned char>(c))) squashed += c;
      if (squashed != "window_start_s,window_end_s,channel_154,x_m,y_m,power_dbm")
        throw std::invalid_argument(source_name + ":" + std::to_string(line_no) +
                                    ": expected header "
                                    "window_start_s,window_end_s,channel_154,x_m,y_m,power_dbm");
      header_seen = true;
      continue;
    }
    std::istringstream fields(line);
    std::string tok;
    std::vector<std::string> cols;
    while (std::getline(fields, tok, ',')) cols.push_back(tok);
    if (cols.size() != 6)
      throw std::invalid_argument(source_name + ":" + std::to_string(line_no) +
                                  ": expected 6 comma-separated fields");
    RawInterferenceRecord r;
    try {
      r.window_start_s = std::stod(cols[0]);
      r.window_end_s = std::stod(cols[1]);
      r.channel_154 = std::stoi(cols[2]);
      r.x_m = std::stod(cols[3]);
      r.y_m = std::stod(cols[4]);
      r.power_dbm = std::stod(cols[5]);
    } catch (const std::exception&) {
      throw std::invalid_argument(source_name + ":" + std::to_string(line_no) +
                                  ": malformed numeric field");
    }
    try {
      r.validate();
    } catch (const std::exception& e) {
      throw std::invalid_argument(source_name + ":" + std::to_string(line_no) + ": " + e.what());
    }
    records.push_back(r);
  }
  if (!header_seen)
    throw std::invalid_argument(source_name + ": empty file (header line required)");
  return records;
}

inline std::vector<RawInterferenceRecord> load_interference_records(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open interference record file: " + path);
  return parse_interference_records(in, path);
}

}  // namespace blemesh
