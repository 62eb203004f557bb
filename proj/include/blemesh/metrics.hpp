/*
 * Metric definitions and aggregation: e2e loss with binomial confidence
 * bounds, delivery delay, congestion probability, per-channel loss, and
 * per-link successful traffic intensity, plus the CSV/JSON emission used by
 * the CLI.
 */
#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "blemesh/node.hpp"
#include "blemesh/radio.hpp"
#include "blemesh/time.hpp"

namespace blemesh {

/// Fate of one potential reception. Every (transmission, in-range scanner)
/// pair lands in exactly one category.
enum class ReceiveOutcome : std::uint8_t {
  Received = 0,
  MissedChannel,      // not listening on the channel for the whole packet
  MissedBusy,         // inside its own Advertising Event
  MissedCollision,    // co-channel overlap, fixed-PER mode
  MissedSensitivity,  // below sensitivity, SINR mode
  MissedPer,          // lost to the packet-error draw
};
constexpr std::size_t kReceiveOutcomeCount = 6;

inline const char* receive_outcome_name(ReceiveOutcome o) {
  switch (o) {
    case ReceiveOutcome::Received: return "received";
    case ReceiveOutcome::MissedChannel: return "missed_channel";
    case ReceiveOutcome::MissedBusy: return "missed_busy";
    case ReceiveOutcome::MissedCollision: return "missed_collision";
    case ReceiveOutcome::MissedSensitivity: return "missed_sensitivity";
    case ReceiveOutcome::MissedPer: return "missed_per";
  }
  return "?";
}

/// Accumulators for one replication.
struct RunMetrics {
  bool traced_delivered = false;
  Micros delivery_delay = 0;  // meaningful only when delivered
  OriginKind delivered_via = OriginKind::Original;
  int hop_count = 0;
  std::array<std::uint64_t, kReceiveOutcomeCount> outcome_counts{};
  std::array<std::uint64_t, 3> channel_attempts{};   // transmissions per ADV channel
  std::array<std::uint64_t, 3> channel_potential{};  // potential receptions per channel
  std::array<std::uint64_t, 3> channel_missed{};
  std::uint64_t busy_miss_count = 0;
  std::uint64_t potential_reception_count = 0;
  std::uint64_t queue_drops = 0;
  std::uint64_t cache_discards = 0;
  bool horizon_truncated = false;

  void record_outcome(AdvChannel channel, ReceiveOutcome outcome) {
    const auto c = static_cast<std::size_t>(adv_channel_index(channel));
    potential_reception_count += 1;
    channel_potential[c] += 1;
    outcome_counts[static_cast<std::size_t>(outcome)] += 1;
    if (outcome != ReceiveOutcome::Received) channel_missed[c] += 1;
    if (outcome == ReceiveOutcome::MissedBusy) busy_miss_count += 1;
  }

  /// First successful reception at the traced destination; duplicates are
  /// ignored. Delay runs from the PDU's generation instant at the source to
  /// the completion of the reception.
  void record_delivery(const MeshPdu& pdu, Micros now, Micros gen_time, int hops) {
    if (traced_delivered) return;
    if (now < gen_time) throw std::logic_error("delivery before generation");
    traced_delivered = true;
    delivery_delay = now - gen_time;
    delivered_via = pdu.origin;
    hop_count = hops;
  }

  std::optional<double> congestion_probability() const {
    if (potential_reception_count == 0) return std::nullopt;
    return static_cast<double>(busy_miss_count) / static_cast<double>(potential_reception_count);
  }
};

struct AggregateMetrics {
  std::uint64_t replications = 0;
  std::uint64_t delivered = 0;
  double loss_rate = 0.0;
  double loss_ci_low = 0.0;
  double loss_ci_high = 0.0;
  double avg_delay_ms = 0.0;  // over delivered replications
  double max_delay_ms = 0.0;
  std::uint64_t via_original = 0;
  std::uint64_t via_replica = 0;
  double avg_hop_count = 0.0;
  std::uint64_t busy_miss_count = 0;
  std::uint64_t potential_reception_count = 0;
  std::optional<double> congestion_probability;
  std::array<std::uint64_t, kReceiveOutcomeCount> outcome_counts{};
  std::array<std::uint64_t, 3> channel_attempts{};
  std::array<std::uint64_t, 3> channel_potential{};
  std::array<std::uint64_t, 3> channel_missed{};
  std::array<double, 3> channel_loss{};  // valid where channel_potential > 0
  std::uint64_t queue_drops = 0;
  std::uint64_t cache_discards = 0;
  std::uint64_t horizon_truncated = 0;

  // Per directed link: successful receptions of traced-message copies,
  // summed over replications. Flat n*n, row = transmitter index.
  std::uint32_t node_count = 0;
  std::vector<std::uint64_t> link_success;
  std::vector<NodeId> node_ids;
  std::vector<double> node_x, node_y;

  double delivered_rate() const {
    return replications ? static_cast<double>(delivered) / static_cast<double>(replications) : 0.0;
  }
  double link_intensity(std::uint32_t i, std::uint32_t j) const {
    if (replications == 0) return 0.0;
    return static_cast<double>(link_success[static_cast<std::size_t>(i) * node_count + j]) /
           static_cast<double>(replications);
  }
};

/// 95% normal-approximation interval for a binomial proportion.
inline std::pair<double, double> binomial_ci95(double p, std::uint64_t n) {
  if (n == 0) return {0.0, 1.0};
  const double half = 1.959963984540054 * std::sqrt(p * (1.0 - p) / static_cast<double>(n));
  return {std::max(0.0, p - half), std::min(1.0, p + half)};
}

/// Order-independent reduction: all totals come from exact integer sums over
/// the per-replication records, so permuting the input changes nothing.
inline AggregateMetrics aggregate_runs(const std::vector<RunMetrics>& runs,
                                       std::vector<std::uint64_t> link_success,
                                       std::uint32_t node_count, std::vector<NodeId> node_ids,
                                       std::vector<double> node_x, std::vector<double> node_y) {
  AggregateMetrics a;
  a.replications = runs.size();
  a.node_count = node_count;
  a.link_success = std::move(link_success);
  a.node_ids = std::move(node_ids);
  a.node_x = std::move(node_x);
  a.node_y = std::move(node_y);
  if (a.link_success.empty())
    a.link_success.assign(static_cast<std::size_t>(node_count) * node_count, 0);

  std::int64_t delay_sum = 0;
  Micros delay_max = 0;
  std::int64_t hop_sum = 0;
  for (const auto& r : runs) {
    if (r.traced_delivered) {
      a.delivered += 1;
      delay_sum += r.delivery_delay;
      delay_max = std::max(delay_max, r.delivery_delay);
      hop_sum += r.hop_count;
      if (r.delivered_via == OriginKind::Replica) a.via_replica += 1;
      else a.via_original += 1;
    }
    for (std::size_t k = 0; k < kReceiveOutcomeCount; ++k) a.outcome_counts[k] += r.outcome_counts[k];
    for (std::size_t c = 0; c < 3; ++c) {
      a.channel_attempts[c] += r.channel_attempts[c];
      a.channel_potential[c] += r.channel_potential[c];
      a.channel_missed[c] += r.channel_missed[c];
    }
    a.busy_miss_count += r.busy_miss_count;
    a.potential_reception_count += r.potential_reception_count;
    a.queue_drops += r.queue_drops;
    a.cache_discards += r.cache_discards;
    if (r.horizon_truncated) a.horizon_truncated += 1;
  }
  if (a.replications > 0) {
    a.loss_rate = static_cast<double>(a.replications - a.delivered) /
                  static_cast<double>(a.replications);
    std::tie(a.loss_ci_low, a.loss_ci_high) = binomial_ci95(a.loss_rate, a.replications);
  }
  if (a.delivered > 0) {
    a.avg_delay_ms = micros_to_millis(delay_sum) / static_cast<double>(a.delivered);
    a.max_delay_ms = micros_to_millis(delay_max);
    a.avg_hop_count = static_cast<double>(hop_sum) / static_cast<double>(a.delivered);
  }
  if (a.potential_reception_count > 0)
    a.congestion_probability = static_cast<double>(a.busy_miss_count) /
                               static_cast<double>(a.potential_reception_count);
  for (std::size_t c = 0; c < 3; ++c)
    a.channel_loss[c] = a.channel_potential[c]
                            ? static_cast<double>(a.channel_missed[c]) /
                                  static_cast<double>(a.channel_potential[c])
                            : 0.0;
  return a;
}

/*
 * Emission. Doubles are printed with std::to_chars (shortest round-trip
 * form) so output bytes never depend on locale or stream state.
 */
inline std::string format_double(double v) {
  std::array<char, 64> buf;
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

struct LinkRow {
  NodeId from, to;
  double x_from, y_from, x_to, y_to;
  double intensity;
};

/// Directed links with nonzero mean successful traced traffic, transmitter-major.
inline std::vector<LinkRow> link_traffic_map(const AggregateMetrics& a) {
  std::vector<LinkRow> rows;
  for (std::uint32_t i = 0; i < a.node_count; ++i) {
    for (std::uint32_t j = 0; j < a.node_count; ++j) {
      const double intensity = a.link_intensity(i, j);
      if (intensity <= 0.0) continue;
      rows.push_back(LinkRow{a.node_ids[i], a.node_ids[j], a.node_x[i], a.node_y[i], a.node_x[j],
                             a.node_y[j], intensity});
    }
  }
  return rows;
}

inline void write_links_csv(const AggregateMetrics& a, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "from,to,x_from,y_from,x_to,y_to,intensity\n";
  for (const auto& r : link_traffic_map(a)) {
    out << r.from << ',' << r.to << ',' << format_double(r.x_from) << ',' << format_double(r.y_from)
        << ',' << format_double(r.x_to) << ',' << format_double(r.y_to) << ','
        << format_double(r.intensity) << '\n';
  }
}

inline void write_replications_csv(const std::vector<RunMetrics>& runs, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "replication,delivered,delay_us,via,hop_count,received,missed_channel,missed_busy,"
         "missed_collision,missed_sensitivity,missed_per,potential_receptions,queue_drops,"
         "cache_discards,horizon_truncated\n";
  for (std::size_t r = 0; r < runs.size(); ++r) {
    const auto& m = runs[r];
    out << r << ',' << (m.traced_delivered ? 1 : 0) << ','
        << (m.traced_delivered ? m.delivery_delay : -1) << ','
        << (m.traced_delivered ? origin_kind_name(m.delivered_via) : "-") << ','
        << (m.traced_delivered ? m.hop_count : 0);
    for (std::size_t k = 0; k < kReceiveOutcomeCount; ++k) out << ',' << m.outcome_counts[k];
    out << ',' << m.potential_reception_count << ',' << m.queue_drops << ',' << m.cache_discards
        << ',' << (m.horizon_truncated ? 1 : 0) << '\n';
  }
}

inline nlohmann::json summary_to_json(const AggregateMetrics& a) {
  nlohmann::json j;
  j["replications"] = a.replications;
  j["delivered"] = a.delivered;
  j["loss_rate"] = a.loss_rate;
  j["loss_ci_low"] = a.loss_ci_low;
  j["loss_ci_high"] = a.loss_ci_high;
  j["avg_delay_ms"] = a.avg_delay_ms;
  j["max_delay_ms"] = a.max_delay_ms;
  j["delivered_via"] = {{"original", a.via_original}, {"replica", a.via_replica}};
  j["avg_hop_count"] = a.avg_hop_count;
  if (a.congestion_probability) j["congestion_probability"] = *a.congestion_probability;
  else j["congestion_probability"] = nullptr;
  nlohmann::json outcomes;
  for (std::size_t k = 0; k < kReceiveOutcomeCount; ++k)
    outcomes[receive_outcome_name(static_cast<ReceiveOutcome>(k))] = a.outcome_counts[k];
  j["receive_outcomes"] = outcomes;
  nlohmann::json channels;
  for (AdvChannel ch : kAdvChannels) {
    const auto c = static_cast<std::size_t>(adv_channel_index(ch));
    nlohmann::json jc;
    jc["attempts"] = a.channel_attempts[c];
    jc["potential_receptions"] = a.channel_potential[c];
    jc["missed"] = a.channel_missed[c];
    jc["loss"] = a.channel_loss[c];
    channels[std::to_string(adv_channel_number(ch))] = jc;
  }
  j["per_channel"] = channels;
  j["queue_drops"] = a.queue_drops;
  j["cache_discards"] = a.cache_discards;
  j["horizon_truncated"] = a.horizon_truncated;
  return j;
}

}  // namespace blemesh
