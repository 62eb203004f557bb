/*
 * Per-device protocol machinery: network PDU, timing parameters, the
 * scanning timetable, Advertising Event construction, the message cache,
 * and the managed-flooding relay decision.
 *
 * Nothing here owns simulated time; the engine drives these pieces and owns
 * every random draw.
 */
#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

#include "blemesh/radio.hpp"
#include "blemesh/rng.hpp"
#include "blemesh/time.hpp"

namespace blemesh {

using NodeId = std::uint32_t;

enum class OriginKind : std::uint8_t { Original = 0, Replica = 1, SideTraffic = 2 };

inline const char* origin_kind_name(OriginKind k) {
  switch (k) {
    case OriginKind::Original: return "original";
    case OriginKind::Replica: return "replica";
    case OriginKind::SideTraffic: return "side_traffic";
  }
  return "?";
}

/// Broadcast network PDU. An Original and its Replica carry the same
/// (source, sequence) pair and differ only in origin kind, which is how
/// receivers deduplicate the pair while the source bypasses its own cache.
struct MeshPdu {
  NodeId source = 0;
  std::uint32_t sequence = 0;
  int ttl = 0;
  int payload_octets = 39;
  OriginKind origin = OriginKind::Original;

  std::uint64_t message_key() const {
    return (static_cast<std::uint64_t>(source) << 32) | sequence;
  }
  int bits() const { return payload_octets * 8; }

  void validate() const {
    if (payload_octets <= 0 || payload_octets > 39)
      throw std::invalid_argument("pdu: payload_octets must be in (0, 39]");
    if (ttl < 0) throw std::invalid_argument("pdu: ttl must be >= 0");
  }
};

struct TimingConfig {
  Micros inter_pdu_min = 3 * kMicrosPerMilli;
  Micros inter_pdu_max = 5 * kMicrosPerMilli;
  Micros backoff_min = 0;
  Micros backoff_max = 20 * kMicrosPerMilli;
  Micros scan_interval = 100 * kMicrosPerMilli;
  Micros scan_window = 100 * kMicrosPerMilli;
  int replica_count = 0;
  Micros replica_gap = 30 * kMicrosPerMilli;

  void validate() const {
    if (inter_pdu_min < 0 || inter_pdu_min > inter_pdu_max || inter_pdu_max > 10 * kMicrosPerMilli)
      throw std::invalid_argument("timing: inter_pdu range must satisfy 0 <= min <= max <= 10 ms");
    if (backoff_min < 0 || backoff_min > backoff_max)
      throw std::invalid_argument("timing: backoff range must satisfy 0 <= min <= max");
    if (scan_window <= 0 || scan_window > scan_interval)
      throw std::invalid_argument("timing: scan_window must be in (0, scan_interval]");
    if (scan_interval > static_cast<Micros>(10.24 * 1e6))
      throw std::invalid_argument("timing: scan_interval must be <= 10.24 s");
    if (replica_count < 0) throw std::invalid_argument("timing: replica_count must be >= 0");
    if (replica_gap < 0) throw std::invalid_argument("timing: replica_gap must be >= 0");
  }

  bool continuous_scanning() const { return scan_window == scan_interval; }
};

struct NodeConfig {
  NodeId id = 0;
  double x_m = 0.0;
  double y_m = 0.0;
  bool is_relay = true;
  TimingConfig timing;
  int cache_capacity = 255;
  int default_ttl = 64;
  int relay_queue_depth = 1;

  void validate() const {
    timing.validate();
    if (cache_capacity < 1) throw std::invalid_argument("node: cache_capacity must be >= 1");
    if (default_ttl < 1) throw std::invalid_argument("node: default_ttl must be >= 1");
    if (relay_queue_depth < 1) throw std::invalid_argument("node: relay_queue_depth must be >= 1");
  }
};

/*
 * Scanning timetable. Scanning Events start every scan_interval; event k
 * listens on the k-th cyclic successor of the start channel for scan_window,
 * then the radio is off-channel until the next event. The schedule extends
 * indefinitely in both directions (the device has been scanning since before
 * the measurement; `phase` only sets the alignment), and it is a pure
 * function of time, so the engine never schedules scan-boundary bookkeeping.
 */

inline std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if (a % b != 0 && (a < 0) != (b < 0)) --q;
  return q;
}

/// Channel being scanned at instant t, or nullopt inside an off-channel gap.
inline std::optional<AdvChannel> scan_channel_at(const TimingConfig& cfg, AdvChannel start_channel,
                                                 Micros t, Micros phase = 0) {
  const std::int64_t k = floor_div(t - phase, cfg.scan_interval);
  const Micros into_event = t - phase - k * cfg.scan_interval;
  if (into_event >= cfg.scan_window) return std::nullopt;
  return adv_channel_after(start_channel, k);
}

/// True when the node is listening on `channel` for the whole span [s, e].
/// A window closing exactly at e still counts: the packet has fully arrived
/// by the time the scanner moves on (TxEnd orders before ScanBoundary).
inline bool scanning_whole_span(const TimingConfig& cfg, AdvChannel start_channel, Micros phase,
                                Micros s, Micros e, AdvChannel channel) {
  const std::int64_t k = floor_div(s - phase, cfg.scan_interval);
  const Micros window_start = phase + k * cfg.scan_interval;
  if (e > window_start + cfg.scan_window) return false;
  return adv_channel_after(start_channel, k) == channel;
}

/*
 * Advertising Event: the same PDU is broadcast once per channel, on 37, 38,
 * 39 in that fixed order, with an independent inter-PDU gap drawn per pair.
 */
struct AdvTransmission {
  AdvChannel channel;
  Micros start;
};

struct AdvertisingEvent {
  std::array<AdvTransmission, 3> tx;
  Micros end;  // completion of the third transmission
};

inline AdvertisingEvent build_advertising_event(const TimingConfig& cfg, Micros start,
                                                Micros airtime, RandomStream& rng) {
  if (start < 0) throw std::invalid_argument("advertising event: start must be >= 0");
  const Micros g1 = rng.uniform_int(cfg.inter_pdu_min, cfg.inter_pdu_max);
  const Micros g2 = rng.uniform_int(cfg.inter_pdu_min, cfg.inter_pdu_max);
  AdvertisingEvent ev;
  ev.tx[0] = {AdvChannel::Ch37, start};
  ev.tx[1] = {AdvChannel::Ch38, ev.tx[0].start + airtime + g1};
  ev.tx[2] = {AdvChannel::Ch39, ev.tx[1].start + airtime + g2};
  ev.end = ev.tx[2].start + airtime;
  return ev;
}

/// Bounded set of recently seen (source, sequence) keys, oldest-first
/// eviction. A hit means the message was processed before.
class MessageCache {
 public:
  explicit MessageCache(std::size_t capacity = 255) : capacity_(capacity) {
    if (capacity_ < 1) throw std::invalid_argument("cache: capacity must be >= 1");
  }

  bool contains(std::uint64_t key) const { return lookup_.count(key) != 0; }

  void insert(std::uint64_t key) {
    if (lookup_.count(key)) return;
    if (order_.size() == capacity_) {
      lookup_.erase(order_.front());
      order_.pop_front();
    }
    order_.push_back(key);
    lookup_.insert(key);
  }

  std::size_t size() const { return order_.size(); }
  std::size_t capacity() const { return capacity_; }

 private:
  std::size_t capacity_;
  std::deque<std::uint64_t> order_;
  std::unordered_set<std::uint64_t> lookup_;
};

/*
 * Managed-flooding relay decision, applied to every successfully demodulated
 * PDU. Cache hits are dropped outright; a cache miss is accepted (and
 * delivered when this node is the destination) and, at a relay with hop
 * budget left and queue room, scheduled for rebroadcast after a random
 * back-off.
 */
enum class RelayAction : std::uint8_t { DiscardCached, DiscardTtl, Accept, AcceptAndRelay };

struct RelayDecision {
  RelayAction action = RelayAction::Accept;
  bool deliver = false;
  Micros backoff_until = 0;   // valid for AcceptAndRelay
  MeshPdu relay_pdu;          // valid for AcceptAndRelay (ttl already decremented)
  bool queue_drop = false;    // relay wanted but the queue was full
};

struct NodeRuntime {
  MessageCache cache;
  int relayed_pending = 0;  // relay entries currently queued or backing off

  explicit NodeRuntime(std::size_t cache_capacity = 255) : cache(cache_capacity) {}
};

inline RelayDecision on_receive(NodeRuntime& rt, const NodeConfig& cfg, const MeshPdu& pdu,
                                bool is_destination, Micros now, RandomStream& rng) {
  RelayDecision d;
  if (pdu.ttl == 0) {
    d.action = RelayAction::DiscardTtl;
    return d;
  }
  if (rt.cache.contains(pdu.message_key())) {
    d.action = RelayAction::DiscardCached;
    return d;
  }
  rt.cache.insert(pdu.message_key());
  d.deliver = is_destination;
  if (cfg.is_relay && pdu.ttl > 1) {
    if (rt.relayed_pending < cfg.relay_queue_depth) {
      d.action = RelayAction::AcceptAndRelay;
      d.backoff_until = now + rng.uniform_int(cfg.timing.backoff_min, cfg.timing.backoff_max);
      d.relay_pdu = pdu;
      d.relay_pdu.ttl = pdu.ttl - 1;
      rt.relayed_pending += 1;
    } else {
      d.action = RelayAction::Accept;
      d.queue_drop = true;
    }
  } else {
    d.action = RelayAction::Accept;
  }
  return d;
}

/// Start instants of the source's own Advertising Events for one message:
/// the original plus replica_count replicas spaced replica_gap apart. Each
/// start still receives its own back-off draw in the engine.
inline std::vector<Micros> schedule_source_transmissions(const NodeConfig& cfg, Micros gen_time) {
  std::vector<Micros> starts;
  starts.reserve(static_cast<std::size_t>(cfg.timing.replica_count) + 1);
  for (int k = 0; k <= cfg.timing.replica_count; ++k)
    starts.push_back(gen_time + static_cast<Micros>(k) * cfg.timing.replica_gap);
  return starts;
}

}  // namespace blemesh
