/*
 * Discrete-event engine: advances integer-microsecond time, arbitrates which
 * scanners successfully receive each transmission (busy / channel /
 * collision / sensitivity / PER gates), and drives seeded replications.
 *
 * Determinism contract: (scenario, seed) fully determines every output byte.
 * Each replication draws from substreams keyed by (replication, purpose,
 * node), events tie-break on (kind, node, sequence), and aggregation uses
 * exact integer sums, so results do not depend on the worker count.
 */
#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <limits>
#include <memory>
#include <stdexcept>
#include <thread>
#include <unordered_map>
#include <vector>

#include "blemesh/metrics.hpp"
#include "blemesh/node.hpp"
#include "blemesh/radio.hpp"
#include "blemesh/rng.hpp"
#include "blemesh/scenario.hpp"
#include "blemesh/time.hpp"

namespace blemesh {

struct ReplicationPlan {
  std::uint64_t seed = 1;
  int replications = 10000;
  Micros warmup = 0;
  Micros horizon = 10 * kMicrosPerSecond;
  int workers = 1;

  void validate() const {
    if (replications < 1) throw std::invalid_argument("plan: replications must be >= 1");
    if (warmup < 0 || horizon <= warmup)
      throw std::invalid_argument("plan: need 0 <= warmup < horizon");
    if (workers < 1) throw std::invalid_argument("plan: workers must be >= 1");
  }

  static ReplicationPlan from_defaults(const PlanDefaults& d) {
    ReplicationPlan p;
    p.seed = d.seed;
    p.replications = d.replications;
    p.warmup = d.warmup;
    p.horizon = d.horizon;
    return p;
  }
};

/// Event kinds in tie-break order at equal timestamps. A transmission must
/// complete before a scanner rotates, a freed node starts its next event
/// before a new back-off matures into a transmission, and generations come
/// last.
enum class EventKind : std::uint8_t {
  TxEnd = 0,
  ScanBoundary = 1,  // scanning is evaluated analytically; kind kept for the ordering contract
  BackoffExpiry = 2,
  TxStart = 3,
  PduGeneration = 4,
  MeasurementEnd = 5,
};

struct SimEvent {
  Micros at;
  EventKind kind;
  std::uint32_t node;
  std::uint32_t pdu;       // pool index, where applicable
  std::uint32_t tx_index;  // 0..2 within an Advertising Event
  std::uint64_t seq;       // schedule order, final tie-break

  bool operator<(const SimEvent& o) const {
    if (at != o.at) return at < o.at;
    if (kind != o.kind) return kind < o.kind;
    if (node != o.node) return node < o.node;
    return seq < o.seq;
  }
};

struct InFlightTx {
  Micros start;
  Micros end;
  std::uint32_t node;
  std::uint32_t pdu;
};

/// Scenario lowered to dense indices with all per-pair geometry precomputed.
struct CompiledScenario {
  Scenario scenario;
  int n = 0;
  std::vector<NodeConfig> node_cfg;
  std::vector<NodeId> ids;
  std::vector<double> x, y;
  int source_idx = -1, dest_idx = -1;
  Micros airtime = 0;
  bool sinr_mode = false;

  // fixed-PER connectivity
  std::vector<std::vector<std::uint16_t>> adjacency;  // sorted receiver indices
  std::vector<std::uint8_t> in_range;                 // n*n lookup

  // SINR precomputation: rx_dbm(i->j, ch) = ref_gain_db[ch] - pair_loss_db[i*n+j] - shadowing
  std::array<double, 3> ref_gain_db{};
  std::vector<double> pair_loss_db;
  double noise_mw = 0.0;
  std::vector<std::array<double, 3>> wlan_mw;  // per node, per channel; zeros when off
  double duty_cycle = 1.0;

  bool pair_in_range(int i, int j) const {
    return in_range[static_cast<std::size_t>(i) * n + j] != 0;
  }
};

inline CompiledScenario compile_scenario(const Scenario& s) {
  s.validate();
  CompiledScenario cs;
  cs.scenario = s;
  cs.n = static_cast<int>(s.topology.nodes.size());
  cs.sinr_mode = s.per_mode.uses_sinr();
  cs.airtime = airtime_micros(s.radio.pdu_bits, s.radio.bit_rate_bps);
  std::unordered_map<NodeId, int> to_idx;
  for (int i = 0; i < cs.n; ++i) {
    const auto& p = s.topology.nodes[static_cast<std::size_t>(i)];
    cs.node_cfg.push_back(s.node_config(p));
    cs.ids.push_back(p.id);
    cs.x.push_back(p.x_m);
    cs.y.push_back(p.y_m);
    to_idx[p.id] = i;
  }
  cs.source_idx = to_idx.at(s.traffic.source);
  cs.dest_idx = to_idx.at(s.traffic.destination);
  // The traced source inherits the replica schedule.
  cs.node_cfg[static_cast<std::size_t>(cs.source_idx)].timing.replica_count =
      s.traffic.replica_count;
  cs.node_cfg[static_cast<std::size_t>(cs.source_idx)].timing.replica_gap = s.traffic.replica_gap;

  cs.adjacency.assign(static_cast<std::size_t>(cs.n), {});
  cs.in_range.assign(static_cast<std::size_t>(cs.n) * cs.n, 0);
  cs.pair_loss_db.assign(static_cast<std::size_t>(cs.n) * cs.n, 0.0);
  const double d0 = s.radio.reference_distance_m;
  for (int i = 0; i < cs.n; ++i) {
    for (int j = 0; j < cs.n; ++j) {
      if (i == j) continue;
      const double dist = std::hypot(cs.x[i] - cs.x[j], cs.y[i] - cs.y[j]);
      if (dist <= s.topology.radio_range_m) {
        cs.in_range[static_cast<std::size_t>(i) * cs.n + j] = 1;
        cs.adjacency[static_cast<std::size_t>(i)].push_back(static_cast<std::uint16_t>(j));
      }
      // Path loss is undefined below the reference distance; clamp there.
      const double d = std::max(dist, d0);
      cs.pair_loss_db[static_cast<std::size_t>(i) * cs.n + j] =
          10.0 * s.radio.path_loss_exponent * std::log10(d / d0);
    }
  }
  for (AdvChannel ch : kAdvChannels) {
    constexpr double kSpeedOfLight = 299792458.0;
    const double lambda = kSpeedOfLight / (center_frequency_mhz(ch) * 1e6);
    cs.ref_gain_db[static_cast<std::size_t>(adv_channel_index(ch))] =
        s.radio.tx_power_dbm + 20.0 * std::log10(lambda / (4.0 * 3.14159265358979323846 * d0));
  }
  cs.noise_mw = dbm_to_mw(s.radio.noise_floor_dbm);
  cs.wlan_mw.assign(static_cast<std::size_t>(cs.n), {0.0, 0.0, 0.0});
  if (cs.sinr_mode && s.interference && s.wlan_interference) {
    const auto w = static_cast<std::size_t>(s.interference_window);
    std::vector<std::pair<std::size_t, AdvChannel>> required;
    for (AdvChannel ch : kAdvChannels) required.emplace_back(w, ch);
    s.interference->require(required);
    cs.duty_cycle = s.interference->duty_cycle(w);
    for (int i = 0; i < cs.n; ++i)
      for (AdvChannel ch : kAdvChannels)
        cs.wlan_mw[static_cast<std::size_t>(i)][static_cast<std::size_t>(adv_channel_index(ch))] =
            s.interference->query_window(w, ch, cs.x[i], cs.y[i]);
  }
  return cs;
}

/*
 * One replication. The runner is reusable: run() resets all state, so a
 * worker thread can execute many replications without reallocating.
 */
class ReplicationRunner {
 public:
  explicit ReplicationRunner(const CompiledScenario& cs) : cs_(cs) {
    const auto n = static_cast<std::size_t>(cs_.n);
    scan_phase_.resize(n);
    scan_ch0_.resize(n);
    adv_cur_s_.resize(n);
    adv_cur_e_.resize(n);
    adv_prev_s_.resize(n);
    adv_prev_e_.resize(n);
    active_own_.resize(n);
    pending_.resize(n);
    node_rng_.resize(n);
    rx_rng_.resize(n);
    for (std::size_t i = 0; i < n; ++i)
      runtime_.emplace_back(static_cast<std::size_t>(cs_.node_cfg[i].cache_capacity));
  }

  /// Executes replication `rep` and returns its metrics. `link_success`,
  /// when given, accumulates per-directed-link successful traced receptions
  /// (flat n*n).
  RunMetrics run(std::uint64_t experiment_seed, int rep, Micros warmup, Micros horizon,
                 std::vector<std::uint64_t>* link_success = nullptr) {
    reset();
    links_ = link_success;
    const std::uint64_t rep_seed = derive_seed(experiment_seed, static_cast<std::uint64_t>(rep));
    RandomStream setup(derive_seed(rep_seed, tag(kPurposeSetup, 0)));
    for (int i = 0; i < cs_.n; ++i) {
      node_rng_[static_cast<std::size_t>(i)] =
          RandomStream(derive_seed(rep_seed, tag(kPurposeNode, i)));
      rx_rng_[static_cast<std::size_t>(i)] =
          RandomStream(derive_seed(rep_seed, tag(kPurposeRx, i)));
    }
    // Scanner phases and initial channels; every node draws in index order.
    for (int i = 0; i < cs_.n; ++i) {
      const auto& t = cs_.node_cfg[static_cast<std::size_t>(i)].timing;
      scan_phase_[static_cast<std::size_t>(i)] = setup.uniform_int(0, t.scan_interval - 1);
      scan_ch0_[static_cast<std::size_t>(i)] =
          kAdvChannels[static_cast<std::size_t>(setup.uniform_int(0, 2))];
    }

    // Traced message: one Original plus the configured replicas, all sharing
    // (source, sequence). Each series start is its own generation event.
    gen_time_ = warmup;
    const auto& src_cfg = cs_.node_cfg[static_cast<std::size_t>(cs_.source_idx)];
    MeshPdu traced;
    traced.source = cs_.ids[static_cast<std::size_t>(cs_.source_idx)];
    traced.sequence = 1;
    traced.ttl = src_cfg.default_ttl;
    traced.payload_octets = (cs_.scenario.radio.pdu_bits + 7) / 8;
    traced_key_ = traced.message_key();
    initial_ttl_ = traced.ttl;
    const auto starts = schedule_source_transmissions(src_cfg, gen_time_);
    for (std::size_t k = 0; k < starts.size(); ++k) {
      MeshPdu copy = traced;
      copy.origin = k == 0 ? OriginKind::Original : OriginKind::Replica;
      const auto idx = add_pdu(copy, 0);
      schedule(starts[k], EventKind::PduGeneration, static_cast<std::uint32_t>(cs_.source_idx),
               idx, 0);
    }

    // Side traffic: round(f * eligible) devices, selected without
    // replacement, each originating one PDU inside the configured window.
    if (cs_.scenario.traffic.side_traffic_fraction > 0) {
      std::vector<int> eligible;
      for (int i = 0; i < cs_.n; ++i)
        if (i != cs_.source_idx && i != cs_.dest_idx) eligible.push_back(i);
      const auto want = static_cast<std::size_t>(std::llround(
          cs_.scenario.traffic.side_traffic_fraction * static_cast<double>(eligible.size())));
      for (std::size_t k = 0; k < want && !eligible.empty(); ++k) {
        const auto pick = static_cast<std::size_t>(
            setup.uniform_int(0, static_cast<std::int64_t>(eligible.size()) - 1));
        const int node = eligible[pick];
        eligible.erase(eligible.begin() + static_cast<std::ptrdiff_t>(pick));
        const Micros at = warmup + setup.uniform_int(0, cs_.scenario.traffic.side_traffic_window);
        MeshPdu side;
        side.source = cs_.ids[static_cast<std::size_t>(node)];
        side.sequence = 1;
        side.ttl = cs_.node_cfg[static_cast<std::size_t>(node)].default_ttl;
        side.payload_octets = (cs_.scenario.radio.pdu_bits + 7) / 8;
        side.origin = OriginKind::SideTraffic;
        const auto idx = add_pdu(side, 0);
        schedule(at, EventKind::PduGeneration, static_cast<std::uint32_t>(node), idx, 0);
      }
    }

    schedule(horizon, EventKind::MeasurementEnd, 0, 0, 0);
    event_loop();
    return metrics_;
  }

  const CompiledScenario& compiled() const { return cs_; }

 private:
  static constexpr std::uint64_t kPurposeSetup = 1;
  static constexpr std::uint64_t kPurposeNode = 2;
  static constexpr std::uint64_t kPurposeRx = 3;

  struct PduInstance {
    MeshPdu pdu;
    std::uint16_t hops;  // hops traveled before this transmission series
  };

  struct PendingTx {
    std::uint32_t pdu;
    Micros ready_at;
    bool own;  // originated here (never counted against the relay queue)
  };

  static std::uint64_t tag(std::uint64_t purpose, int node) {
    return (purpose << 32) | static_cast<std::uint32_t>(node);
  }

  void reset() {
    metrics_ = RunMetrics{};
    heap_.clear();
    event_seq_ = 0;
    pool_.clear();
    for (auto& h : history_) h.clear();
    for (std::size_t i = 0; i < static_cast<std::size_t>(cs_.n); ++i) {
      adv_cur_s_[i] = adv_cur_e_[i] = adv_prev_s_[i] = adv_prev_e_[i] =
          std::numeric_limits<Micros>::min();
      active_own_[i] = false;
      pending_[i].clear();
      runtime_[i] = NodeRuntime(static_cast<std::size_t>(cs_.node_cfg[i].cache_capacity));
    }
    now_ = 0;
  }

  std::uint32_t add_pdu(const MeshPdu& pdu, std::uint16_t hops) {
    pool_.push_back(PduInstance{pdu, hops});
    return static_cast<std::uint32_t>(pool_.size() - 1);
  }

  void schedule(Micros at, EventKind kind, std::uint32_t node, std::uint32_t pdu,
                std::uint32_t tx_index) {
    if (at < now_) throw std::logic_error("engine: scheduling into the past breaks causality");
    heap_.push_back(SimEvent{at, kind, node, pdu, tx_index, event_seq_++});
    std::push_heap(heap_.begin(), heap_.end(), heap_greater);
  }

  static bool heap_greater(const SimEvent& a, const SimEvent& b) { return b < a; }

  void event_loop() {
    while (!heap_.empty()) {
      std::pop_heap(heap_.begin(), heap_.end(), heap_greater);
      const SimEvent ev = heap_.back();
      heap_.pop_back();
      now_ = ev.at;
      switch (ev.kind) {
        case EventKind::PduGeneration: on_generation(ev); break;
        case EventKind::BackoffExpiry: on_backoff_expiry(ev); break;
        case EventKind::TxStart: on_tx_start(ev); break;
        case EventKind::TxEnd: on_tx_end(ev); break;
        case EventKind::MeasurementEnd: on_measurement_end(); return;
        case EventKind::ScanBoundary: break;  // never scheduled
      }
    }
  }

  void on_generation(const SimEvent& ev) {
    const auto v = static_cast<std::size_t>(ev.node);
    auto& inst = pool_[ev.pdu];
    // Replicas bypass the source's own cache; everything else registers its
    // key so echoes relayed back are discarded.
    if (inst.pdu.origin != OriginKind::Replica) runtime_[v].cache.insert(inst.pdu.message_key());
    const auto& t = cs_.node_cfg[v].timing;
    const Micros ready = now_ + node_rng_[v].uniform_int(t.backoff_min, t.backoff_max);
    pending_[v].push_back(PendingTx{ev.pdu, ready, true});
    schedule(ready, EventKind::BackoffExpiry, ev.node, 0, 0);
  }

  bool advertising_at(std::size_t v, Micros s, Micros e) const {
    return (adv_cur_s_[v] < e && adv_cur_e_[v] > s) || (adv_prev_s_[v] < e && adv_prev_e_[v] > s);
  }

  bool currently_advertising(std::size_t v) const { return adv_cur_e_[v] > now_; }

  void on_backoff_expiry(const SimEvent& ev) {
    maybe_start_next(static_cast<std::size_t>(ev.node));
  }

  void maybe_start_next(std::size_t v) {
    if (currently_advertising(v)) return;
    auto& q = pending_[v];
    for (std::size_t i = 0; i < q.size(); ++i) {
      if (q[i].ready_at <= now_) {
        const PendingTx entry = q[i];
        q.erase(q.begin() + static_cast<std::ptrdiff_t>(i));
        start_advertising(v, entry);
        return;
      }
    }
  }

  void start_advertising(std::size_t v, const PendingTx& entry) {
    if (currently_advertising(v))
      throw std::logic_error("engine: overlapping Advertising Events on one node");
    const auto ev =
        build_advertising_event(cs_.node_cfg[v].timing, now_, cs_.airtime, node_rng_[v]);
    adv_prev_s_[v] = adv_cur_s_[v];
    adv_prev_e_[v] = adv_cur_e_[v];
    adv_cur_s_[v] = now_;
    adv_cur_e_[v] = ev.end;
    active_own_[v] = entry.own;
    for (std::uint32_t k = 0; k < 3; ++k) {
      schedule(ev.tx[k].start, EventKind::TxStart, static_cast<std::uint32_t>(v), entry.pdu, k);
      schedule(ev.tx[k].start + cs_.airtime, EventKind::TxEnd, static_cast<std::uint32_t>(v),
               entry.pdu, k);
    }
  }

  void on_tx_start(const SimEvent& ev) {
    const auto c = static_cast<std::size_t>(ev.tx_index);
    metrics_.channel_attempts[c] += 1;
    history_[c].push_back(
        InFlightTx{now_, now_ + cs_.airtime, ev.node, ev.pdu});
  }

  void on_tx_end(const SimEvent& ev) {
    const auto u = static_cast<std::size_t>(ev.node);
    const AdvChannel channel = kAdvChannels[ev.tx_index];
    const Micros e = now_;
    const Micros s = e - cs_.airtime;
    resolve_transmission(u, ev.pdu, channel, s, e);
    if (ev.tx_index == 2) {
      // Event complete; the node is free again.
      if (!active_own_[u]) runtime_[u].relayed_pending -= 1;
      maybe_start_next(u);
    }
  }

  /// All receptions of one finished transmission. Receivers are visited in
  /// ascending index order so the per-receiver draw sequences are stable.
  void resolve_transmission(std::size_t u, std::uint32_t pdu_idx, AdvChannel channel, Micros s,
                            Micros e) {
    const auto c = static_cast<std::size_t>(adv_channel_index(channel));
    overlappers_.clear();
    {
      // Co-channel transmissions overlapping (s, e), excluding this one.
      const auto& hist = history_[c];
      auto it = std::lower_bound(hist.begin(), hist.end(), s - cs_.airtime + 1,
                                 [](const InFlightTx& t, Micros v) { return t.start < v; });
      for (; it != hist.end() && it->start < e; ++it) {
        if (it->start == s && it->node == u && it->pdu == pdu_idx) continue;
        if (it->end > s) overlappers_.push_back(&*it);
      }
    }
    const bool traced = pool_[pdu_idx].pdu.message_key() == traced_key_;
    if (cs_.sinr_mode) {
      for (int v = 0; v < cs_.n; ++v) {
        if (static_cast<std::size_t>(v) == u) continue;
        const ReceiveOutcome outcome = resolve_one_sinr(u, static_cast<std::size_t>(v), c, s, e);
        metrics_.record_outcome(channel, outcome);
        if (outcome == ReceiveOutcome::Received) {
          if (traced && links_) (*links_)[u * static_cast<std::size_t>(cs_.n) + v] += 1;
          handle_reception(static_cast<std::size_t>(v), pdu_idx, e);
        }
      }
    } else {
      for (const std::uint16_t v16 : cs_.adjacency[u]) {
        const auto v = static_cast<std::size_t>(v16);
        const ReceiveOutcome outcome = resolve_one_fixed(u, v, channel, s, e);
        metrics_.record_outcome(channel, outcome);
        if (outcome == ReceiveOutcome::Received) {
          if (traced && links_) (*links_)[u * static_cast<std::size_t>(cs_.n) + v] += 1;
          handle_reception(v, pdu_idx, e);
        }
      }
    }
  }

  ReceiveOutcome resolve_one_fixed(std::size_t u, std::size_t v, AdvChannel channel, Micros s,
                                   Micros e) {
    (void)u;
    if (advertising_at(v, s, e)) return ReceiveOutcome::MissedBusy;
    const auto& cfg = cs_.node_cfg[v];
    if (!scanning_whole_span(cfg.timing, scan_ch0_[v], scan_phase_[v], s, e, channel))
      return ReceiveOutcome::MissedChannel;
    for (const InFlightTx* o : overlappers_) {
      if (o->node != v && cs_.pair_in_range(static_cast<int>(o->node), static_cast<int>(v)))
        return ReceiveOutcome::MissedCollision;
    }
    const double per = cs_.scenario.per_mode.fixed_per;
    if (per > 0 && rx_rng_[v].uniform01() < per) return ReceiveOutcome::MissedPer;
    return ReceiveOutcome::Received;
  }

  ReceiveOutcome resolve_one_sinr(std::size_t u, std::size_t v, std::size_t c, Micros s, Micros e) {
    if (advertising_at(v, s, e)) return ReceiveOutcome::MissedBusy;
    const auto& cfg = cs_.node_cfg[v];
    if (!scanning_whole_span(cfg.timing, scan_ch0_[v], scan_phase_[v], s, e, kAdvChannels[c]))
      return ReceiveOutcome::MissedChannel;
    const auto& radio = cs_.scenario.radio;
    auto rx_power_dbm = [&](std::size_t from) {
      const double shadow = rx_rng_[v].normal(0.0, radio.shadowing_sigma_db);
      return cs_.ref_gain_db[c] - cs_.pair_loss_db[from * static_cast<std::size_t>(cs_.n) + v] -
             shadow;
    };
    const double p_rx_dbm = rx_power_dbm(u);
    if (p_rx_dbm < radio.sensitivity_dbm) return ReceiveOutcome::MissedSensitivity;
    // Mesh self-interference: sum of co-channel overlapper powers, each with
    // its own shadowing draw (upper bound over partial overlaps).
    double mesh_mw = 0.0;
    for (const InFlightTx* o : overlappers_) {
      if (o->node == v) continue;
      mesh_mw += dbm_to_mw(rx_power_dbm(o->node));
    }
    double wlan = cs_.wlan_mw[v][c];
    if (wlan > 0 && cs_.duty_cycle < 1.0 && rx_rng_[v].uniform01() >= cs_.duty_cycle) wlan = 0.0;
    const double sinr = sinr_linear(dbm_to_mw(p_rx_dbm), cs_.noise_mw, wlan, mesh_mw);
    const double per = packet_error_rate(cs_.scenario.per_mode, sinr, radio);
    if (per > 0 && rx_rng_[v].uniform01() < per) return ReceiveOutcome::MissedPer;
    return ReceiveOutcome::Received;
  }

  void handle_reception(std::size_t v, std::uint32_t pdu_idx, Micros end_time) {
    const auto& inst = pool_[pdu_idx];
    const int hops = inst.hops + 1;
    const bool is_dest =
        static_cast<int>(v) == cs_.dest_idx && inst.pdu.message_key() == traced_key_;
    const RelayDecision d =
        on_receive(runtime_[v], cs_.node_cfg[v], inst.pdu, is_dest, end_time, node_rng_[v]);
    if (d.action == RelayAction::DiscardCached) {
      metrics_.cache_discards += 1;
      return;
    }
    if (d.action == RelayAction::DiscardTtl) return;
    if (d.deliver && !metrics_.traced_delivered) {
      if (hops > initial_ttl_)
        throw std::logic_error("engine: delivered hop count exceeds initial TTL");
      metrics_.record_delivery(inst.pdu, end_time, gen_time_, hops);
    }
    if (d.queue_drop) metrics_.queue_drops += 1;
    if (d.action == RelayAction::AcceptAndRelay) {
      const auto relay_idx = add_pdu(d.relay_pdu, static_cast<std::uint16_t>(hops));
      pending_[v].push_back(PendingTx{relay_idx, d.backoff_until, false});
      schedule(d.backoff_until, EventKind::BackoffExpiry, static_cast<std::uint32_t>(v), 0, 0);
    }
  }

  void on_measurement_end() {
    if (metrics_.traced_delivered) return;
    // Anything still scheduled or queued for the traced message means the
    // horizon cut the experiment short rather than the flood dying out.
    bool live = false;
    for (const auto& ev : heap_) {
      if ((ev.kind == EventKind::TxStart || ev.kind == EventKind::TxEnd ||
           ev.kind == EventKind::PduGeneration) &&
          pool_[ev.pdu].pdu.message_key() == traced_key_) {
        live = true;
        break;
      }
    }
    if (!live) {
      for (int v = 0; v < cs_.n && !live; ++v)
        for (const auto& p : pending_[static_cast<std::size_t>(v)])
          if (pool_[p.pdu].pdu.message_key() == traced_key_) {
            live = true;
            break;
          }
    }
    metrics_.horizon_truncated = live;
  }

  const CompiledScenario& cs_;

  // replication state
  std::vector<Micros> scan_phase_;
  std::vector<AdvChannel> scan_ch0_;
  std::vector<Micros> adv_cur_s_, adv_cur_e_, adv_prev_s_, adv_prev_e_;
  std::vector<std::uint8_t> active_own_;
  std::vector<std::vector<PendingTx>> pending_;
  std::vector<NodeRuntime> runtime_;
  std::vector<RandomStream> node_rng_, rx_rng_;
  std::vector<SimEvent> heap_;
  std::uint64_t event_seq_ = 0;
  std::vector<PduInstance> pool_;
  std::array<std::vector<InFlightTx>, 3> history_;
  std::vector<const InFlightTx*> overlappers_;
  RunMetrics metrics_;
  std::vector<std::uint64_t>* links_ = nullptr;
  std::uint64_t traced_key_ = 0;
  Micros gen_time_ = 0;
  int initial_ttl_ = 0;
  Micros now_ = 0;
};

/// Convenience single-replication entry point (tests, small oracles).
inline RunMetrics run_replication(const Scenario& scenario, int rep, std::uint64_t seed,
                                  Micros warmup = 0, Micros horizon = 10 * kMicrosPerSecond) {
  const CompiledScenario cs = compile_scenario(scenario);
  ReplicationRunner runner(cs);
  return runner.run(seed, rep, warmup, horizon);
}

struct ExperimentResult {
  AggregateMetrics aggregate;
  std::vector<RunMetrics> runs;
};

/// Runs every replication of the plan, optionally fanned across workers.
/// Replication r is fully determined by (scenario, plan.seed, r); the
/// aggregate merges exact integer counters, so the worker count never
/// changes a single output byte.
inline ExperimentResult run_experiment(const Scenario& scenario, const ReplicationPlan& plan) {
  plan.validate();
  const CompiledScenario cs = compile_scenario(scenario);
  const auto n = static_cast<std::size_t>(cs.n);
  ExperimentResult result;
  result.runs.resize(static_cast<std::size_t>(plan.replications));
  std::vector<std::uint64_t> links(n * n, 0);

  const int workers = std::min(plan.workers, plan.replications);
  if (workers <= 1) {
    ReplicationRunner runner(cs);
    for (int r = 0; r < plan.replications; ++r)
      result.runs[static_cast<std::size_t>(r)] =
          runner.run(plan.seed, r, plan.warmup, plan.horizon, &links);
  } else {
    std::atomic<int> next{0};
    std::vector<std::vector<std::uint64_t>> worker_links(
        static_cast<std::size_t>(workers), std::vector<std::uint64_t>(n * n, 0));
    std::vector<std::thread> threads;
    threads.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
      threads.emplace_back([&, w]() {
        ReplicationRunner runner(cs);
        while (true) {
          const int r = next.fetch_add(1);
          if (r >= plan.replications) break;
          result.runs[static_cast<std::size_t>(r)] =
              runner.run(plan.seed, r, plan.warmup, plan.horizon,
                         &worker_links[static_cast<std::size_t>(w)]);
        }
      });
    }
    for (auto& t : threads) t.join();
    for (const auto& wl : worker_links)
      for (std::size_t i = 0; i < links.size(); ++i) links[i] += wl[i];
  }

  result.aggregate = aggregate_runs(result.runs, std::move(links), static_cast<std::uint32_t>(n),
                                    cs.ids, cs.x, cs.y);
  return result;
}

}  // namespace blemesh
