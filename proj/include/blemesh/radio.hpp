/*
 * Physical-layer model: BLE advertising channels, packet airtime, simplified
 * path loss with log-normal shadowing, SINR, and the SINR-to-PER mapping for
 * GMSK over an AWGN channel.
 *
 * All SINR arithmetic happens in linear (mW) units; dBm<->mW conversion is
 * centralized here. Every function is pure.
 */
#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>

#include "blemesh/time.hpp"

namespace blemesh {

/// The three advertising channels used for all connection-less traffic.
enum class AdvChannel : std::uint8_t { Ch37 = 37, Ch38 = 38, Ch39 = 39 };

constexpr std::array<AdvChannel, 3> kAdvChannels{AdvChannel::Ch37, AdvChannel::Ch38,
                                                 AdvChannel::Ch39};

constexpr int adv_channel_index(AdvChannel c) {
  return static_cast<int>(c) - 37;
}

constexpr int adv_channel_number(AdvChannel c) {
  return static_cast<int>(c);
}

/// Channel centers in MHz: 37 and 39 sit at the band edges, 38 between
/// WLAN channels 1 and 6.
constexpr double center_frequency_mhz(AdvChannel c) {
  switch (c) {
    case AdvChannel::Ch37: return 2402.0;
    case AdvChannel::Ch38: return 2426.0;
    case AdvChannel::Ch39: return 2480.0;
  }
  return 0.0;
}

/// Cyclic successor 37 -> 38 -> 39 -> 37, the order scanners rotate through.
constexpr AdvChannel next_adv_channel(AdvChannel c) {
  switch (c) {
    case AdvChannel::Ch37: return AdvChannel::Ch38;
    case AdvChannel::Ch38: return AdvChannel::Ch39;
    case AdvChannel::Ch39: return AdvChannel::Ch37;
  }
  return AdvChannel::Ch37;
}

constexpr AdvChannel adv_channel_after(AdvChannel start, std::int64_t steps) {
  const int offset = static_cast<int>(((steps % 3) + 3) % 3);
  const int idx = (adv_channel_index(start) + offset) % 3;
  return kAdvChannels[static_cast<std::size_t>(idx)];
}

struct RadioParams {
  double tx_power_dbm = 0.0;
  double noise_floor_dbm = -106.0;
  double sensitivity_dbm = -85.0;
  double path_loss_exponent = 3.5;
  double shadowing_sigma_db = 4.0;
  double reference_distance_m = 1.0;
  double bit_rate_bps = 1e6;
  int pdu_bits = 312;
  double per_alpha = 0.68;

  void validate() const {
    if (path_loss_exponent <= 0) throw std::invalid_argument("radio: path_loss_exponent must be > 0");
    if (shadowing_sigma_db < 0) throw std::invalid_argument("radio: shadowing_sigma_db must be >= 0");
    if (reference_distance_m <= 0) throw std::invalid_argument("radio: reference_distance_m must be > 0");
    if (bit_rate_bps <= 0) throw std::invalid_argument("radio: bit_rate_bps must be > 0");
    if (pdu_bits <= 0 || pdu_bits > 312) throw std::invalid_argument("radio: pdu_bits must be in (0, 312]");
  }
};

enum class PerModel : std::uint8_t {
  Fixed,
  SinrDerivedAsPublished,  // PER = (0.5 erfc(sqrt(alpha SINR)))^n, the printed form
  SinrDerivedComplement,   // PER = 1 - (1 - BER)^n, the standard mapping
};

struct PerMode {
  PerModel model = PerModel::Fixed;
  double fixed_per = 0.0;

  static PerMode fixed(double per) {
    if (!(per >= 0.0 && per <= 1.0)) throw std::invalid_argument("per_mode: fixed per must be in [0,1]");
    return PerMode{PerModel::Fixed, per};
  }
  static PerMode sinr_published() { return PerMode{PerModel::SinrDerivedAsPublished, 0.0}; }
  static PerMode sinr_complement() { return PerMode{PerModel::SinrDerivedComplement, 0.0}; }

  bool uses_sinr() const { return model != PerModel::Fixed; }
};

inline double dbm_to_mw(double dbm) { return std::pow(10.0, dbm / 10.0); }
inline double mw_to_dbm(double mw) { return 10.0 * std::log10(mw); }

/// Time on air of one PDU, in seconds.
inline double airtime_seconds(double pdu_bits, double bit_rate_bps) {
  if (pdu_bits <= 0) throw std::invalid_argument("airtime: pdu_bits must be > 0");
  if (bit_rate_bps <= 0) throw std::invalid_argument("airtime: bit_rate_bps must be > 0");
  return pdu_bits / bit_rate_bps;
}

inline Micros airtime_micros(int pdu_bits, double bit_rate_bps) {
  const double us = airtime_seconds(pdu_bits, bit_rate_bps) * 1e6;
  return static_cast<Micros>(std::llround(us));
}

/// Received power under the simplified path loss model with log-normal
/// shadowing. The shadowing realization is supplied by the caller; sampling
/// lives in the engine so that replications stay deterministic.
inline double received_power_dbm(const RadioParams& p, AdvChannel channel, double distance_m,
                                 double shadowing_db) {
  if (distance_m < p.reference_distance_m)
    throw std::invalid_argument("received_power_dbm: distance below reference distance");
  constexpr double kSpeedOfLight = 299792458.0;
  const double lambda = kSpeedOfLight / (center_frequency_mhz(channel) * 1e6);
  const double pi = 3.14159265358979323846;
  const double ref_gain_db = 20.0 * std::log10(lambda / (4.0 * pi * p.reference_distance_m));
  const double distance_loss_db =
      10.0 * p.path_loss_exponent * std::log10(distance_m / p.reference_distance_m);
  return p.tx_power_dbm + ref_gain_db - distance_loss_db - shadowing_db;
}

/// SINR in linear units. Inputs are linear mW; callers convert from dBm.
inline double sinr_linear(double p_rx_mw, double noise_mw, double wlan_mw, double mesh_mw) {
  if (p_rx_mw < 0 || noise_mw < 0 || wlan_mw < 0 || mesh_mw < 0)
    throw std::invalid_argument("sinr: negative power");
  const double denom = noise_mw + wlan_mw + mesh_mw;
  if (denom <= 0) throw std::invalid_argument("sinr: denominator is zero (noise must be > 0)");
  return p_rx_mw / denom;
}

/// Bit error rate for GMSK over AWGN: 0.5 erfc(sqrt(alpha SINR)).
inline double gmsk_bit_error_rate(double sinr, double alpha) {
  return 0.5 * std::erfc(std::sqrt(alpha * sinr));
}

inline double packet_error_rate(const PerMode& mode, double sinr, const RadioParams& p) {
  switch (mode.model) {
    case PerModel::Fixed:
      return mode.fixed_per;
    case PerModel::SinrDerivedAsPublished: {
      if (sinr < 0) throw std::invalid_argument("packet_error_rate: sinr must be >= 0");
      const double ber = gmsk_bit_error_rate(sinr, p.per_alpha);
      return std::pow(ber, static_cast<double>(p.pdu_bits));
    }
    case PerModel::SinrDerivedComplement: {
      if (sinr < 0) throw std::invalid_argument("packet_error_rate: sinr must be >= 0");
      const double ber = gmsk_bit_error_rate(sinr, p.per_alpha);
      if (ber >= 1.0) return 1.0;
      // 1 - (1-ber)^n via expm1/log1p, stable for the tiny BERs this produces
      return -std::expm1(static_cast<double>(p.pdu_bits) * std::log1p(-ber));
    }
  }
  return 0.0;
}

}  // namespace blemesh
