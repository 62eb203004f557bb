/*
 * Simulation time base.
 *
 * All engine timing is integer microseconds: PDU airtime (312 us at 1 Mbit/s)
 * and every protocol parameter studied here are exact in this unit, so event
 * ordering never depends on floating-point rounding.
 */
#pragma once

#include <cmath>
#include <cstdint>

namespace blemesh {

using Micros = std::int64_t;

constexpr Micros kMicrosPerMilli = 1000;
constexpr Micros kMicrosPerSecond = 1000000;

constexpr Micros millis_to_micros(double ms) {
  return static_cast<Micros>(ms * static_cast<double>(kMicrosPerMilli) + (ms >= 0 ? 0.5 : -0.5));
}

constexpr double micros_to_millis(Micros us) {
  return static_cast<double>(us) / static_cast<double>(kMicrosPerMilli);
}

constexpr double micros_to_seconds(Micros us) {
  return static_cast<double>(us) / static_cast<double>(kMicrosPerSecond);
}

}  // namespace blemesh
