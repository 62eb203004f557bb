/*
 * Channel math: airtime, path loss, SINR, and the PER mappings, checked
 * against closed-form values computed with an independent high-precision
 * tool and frozen here.
 */
#include <catch_amalgamated.hpp>

#include "blemesh/radio.hpp"
#include "blemesh/rng.hpp"

using namespace blemesh;

TEST_CASE("adv channels: frequencies and cyclic order") {
  CHECK(center_frequency_mhz(AdvChannel::Ch37) == 2402.0);
  CHECK(center_frequency_mhz(AdvChannel::Ch38) == 2426.0);
  CHECK(center_frequency_mhz(AdvChannel::Ch39) == 2480.0);
  CHECK(next_adv_channel(AdvChannel::Ch37) == AdvChannel::Ch38);
  CHECK(next_adv_channel(AdvChannel::Ch38) == AdvChannel::Ch39);
  CHECK(next_adv_channel(AdvChannel::Ch39) == AdvChannel::Ch37);
  CHECK(adv_channel_after(AdvChannel::Ch38, 5) == AdvChannel::Ch37);
}

TEST_CASE("airtime is exact division") {
  CHECK(airtime_seconds(312, 1e6) == Catch::Approx(312e-6).epsilon(1e-12));
  CHECK(airtime_seconds(312, 2e6) == Catch::Approx(156e-6).epsilon(1e-12));
  CHECK(airtime_seconds(8, 1e6) == Catch::Approx(8e-6).epsilon(1e-12));
  CHECK(airtime_micros(312, 1e6) == 312);
  CHECK(airtime_micros(312, 2e6) == 156);
  CHECK_THROWS_AS(airtime_seconds(0, 1e6), std::invalid_argument);
  CHECK_THROWS_AS(airtime_seconds(312, 0), std::invalid_argument);
  CHECK_THROWS_AS(airtime_seconds(-8, 1e6), std::invalid_argument);
}

TEST_CASE("received power matches the closed form") {
  RadioParams p;
  // Frozen from an independent 50-digit evaluation of the path loss model.
  CHECK(received_power_dbm(p, AdvChannel::Ch37, 1.0, 0.0) ==
        Catch::Approx(-40.059243283221118).margin(1e-9));
  CHECK(received_power_dbm(p, AdvChannel::Ch37, 9.0, 0.0) ==
        Catch::Approx(-73.457731113597489).margin(1e-9));
  // Shadowing is an additive dB offset.
  CHECK(received_power_dbm(p, AdvChannel::Ch37, 1.0, 4.0) ==
        Catch::Approx(-44.059243283221118).margin(1e-9));
  CHECK_THROWS_AS(received_power_dbm(p, AdvChannel::Ch37, 0.5, 0.0), std::invalid_argument);
}

TEST_CASE("received power falls exactly 10*gamma dB per decade") {
  RadioParams p;
  RandomStream rng(7);
  for (int i = 0; i < 200; ++i) {
    const double d = rng.uniform(1.0, 50.0);
    const double near = received_power_dbm(p, AdvChannel::Ch38, d, 0.0);
    const double far = received_power_dbm(p, AdvChannel::Ch38, 10.0 * d, 0.0);
    CHECK(std::abs((near - far) - 10.0 * p.path_loss_exponent) < 1e-9);
  }
}

TEST_CASE("sinr in linear units") {
  CHECK(sinr_linear(1e-7, 1e-9, 0, 0) == Catch::Approx(100.0));
  CHECK(sinr_linear(1e-7, 1e-9, 9.9e-8, 0) == Catch::Approx(1.0));
  // 9 m link against the noise floor only: 32.54 dB.
  RadioParams p;
  const double prx = dbm_to_mw(received_power_dbm(p, AdvChannel::Ch37, 9.0, 0.0));
  const double snr_db = 10.0 * std::log10(sinr_linear(prx, dbm_to_mw(-106.0), 0, 0));
  CHECK(snr_db == Catch::Approx(32.542268886402511).margin(1e-9));
  CHECK_THROWS_AS(sinr_linear(1e-7, 0, 0, 0), std::invalid_argument);
  CHECK_THROWS_AS(sinr_linear(-1e-7, 1e-9, 0, 0), std::invalid_argument);
}

TEST_CASE("sinr with only noise is an exact ratio") {
  RandomStream rng(11);
  for (int i = 0; i < 200; ++i) {
    const double prx = dbm_to_mw(rng.uniform(-100.0, 0.0));
    const double noise = dbm_to_mw(rng.uniform(-110.0, -90.0));
    CHECK(sinr_linear(prx, noise, 0, 0) * noise == Catch::Approx(prx).epsilon(1e-14));
  }
}

TEST_CASE("packet error rate: fixed and SINR modes") {
  RadioParams p;
  CHECK(packet_error_rate(PerMode::fixed(0.05), 123.0, p) == 0.05);
  CHECK(packet_error_rate(PerMode::fixed(0.0), 0.0, p) == 0.0);
  CHECK_THROWS_AS(PerMode::fixed(1.5), std::invalid_argument);

  // SINR = 10 dB: BER = 0.5 erfc(sqrt(6.8)) = 1.1309276e-4,
  // PER = 1 - (1-BER)^312 = 0.0346716 (frozen oracle values).
  const double perion = packet_error_rate(PerMode::sinr_complement(), 10.0, p);
  CHECK(perion == Catch::Approx(0.034671612324566515).epsilon(1e-9));

  // As published: (0.5 erfc(0))^312 = 2^-312 at SINR = 0.
  const double published0 = packet_error_rate(PerMode::sinr_published(), 0.0, p);
  CHECK(published0 == Catch::Approx(std::ldexp(1.0, -312)).epsilon(1e-12));

  // Very large SINR: both modes go to zero.
  CHECK(packet_error_rate(PerMode::sinr_complement(), 1e9, p) == 0.0);
  CHECK(packet_error_rate(PerMode::sinr_published(), 1e9, p) == 0.0);
}

TEST_CASE("per is monotone non-increasing in sinr, published never above complement") {
  RadioParams p;
  RandomStream rng(42);
  for (int i = 0; i < 100000; ++i) {
    double a = rng.uniform(0.0, 40.0);
    double b = rng.uniform(0.0, 40.0);
    if (a > b) std::swap(a, b);
    const double ca = packet_error_rate(PerMode::sinr_complement(), a, p);
    const double cb = packet_error_rate(PerMode::sinr_complement(), b, p);
    const double pa = packet_error_rate(PerMode::sinr_published(), a, p);
    const double pb = packet_error_rate(PerMode::sinr_published(), b, p);
    REQUIRE(ca >= cb);
    REQUIRE(pa >= pb);
    REQUIRE(pa <= ca);
    REQUIRE(pb <= cb);
  }
}

TEST_CASE("dbm/mw conversions round-trip") {
  RandomStream rng(3);
  for (int i = 0; i < 100; ++i) {
    const double dbm = rng.uniform(-120.0, 20.0);
    CHECK(mw_to_dbm(dbm_to_mw(dbm)) == Catch::Approx(dbm).margin(1e-10));
  }
}

TEST_CASE("radio parameter bounds") {
  RadioParams p;
  CHECK_NOTHROW(p.validate());
  p.pdu_bits = 0;
  CHECK_THROWS(p.validate());
  p.pdu_bits = 313;
  CHECK_THROWS(p.validate());
  p.pdu_bits = 312;
  p.path_loss_exponent = 0.0;
  CHECK_THROWS(p.validate());
  p.path_loss_exponent = 3.5;
  p.reference_distance_m = 0.0;
  CHECK_THROWS(p.validate());
}
