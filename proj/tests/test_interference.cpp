/*
 * Channel remapping, bandwidth adaptation, interpolation, and the synthetic
 * map generator.
 */
#include <catch_amalgamated.hpp>

#include <sstream>

#include "blemesh/interference.hpp"

using namespace blemesh;

TEST_CASE("802.15.4 channel mapping picks the nearest center") {
  CHECK(map_channel(AdvChannel::Ch37) == 11);  // 2402 -> 2405
  CHECK(map_channel(AdvChannel::Ch38) == 15);  // 2426 -> 2425
  CHECK(map_channel(AdvChannel::Ch39) == 26);  // 2480 -> 2480
}

TEST_CASE("adapt_power is a pure dB shift") {
  CHECK(adapt_power(-40.0, -6.02) == Catch::Approx(-46.02));
  CHECK(adapt_power(-40.0, 0.0) == -40.0);
  // Linear check: -6.02 dB is a factor of ~1/4.
  const double ratio = dbm_to_mw(adapt_power(-40.0, -6.02)) / dbm_to_mw(-40.0);
  CHECK(ratio == Catch::Approx(0.25).epsilon(2e-4));
  for (double p = -90; p <= -20; p += 7.3)
    CHECK(adapt_power(p, -6.02) - p == Catch::Approx(-6.02));
}

TEST_CASE("single-observer field: nearest observer") {
  std::vector<RawInterferenceRecord> recs = {{0.0, 100.0, 11, 0.0, 0.0, -50.0}};
  auto map = InterferenceMap::from_records(recs, {}, Interpolation::NearestObserver);
  const double got = map.query(50.0, AdvChannel::Ch37, 10.0, 10.0);
  CHECK(mw_to_dbm(got) == Catch::Approx(-56.02));
  // Channel 37 maps to 802.15.4 channel 11; 38/39 have no data -> 0 mW.
  CHECK(map.query(50.0, AdvChannel::Ch38, 10.0, 10.0) == 0.0);
  CHECK(map.query(50.0, AdvChannel::Ch39, 10.0, 10.0) == 0.0);
}

TEST_CASE("two equal observers give a constant IDW field") {
  std::vector<RawInterferenceRecord> recs = {
      {0.0, 100.0, 15, 0.0, 0.0, -45.0},
      {0.0, 100.0, 15, 10.0, 0.0, -45.0},
  };
  auto map = InterferenceMap::from_records(recs, {});
  const double expected = dbm_to_mw(-45.0 - 6.02);
  for (double x = -3; x < 14; x += 1.7)
    CHECK(map.query(1.0, AdvChannel::Ch38, x, 5.0) == Catch::Approx(expected).epsilon(1e-12));
}

TEST_CASE("IDW at equal distances is the linear mean of adapted powers") {
  std::vector<RawInterferenceRecord> recs = {
      {0.0, 100.0, 26, -1.0, 0.0, -40.0},
      {0.0, 100.0, 26, 1.0, 0.0, -60.0},
  };
  auto map = InterferenceMap::from_records(recs, {}, Interpolation::InverseDistanceWeighting, 2.0);
  const double a = dbm_to_mw(-46.02), b = dbm_to_mw(-66.02);
  CHECK(map.query(0.0, AdvChannel::Ch39, 0.0, 0.0) ==
        Catch::Approx(0.5 * (a + b)).epsilon(1e-12));
}

TEST_CASE("interpolation reproduces samples exactly at sample positions") {
  std::vector<RawInterferenceRecord> recs = {
      {0.0, 10.0, 11, 0.0, 0.0, -50.0},
      {0.0, 10.0, 11, 4.0, 3.0, -42.5},
      {0.0, 10.0, 11, -2.0, 8.0, -61.0},
  };
  for (auto interp : {Interpolation::InverseDistanceWeighting, Interpolation::NearestObserver}) {
    auto map = InterferenceMap::from_records(recs, {}, interp);
    for (const auto& r : recs) {
      const double got = map.query(5.0, AdvChannel::Ch37, r.x_m, r.y_m);
      CHECK(mw_to_dbm(got) == Catch::Approx(r.power_dbm - 6.02).margin(1e-9));
    }
  }
}

TEST_CASE("required cells without data raise MissingInterferenceData") {
  std::vector<RawInterferenceRecord> recs = {{0.0, 100.0, 11, 0.0, 0.0, -50.0}};
  auto map = InterferenceMap::from_records(recs, {});
  CHECK_NOTHROW(map.require({{0, AdvChannel::Ch37}}));
  CHECK_THROWS_AS(map.require({{0, AdvChannel::Ch38}}), MissingInterferenceData);
}

TEST_CASE("queries outside every window are rejected") {
  std::vector<RawInterferenceRecord> recs = {{10.0, 20.0, 11, 0.0, 0.0, -50.0}};
  auto map = InterferenceMap::from_records(recs, {});
  CHECK_THROWS_AS(map.query(25.0, AdvChannel::Ch37, 0, 0), std::out_of_range);
}

TEST_CASE("synthetic maps: hotspot peaks and empty fields") {
  auto empty = InterferenceMap::synthetic({}, {});
  CHECK(empty.query_window(0, AdvChannel::Ch37, 3.0, 4.0) == 0.0);

  std::vector<InterferenceHotspot> spots = {{0.0, 0.0, -30.0, 1.0, 11}};
  auto map = InterferenceMap::synthetic(spots, {});
  CHECK(mw_to_dbm(map.query_window(0, AdvChannel::Ch37, 0.0, 0.0)) == Catch::Approx(-30.0));
  CHECK(mw_to_dbm(map.query_window(0, AdvChannel::Ch37, 3.0, 4.0)) == Catch::Approx(-35.0));
  CHECK(map.query_window(0, AdvChannel::Ch38, 0.0, 0.0) == 0.0);

  // Two well-separated hotspots: each center is dominated by its own spot.
  std::vector<InterferenceHotspot> two = {{0.0, 0.0, -30.0, 2.0, 11}, {50.0, 0.0, -40.0, 2.0, 11}};
  auto m2 = InterferenceMap::synthetic(two, {});
  const double at_a = mw_to_dbm(m2.query_window(0, AdvChannel::Ch37, 0.0, 0.0));
  const double at_b = mw_to_dbm(m2.query_window(0, AdvChannel::Ch37, 50.0, 0.0));
  CHECK(at_a == Catch::Approx(-30.0).margin(0.1));
  CHECK(at_b == Catch::Approx(-40.0).margin(0.1));
}

TEST_CASE("synthetic window offsets order the field intensity") {
  std::vector<InterferenceHotspot> spots = {{0.0, 0.0, -30.0, 1.0, 11}};
  std::vector<TimeWindow> windows = {{0, 10, 1.0}, {10, 20, 1.0}, {20, 30, 1.0}, {30, 40, 1.0}};
  auto map = InterferenceMap::synthetic(spots, windows, {-12.0, -6.0, 0.0, -3.0});
  const double w0 = map.query_window(0, AdvChannel::Ch37, 5, 5);
  const double w1 = map.query_window(1, AdvChannel::Ch37, 5, 5);
  const double w2 = map.query_window(2, AdvChannel::Ch37, 5, 5);
  const double w3 = map.query_window(3, AdvChannel::Ch37, 5, 5);
  CHECK(w0 < w1);
  CHECK(w1 < w3);
  CHECK(w3 < w2);
}

TEST_CASE("record file parsing: header and line diagnostics") {
  std::istringstream good(
      "window_start_s,window_end_s,channel_154,x_m,y_m,power_dbm\n"
      "0,3600,11,1.5,2.5,-48\n"
      "0,3600,15,0,0,-55\n");
  const auto recs = parse_interference_records(good, "good.csv");
  REQUIRE(recs.size() == 2);
  CHECK(recs[0].channel_154 == 11);
  CHECK(recs[1].power_dbm == -55.0);

  std::istringstream no_header("0,3600,11,1.5,2.5,-48\n");
  CHECK_THROWS_WITH(parse_interference_records(no_header, "f.csv"),
                    Catch::Matchers::ContainsSubstring("f.csv:1"));

  std::istringstream bad_channel(
      "window_start_s,window_end_s,channel_154,x_m,y_m,power_dbm\n"
      "0,3600,27,1.5,2.5,-48\n");
  CHECK_THROWS_WITH(parse_interference_records(bad_channel, "f.csv"),
                    Catch::Matchers::ContainsSubstring("f.csv:2"));

  std::istringstream bad_field(
      "window_start_s,window_end_s,channel_154,x_m,y_m,power_dbm\n"
      "0,3600,11,oops,2.5,-48\n");
  CHECK_THROWS_WITH(parse_interference_records(bad_field, "f.csv"),
                    Catch::Matchers::ContainsSubstring("malformed"));
}

TEST_CASE("IDW field is continuous in position away from samples") {
  std::vector<RawInterferenceRecord> recs = {
      {0.0, 10.0, 11, 0.0, 0.0, -50.0},
      {0.0, 10.0, 11, 10.0, 0.0, -40.0},
      {0.0, 10.0, 11, 5.0, 8.0, -60.0},
  };
  auto map = InterferenceMap::from_records(recs, {});
  const double step = 1e-4;
  for (double x = 2.0; x < 8.0; x += 0.9) {
    const double here = map.query(1.0, AdvChannel::Ch37, x, 3.0);
    const double near = map.query(1.0, AdvChannel::Ch37, x + step, 3.0);
    CHECK(std::abs(near - here) < 1e-3 * std::abs(here));
  }
}
