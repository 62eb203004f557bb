/*
 * Metric accumulation, aggregation identities, and output formats.
 */
#include <catch_amalgamated.hpp>

#include <filesystem>
#include <sstream>

#include "blemesh/metrics.hpp"

using namespace blemesh;

TEST_CASE("record_delivery keeps the first arrival only") {
  RunMetrics m;
  MeshPdu pdu;
  pdu.origin = OriginKind::Original;
  m.record_delivery(pdu, millis_to_micros(12), millis_to_micros(2), 3);
  CHECK(m.traced_delivered);
  CHECK(m.delivery_delay == millis_to_micros(10));
  CHECK(m.hop_count == 3);

  MeshPdu rep;
  rep.origin = OriginKind::Replica;
  m.record_delivery(rep, millis_to_micros(50), millis_to_micros(2), 5);  // ignored duplicate
  CHECK(m.delivery_delay == millis_to_micros(10));
  CHECK(m.delivered_via == OriginKind::Original);
  CHECK(m.hop_count == 3);

  RunMetrics bad;
  CHECK_THROWS_AS(bad.record_delivery(pdu, 1, 2, 1), std::logic_error);
}

TEST_CASE("congestion probability is busy misses over potential receptions") {
  RunMetrics m;
  CHECK_FALSE(m.congestion_probability().has_value());
  for (int i = 0; i < 6; ++i) m.record_outcome(AdvChannel::Ch37, ReceiveOutcome::MissedBusy);
  for (int i = 0; i < 14; ++i) m.record_outcome(AdvChannel::Ch38, ReceiveOutcome::Received);
  REQUIRE(m.congestion_probability().has_value());
  CHECK(*m.congestion_probability() == Catch::Approx(0.3));
  CHECK(m.busy_miss_count == 6);
  CHECK(m.potential_reception_count == 20);
}

TEST_CASE("aggregation identities: loss + delivered = 1, avg <= max") {
  std::vector<RunMetrics> runs(10);
  for (std::size_t r = 0; r < runs.size(); ++r) {
    if (r % 3 != 0) {
      MeshPdu pdu;
      pdu.origin = r % 2 ? OriginKind::Replica : OriginKind::Original;
      runs[r].record_delivery(pdu, millis_to_micros(10 + static_cast<int>(r)), 0,
                              static_cast<int>(r % 5) + 1);
    }
    runs[r].record_outcome(AdvChannel::Ch39, ReceiveOutcome::MissedBusy);
  }
  const auto a = aggregate_runs(runs, {}, 0, {}, {}, {});
  CHECK(a.replications == 10);
  CHECK(a.delivered == 6);
  CHECK(a.loss_rate + a.delivered_rate() == 1.0);
  CHECK(a.avg_delay_ms <= a.max_delay_ms);
  CHECK(a.loss_ci_low <= a.loss_rate);
  CHECK(a.loss_ci_high >= a.loss_rate);
  CHECK(a.via_original + a.via_replica == a.delivered);
  REQUIRE(a.congestion_probability);
  CHECK(*a.congestion_probability == 1.0);
}

TEST_CASE("binomial ci is symmetric and clamped") {
  const auto [lo, hi] = binomial_ci95(0.5, 100);
  CHECK(lo == Catch::Approx(0.5 - 1.96 * 0.05).margin(1e-3));
  CHECK(hi == Catch::Approx(0.5 + 1.96 * 0.05).margin(1e-3));
  const auto [lo0, hi0] = binomial_ci95(0.0, 100);
  CHECK(lo0 == 0.0);
  CHECK(hi0 == 0.0);
  const auto [lon, hin] = binomial_ci95(0.3, 0);
  CHECK(lon == 0.0);
  CHECK(hin == 1.0);
}

TEST_CASE("link traffic map lists nonzero directed links with coordinates") {
  std::vector<RunMetrics> runs(4);
  std::vector<std::uint64_t> links(9, 0);
  links[0 * 3 + 1] = 4;  // 1 -> 2 in every replication
  links[1 * 3 + 2] = 2;  // 2 -> 3 in half
  const auto a =
      aggregate_runs(runs, links, 3, {1, 2, 3}, {0.0, 8.0, 16.0}, {0.0, 0.0, 0.0});
  CHECK(a.link_intensity(0, 1) == 1.0);
  CHECK(a.link_intensity(1, 2) == 0.5);
  CHECK(a.link_intensity(2, 0) == 0.0);
  const auto rows = link_traffic_map(a);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].from == 1);
  CHECK(rows[0].to == 2);
  CHECK(rows[0].intensity == 1.0);
  CHECK(rows[0].x_to == 8.0);
  CHECK(rows[1].from == 2);
  CHECK(rows[1].to == 3);
}

TEST_CASE("summary json carries every aggregate field deterministically") {
  std::vector<RunMetrics> runs(3);
  MeshPdu pdu;
  runs[0].record_delivery(pdu, 1000, 0, 1);
  runs[0].record_outcome(AdvChannel::Ch37, ReceiveOutcome::Received);
  runs[1].record_outcome(AdvChannel::Ch38, ReceiveOutcome::MissedPer);
  const auto a = aggregate_runs(runs, {}, 0, {}, {}, {});
  const auto j = summary_to_json(a);
  CHECK(j["replications"] == 3);
  CHECK(j["delivered"] == 1);
  CHECK(j["per_channel"]["37"]["potential_receptions"] == 1);
  CHECK(j["per_channel"]["38"]["missed"] == 1);
  CHECK(j["receive_outcomes"]["missed_per"] == 1);
  // Dumping twice gives identical bytes.
  CHECK(j.dump() == summary_to_json(a).dump());
}

TEST_CASE("csv writers produce stable headers and one row per item") {
  namespace fs = std::filesystem;
  const auto dir = fs::temp_directory_path() / "blemesh_metrics_test";
  fs::create_directories(dir);

  std::vector<RunMetrics> runs(2);
  MeshPdu pdu;
  runs[1].record_delivery(pdu, 2500, 500, 2);
  const auto rep_path = (dir / "replications.csv").string();
  write_replications_csv(runs, rep_path);
  std::ifstream in(rep_path);
  std::string line;
  std::getline(in, line);
  CHECK(line.rfind("replication,delivered,delay_us,via,hop_count", 0) == 0);
  int rows = 0;
  while (std::getline(in, line))
    if (!line.empty()) ++rows;
  CHECK(rows == 2);

  std::vector<std::uint64_t> links(4, 0);
  links[1] = 2;
  const auto agg = aggregate_runs(runs, links, 2, {1, 2}, {0.0, 1.0}, {0.0, 0.0});
  const auto links_path = (dir / "links.csv").string();
  write_links_csv(agg, links_path);
  std::ifstream lin(links_path);
  std::getline(lin, line);
  CHECK(line == "from,to,x_from,y_from,x_to,y_to,intensity");
  std::getline(lin, line);
  CHECK(line == "1,2,0,0,1,0,1");
  fs::remove_all(dir);
}

TEST_CASE("format_double emits shortest round-trip forms") {
  CHECK(format_double(0.25) == "0.25");
  CHECK(format_double(1.0) == "1");
  CHECK(format_double(0.1) == "0.1");
  const double v = 0.03467161232456;
  CHECK(std::stod(format_double(v)) == v);
}
