#include "doctest.h"
#include "oracles.hpp"

#include "votetrace/capture.hpp"
#include "votetrace/trace_io.hpp"
#include "votetrace/truth.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace votetrace;

namespace {

Address ip(const char* text) { return *parse_address(text); }

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("votetrace_test_" + name)).string();
}

}  // namespace

TEST_CASE("addresses parse only as dotted quads") {
  CHECK(to_string(ip("10.1.2.3")) == "10.1.2.3");
  CHECK(ip("10.1.2.3") == Address::from_octets(10, 1, 2, 3));
  CHECK_FALSE(parse_address("10.1.2"));
  CHECK_FALSE(parse_address("10.1.2.256"));
  CHECK_FALSE(parse_address("relay-1"));
  CHECK_FALSE(parse_address("10.1.2.3 "));
}

TEST_CASE("capture sink refuses self-addressed packets and discards warm-up") {
  CaptureSink sink(100);
  sink.record(150, ip("10.0.0.1"), ip("10.0.0.2"));
  sink.record(50, ip("10.0.0.1"), ip("10.0.0.2"));
  sink.record(120, ip("10.0.0.2"), ip("10.0.0.1"));
  CHECK_THROWS_AS(sink.record(200, ip("10.0.0.1"), ip("10.0.0.1")), std::invalid_argument);
  CHECK(sink.observed() == 3);
  CHECK(sink.discarded() == 1);
  const auto recs = sink.take_sorted();
  REQUIRE(recs.size() == 2);
  CHECK(recs[0].time == 120);
  CHECK(sink.size() == 0);
}

TEST_CASE("filter_visible keeps exactly the records touching the vantage set") {
  Rng rng(17, 1);
  for (int round = 0; round < 100; ++round) {
    const auto log = oracle::random_log(rng, rng.uniform_int(0, 120), 12, 10 * kSecond);
    AddressSet clients, boxes;
    for (std::uint32_t a = 1; a <= 12; ++a) {
      const double u = rng.uniform01();
      if (u < 0.3) clients.insert(Address{0x0a000000u + a});
      else if (u < 0.45) boxes.insert(Address{0x0a000000u + a});
    }
    const AttackerView view = filter_visible(log, clients, boxes);
    REQUIRE(view.records == oracle::brute_filter(log, clients, boxes));
    REQUIRE(filter_visible(view).records == view.records);
  }
  CHECK_THROWS_AS(filter_visible({}, {ip("10.0.0.1")}, {ip("10.0.0.1")}), std::invalid_argument);
}

TEST_CASE("native log round-trips and rejects malformed lines") {
  Rng rng(5, 5);
  const auto log = oracle::random_log(rng, 300, 40, kSecond);
  std::stringstream ss;
  write_native_log(ss, log);
  CHECK(read_native_log(ss) == log);

  auto bad = [](const std::string& text) {
    std::istringstream in(text);
    return read_native_log(in, "bad.log");
  };
  CHECK_THROWS_AS(bad("5 10.0.0.1\n"), ParseError);
  CHECK_THROWS_AS(bad("x 10.0.0.1 10.0.0.2\n"), ParseError);
  CHECK_THROWS_AS(bad("5 relay1 10.0.0.2\n"), ParseError);
  CHECK_THROWS_AS(bad("5 10.0.0.1 10.0.0.1\n"), ParseError);
  CHECK_THROWS_WITH_AS(bad("5 10.0.0.1 10.0.0.2\n4 10.0.0.1 10.0.0.2\n"), doctest::Contains("bad.log:2"),
                       ParseError);
  CHECK(bad("5 10.0.0.1 10.0.0.2\n5 10.0.0.1 10.0.0.2\n").size() == 2);
  CHECK(bad("").empty());
}

TEST_CASE("capture files round-trip at nanosecond resolution") {
  Rng rng(6, 6);
  const auto log = oracle::random_log(rng, 500, 30, 5 * kSecond);
  std::stringstream ss;
  write_pcap(ss, log);
  CHECK(read_pcap(ss) == log);
}

TEST_CASE("capture files from a reference writer are read correctly") {
  const std::vector<PacketRecord> recs = {
      {1 * kSecond + 5 * kMicrosecond, ip("192.0.2.1"), ip("198.51.100.7")},
      {2 * kSecond, ip("198.51.100.7"), ip("192.0.2.1")},
      {2 * kSecond + 999'999 * kMicrosecond, ip("203.0.113.9"), ip("192.0.2.1")},
  };
  std::stringstream ss;
  oracle::write_reference_pcap_be_ethernet(ss, recs);
  const std::string bytes = ss.str();
  std::istringstream in(bytes);
  CHECK(read_pcap(in) == recs);

  const std::string path = temp_path("ref.pcap");
  {
    std::ofstream out(path, std::ios::binary);
    out << bytes;
  }
  CHECK(import_trace(path) == recs);
  CHECK(import_trace(path, TraceFormat::Pcap) == recs);

  std::istringstream truncated(bytes.substr(0, bytes.size() - 3));
  CHECK_THROWS_AS(read_pcap(truncated, "cut.pcap"), IngestError);
  std::istringstream short_header(bytes.substr(0, 10));
  CHECK_THROWS_AS(read_pcap(short_header), IngestError);
  std::istringstream not_pcap(std::string(64, 'x'));
  CHECK_THROWS_AS(read_pcap(not_pcap), IngestError);
  std::istringstream empty("");
  CHECK(read_pcap(empty).empty());
  std::filesystem::remove(path);
}

TEST_CASE("import sniffs native logs and sorts them") {
  const std::string path = temp_path("native.log");
  {
    std::ofstream out(path);
    out << "10 10.0.0.1 10.0.0.2\n20 10.0.0.2 10.0.0.1\n";
  }
  CHECK(import_trace(path).size() == 2);
  CHECK(import_trace(path, TraceFormat::Native).size() == 2);
  CHECK_THROWS(import_trace(path, TraceFormat::Pcap));
  CHECK_THROWS_AS(parse_trace_format("tcpdump"), std::invalid_argument);
  std::filesystem::remove(path);
}

TEST_CASE("endpoint and ground-truth files round-trip") {
  Endpoints e{{ip("10.10.0.1"), ip("10.10.0.2")}, {ip("10.50.0.1")}};
  std::stringstream ss;
  write_endpoints(ss, e);
  const Endpoints back = read_endpoints(ss);
  CHECK(back.visible_clients == e.visible_clients);
  CHECK(back.ballot_boxes == e.ballot_boxes);
  std::istringstream bad("voter 10.0.0.1\n");
  CHECK_THROWS_AS(read_endpoints(bad), ParseError);

  const std::vector<VoteRecord> votes = {{ip("10.10.0.2"), 900, ip("10.50.0.1")},
                                         {ip("10.10.0.1"), 100, ip("10.50.0.2")}};
  std::stringstream ts;
  write_ground_truth(ts, votes);
  const auto truth = read_ground_truth(ts);
  REQUIRE(truth.size() == 2);
  CHECK(truth[0].time == 100);
  CHECK(truth[1].client == ip("10.10.0.2"));
  std::istringstream bad_truth("10.10.0.1 100\n");
  CHECK_THROWS_AS(read_ground_truth(bad_truth), ParseError);
}

TEST_CASE("splice aligns both inputs and remaps colliding addresses") {
  const Address node = ip("192.0.2.1");
  const std::vector<PacketRecord> external = {
      {1000, ip("198.51.100.1"), node},
      {1500, node, ip("10.1.0.3")},
      {2500, ip("10.1.0.3"), node},
  };
  const std::vector<PacketRecord> boxes = {
      {50'000, ip("10.1.0.3"), ip("10.50.0.1")},
      {50'010, ip("10.50.0.1"), ip("10.1.0.3")},
  };
  SpliceOptions options;
  options.trace_nodes = {node};
  options.box_offset = 100;
  const SpliceResult r = splice(external, boxes, {ip("10.50.0.1")}, options);
  REQUIRE(r.remapped.size() == 1);
  CHECK(r.remapped[0].first == ip("10.1.0.3"));
  CHECK(r.remapped[0].second == ip("100.64.0.0"));
  CHECK(r.view.visible_clients == AddressSet{ip("198.51.100.1"), ip("100.64.0.0")});
  CHECK(r.view.ballot_boxes == AddressSet{ip("10.50.0.1")});
  REQUIRE(r.view.records.size() == 5);
  CHECK(r.view.records[0] == PacketRecord{0, ip("198.51.100.1"), node});
  CHECK(r.view.records[1] == PacketRecord{100, ip("10.1.0.3"), ip("10.50.0.1")});
  CHECK(r.view.records[2] == PacketRecord{110, ip("10.50.0.1"), ip("10.1.0.3")});
  CHECK(r.view.records[3] == PacketRecord{500, node, ip("100.64.0.0")});
  CHECK(is_log_ordered(r.view.records, false));
}
