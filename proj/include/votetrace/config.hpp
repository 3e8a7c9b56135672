#pragma once

#include "votetrace/network.hpp"
#include "votetrace/types.hpp"

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace votetrace {

/// Node counts of one scenario.
struct Topology {
  std::uint32_t relay_count = 20;
  std::uint32_t directory_count = 1;
  std::uint32_t client_count = 54;
  std::uint32_t visible_client_count = 20;
  std::uint32_t voter_count = 20;
  std::uint32_t bulk_client_count = 21;
  std::uint32_t file_server_count = 10;
  std::uint32_t web_server_count = 0;
  std::uint32_t ballot_box_count = 3;

  /// Throws ConfigError when counts are inconsistent.
  void validate() const;
};

enum class ClientModel { FileTransfer, Browser, VoteOnly };
std::string to_string(ClientModel m);
ClientModel parse_client_model(const std::string& text);

/// Packet counts of one vote exchange. Payload and confirmation packets travel
/// between exit relay and ballot box; the client side carries the vote in
/// `client_payload_cells` cells. Handshake, acknowledgement and teardown
/// packets stay on the exit-to-box connection.
struct VoteProtocolSpec {
  std::uint32_t payload_packets_client_to_box = 1;
  std::uint32_t confirmation_packets_box_to_client = 1;
  std::uint32_t handshake_packets = 0;
  std::uint32_t teardown_packets = 1;
  std::uint32_t client_payload_cells = 1;
  /// Box acknowledges every payload packet except the last one, whose
  /// acknowledgement is the confirmation itself.
  bool ack_per_payload = false;

  static VoteProtocolSpec minimal() { return {}; }
  /// Three payload packets, two of them acknowledged separately.
  static VoteProtocolSpec civitas();

  /// Packets of one exchange visible at the client access link and the box link.
  std::uint32_t visible_packets() const;
  void validate() const;
};

/// Page profile of one simulated web site.
struct WebProfile {
  std::string name;
  std::uint64_t page_bytes = 0;
  std::uint32_t object_count = 1;
};
/// Ten profiles standing in for a top-ten site list.
std::vector<WebProfile> default_web_profiles();

struct BehaviorConfig {
  ClientModel client_model = ClientModel::FileTransfer;
  std::uint64_t file_size_min_bytes = 1'000'000;
  std::uint64_t file_size_max_bytes = 5'000'000;
  Duration think_time_mean = 60 * kSecond;
  Duration bulk_think_time_mean = 1 * kSecond;
  Duration page_think_time_mean = 30 * kSecond;
  std::uint32_t cell_bytes = 512;
  std::uint32_t sendme_interval = 50;
  std::uint32_t window_cells = 100;
  std::uint32_t parallel_object_streams = 4;
  std::uint32_t directory_fetch_cells = 30;
  /// The client acknowledges every n-th downloaded data cell to its entry
  /// relay, like transport ACKs on the uplink. 0 disables.
  std::uint32_t data_ack_every = 2;
  std::vector<WebProfile> web_profiles = default_web_profiles();
};

struct CircuitConfig {
  std::uint32_t hops = 3;
  std::uint32_t setup_round_trips_per_hop = 2;
  bool fresh_vote_circuit = true;
};

struct NetworkConfig {
  Duration client_latency_min = 10 * kMillisecond;
  Duration client_latency_max = 40 * kMillisecond;
  Duration relay_latency_min = 5 * kMillisecond;
  Duration relay_latency_max = 30 * kMillisecond;
  Duration server_latency_min = 5 * kMillisecond;
  Duration server_latency_max = 20 * kMillisecond;
  JitterModel jitter = JitterModel::uniform(2 * kMillisecond);
  double client_bandwidth_min_pps = 150;
  double client_bandwidth_max_pps = 600;
  double relay_bandwidth_pps = 20'000;
  /// Ballot boxes and directories.
  double server_bandwidth_pps = 5'000;
  /// File and web servers, log-uniform per server.
  double content_bandwidth_min_pps = 5'000;
  double content_bandwidth_max_pps = 5'000;
};

enum class CaptureScope { Vantage, All };

struct ScenarioConfig {
  std::string name = "desk";
  std::uint64_t seed = 1;
  Duration duration = 10 * kMinute;
  Duration warmup = 5 * kMinute;
  /// Votes are cast uniformly in [warmup, duration - vote_margin].
  Duration vote_margin = 60 * kSecond;
  bool discard_warmup = false;
  CaptureScope capture_scope = CaptureScope::Vantage;

  Topology topology;
  BehaviorConfig behavior;
  CircuitConfig circuit;
  VoteProtocolSpec vote;
  NetworkConfig network;

  std::string log_path = "log.txt";
  std::string truth_path = "truth.tsv";
  std::string manifest_path = "manifest.json";

  /// Throws ConfigError on any inconsistency.
  void validate() const;

  SimTime active_start() const { return warmup; }
  SimTime vote_window_end() const { return duration - vote_margin; }

  /// Desk-sized: 20 relays, 54 clients, 10 simulated minutes.
  static ScenarioConfig desk_scale();
  /// About ten times the desk counts, one simulated hour.
  static ScenarioConfig full_scale();
  /// One vote-only client, one ballot box and the minimum relays, used to
  /// learn the pattern of `vote`.
  static ScenarioConfig toy(const VoteProtocolSpec& vote, std::uint64_t seed = 1);
};

/// Parses an INI-style scenario file. Every key is optional and falls back to
/// the desk-scale default; unknown sections or keys are a ConfigError.
ScenarioConfig parse_scenario(std::istream& in, const std::string& source = "<config>");
ScenarioConfig load_scenario(const std::string& path);
/// Canonical text form: every key, in schema order. parse_scenario(dump) == config.
std::string dump_scenario(const ScenarioConfig& config);

}  // namespace votetrace
