#pragma once

#include "votetrace/capture.hpp"
#include "votetrace/config.hpp"
#include "votetrace/engine.hpp"
#include "votetrace/network.hpp"
#include "votetrace/rng.hpp"
#include "votetrace/truth.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <vector>

namespace votetrace {

enum class NodeRole : std::uint8_t { Relay, Directory, Client, BulkClient, FileServer, WebServer, BallotBox };
std::string to_string(NodeRole role);

struct NodeInfo {
  NodeId id;
  Address address;
  NodeRole role = NodeRole::Relay;
  std::uint32_t role_index = 0;
  Duration access_latency = 0;
  double bandwidth_pps = 0;
  /// Site profile index, web servers only.
  std::uint32_t site = 0;
};

/// An onion-routed path owned by one client.
struct Circuit {
  std::uint32_t id = 0;
  NodeId owner;
  std::vector<NodeId> hops;
  SimTime requested_at = 0;
  std::optional<SimTime> established_at;
  // setup progress
  std::uint32_t setup_hop = 0;
  std::uint32_t setup_round_trip = 0;
};

enum class BehaviorKind { FileTransfer, Browser, Bulk, VoteOnly };
std::string to_string(BehaviorKind kind);

/// Traffic model of one client.
struct BehaviorModel {
  BehaviorKind kind = BehaviorKind::VoteOnly;
  Duration think_time_mean = 0;
  std::uint64_t size_min_bytes = 0;
  std::uint64_t size_max_bytes = 0;
  std::vector<WebProfile> sites;

  static BehaviorModel for_kind(BehaviorKind kind, const BehaviorConfig& config);
  /// Mean bytes fetched per request cycle (one file, or one page with all objects).
  double mean_transfer_bytes() const;
};

struct PlannedVote {
  NodeId client;
  NodeId box;
  SimTime at = 0;
};

struct SimulationStats {
  std::uint64_t events = 0;
  std::uint64_t packets_injected = 0;
  std::uint64_t packets_delivered = 0;
  std::uint64_t packets_dropped = 0;
  std::uint64_t instrumented_delivered = 0;
  std::uint64_t records_observed = 0;
  std::uint64_t records_kept = 0;
  std::uint64_t circuits_built = 0;
  std::uint64_t votes_cast = 0;
  std::uint64_t votes_confirmed = 0;
  std::uint64_t transfers_completed = 0;
};

struct SimulationResult {
  std::vector<PacketRecord> log;
  std::vector<VoteRecord> truth;
  AddressSet clients;
  AddressSet visible_clients;
  AddressSet ballot_boxes;
  AddressSet relays;
  SimulationStats stats;
};

/// One scenario run: topology, actors and the packet inspector.
///
/// The constructor builds the topology and schedules every behavior and vote
/// the configuration asks for; tests may add more with the public operations
/// before calling run().
class Simulation {
 public:
  explicit Simulation(ScenarioConfig config, std::unique_ptr<EventQueue> queue = nullptr,
                      bool schedule_configured_traffic = true);
  ~Simulation();
  Simulation(const Simulation&) = delete;
  Simulation& operator=(const Simulation&) = delete;

  const ScenarioConfig& config() const { return config_; }
  const std::vector<NodeInfo>& nodes() const { return nodes_; }
  const NodeInfo& node(NodeId id) const { return nodes_.at(id.value); }
  std::span<const NodeId> nodes_with_role(NodeRole role) const;
  std::span<const NodeId> voters() const { return voters_; }
  std::span<const NodeId> visible_clients() const { return visible_; }
  const std::vector<PlannedVote>& planned_votes() const { return planned_votes_; }
  const std::vector<Circuit>& circuits() const { return circuits_; }
  std::span<const VoteRecord> truth() const { return truth_; }

  Engine& engine() { return engine_; }
  Network& network() { return network_; }

  /// Starts building a circuit for `client`. Setup cells cross the access
  /// link like any other cell; `on_ready` runs once the last hop answered.
  /// Throws ConfigError when fewer relays than hops exist.
  std::uint32_t open_circuit(NodeId client, std::function<void(std::uint32_t)> on_ready = {});
  /// Schedules one vote exchange with `box` starting at `at`.
  void cast_vote(NodeId client, NodeId box, SimTime at, const VoteProtocolSpec& spec);
  /// Drives `client` with `model` from the end of warm-up until the run ends.
  void run_behavior(NodeId client, const BehaviorModel& model);

  /// Runs to the configured duration. Returns the number of events processed.
  std::uint64_t run();
  /// Collects log, truth and statistics. Call after run().
  SimulationResult result();

 private:
  struct Stream;
  struct ClientState;

  void build_topology();
  NodeId add_node(NodeRole role, std::uint32_t index, Rng& rng);
  LinkId ensure_link(NodeId a, NodeId b);
  void transmit(NodeId from, NodeId to, Packet packet);
  void dispatch(const Event& ev);

  void on_relay(NodeId self, const Packet& p);
  void on_exit(NodeId self, Circuit& c, std::size_t pos, const Packet& p);
  void on_exit_from_server(NodeId self, const Packet& p);
  void on_client(NodeId self, const Packet& p);
  void on_server(NodeId self, const Packet& p);
  void on_box(NodeId self, const Packet& p);
  void on_directory(NodeId self, const Packet& p);
  void on_action(const Event& ev);

  void send_forward(Circuit& c, std::uint16_t cell, std::uint32_t stream, std::uint32_t aux = 0);
  void send_setup_request(Circuit& c);
  void pump_server(Stream& s);
  void exit_send_payload(Stream& s);
  void start_stream(std::uint32_t stream_id);
  void request_on_main_circuit(ClientState& cs, std::uint32_t stream_id);
  std::uint32_t new_stream(std::uint8_t kind, NodeId client, NodeId server, std::uint64_t cells);
  void next_transfer(ClientState& cs);
  void start_page_objects(ClientState& cs);
  void stream_done(Stream& s);
  ClientState& client_state(NodeId node);
  std::uint64_t cells_for(std::uint64_t bytes) const;

  ScenarioConfig config_;
  Engine engine_;
  Network network_;
  CaptureSink sink_;
  Rng topology_rng_;

  std::vector<NodeInfo> nodes_;
  std::vector<std::vector<NodeId>> by_role_;
  std::vector<NodeId> voters_;
  std::vector<NodeId> visible_;
  std::vector<PlannedVote> planned_votes_;

  std::vector<Circuit> circuits_;
  std::vector<std::function<void(std::uint32_t)>> circuit_ready_;
  std::vector<Stream> streams_;
  std::vector<std::unique_ptr<ClientState>> client_states_;
  std::vector<std::int32_t> client_state_index_;
  std::vector<VoteProtocolSpec> vote_specs_;
  std::vector<VoteRecord> truth_;
  SimulationStats stats_;
  bool ran_ = false;
};

/// Builds, runs and collects one scenario.
SimulationResult simulate(const ScenarioConfig& config, std::unique_ptr<EventQueue> queue = nullptr);

}  // namespace votetrace
