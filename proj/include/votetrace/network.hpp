#pragma once

#include "votetrace/capture.hpp"
#include "votetrace/engine.hpp"
#include "votetrace/rng.hpp"
#include "votetrace/types.hpp"

#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace votetrace {

struct JitterModel {
  enum class Kind { None, Uniform, Exponential };
  Kind kind = Kind::None;
  /// Upper bound for Uniform, mean for Exponential.
  Duration scale = 0;

  static JitterModel none() { return {}; }
  static JitterModel uniform(Duration max) { return {Kind::Uniform, max}; }
  static JitterModel exponential(Duration mean) { return {Kind::Exponential, mean}; }

  Duration sample(Rng& rng) const;
};

struct LinkParams {
  Duration base_latency = kMillisecond;
  JitterModel jitter;
  /// Packets per second in each direction; nullopt means uncapped.
  std::optional<double> bandwidth_pps;
  /// Whether deliveries on this link reach the capture sink.
  bool instrumented = false;
};

struct LinkId {
  std::uint32_t value = 0;
  friend constexpr auto operator<=>(LinkId, LinkId) = default;
};

/// Bidirectional point-to-point link. Each direction is an independent FIFO.
struct Link {
  NodeId a;
  NodeId b;
  LinkParams params;
  Duration serialization = 0;  // 0 when uncapped

  struct DirectionState {
    SimTime next_free = 0;
    std::optional<SimTime> last_arrival;
    std::uint64_t delivered = 0;
  };
  DirectionState forward;   // a -> b
  DirectionState backward;  // b -> a

  DirectionState& direction_from(NodeId from) { return from == a ? forward : backward; }
};

/// Point-to-point transport between nodes. Packets are delivered as
/// PacketArrival events on the engine; the simulation's dispatcher must hand
/// each arrival to on_arrival() before the receiving node sees it.
class Network {
 public:
  Network(Engine& engine, std::uint64_t master_seed);

  NodeId add_node(Address address);
  Address address_of(NodeId node) const { return addresses_.at(node.value); }
  std::size_t node_count() const { return addresses_.size(); }

  /// Creates the link between a and b. Throws std::invalid_argument for a
  /// non-positive latency, a self-loop or a duplicate link.
  LinkId connect(NodeId a, NodeId b, const LinkParams& params);
  std::optional<LinkId> find_link(NodeId a, NodeId b) const;
  const Link& link(LinkId id) const { return links_.at(id.value); }
  std::size_t link_count() const { return links_.size(); }

  /// Sends `packet` from `from` over `link` at `send_time` and schedules its
  /// arrival at the opposite endpoint. Returns the arrival time:
  /// send_time (or later, when the bandwidth cap queues it) + base latency +
  /// sampled jitter, clamped so arrivals per direction stay strictly FIFO.
  SimTime deliver(LinkId link, NodeId from, Packet packet, SimTime send_time);
  /// Convenience for deliver(find_link(from, to)).
  SimTime send(NodeId from, NodeId to, Packet packet, SimTime send_time);

  void on_arrival(const Event& ev);

  void set_sink(CaptureSink* sink) { sink_ = sink; }

  /// Records a deliberate drop by an actor.
  void drop(const Packet& packet, const std::string& cause);
  /// Accounts packets still in flight when the run stops as dropped.
  void finalize();

  std::uint64_t injected() const { return injected_; }
  std::uint64_t delivered() const { return delivered_; }
  std::uint64_t dropped() const { return dropped_; }
  std::uint64_t instrumented_delivered() const { return instrumented_delivered_; }
  const std::map<std::string, std::uint64_t>& drop_causes() const { return drop_causes_; }

 private:
  static std::uint64_t pair_key(NodeId a, NodeId b);

  Engine& engine_;
  std::uint64_t seed_;
  std::vector<Address> addresses_;
  std::vector<Link> links_;
  std::vector<Rng> link_rngs_;
  std::unordered_map<std::uint64_t, LinkId> by_pair_;
  CaptureSink* sink_ = nullptr;
  std::uint64_t next_packet_id_ = 1;
  std::uint64_t injected_ = 0;
  std::uint64_t delivered_ = 0;
  std::uint64_t dropped_ = 0;
  std::uint64_t instrumented_delivered_ = 0;
  bool finalized_ = false;
  std::map<std::string, std::uint64_t> drop_causes_;
};

}  // namespace votetrace
