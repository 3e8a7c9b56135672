#include "votetrace/network.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace votetrace {

Duration JitterModel::sample(Rng& rng) const {
  switch (kind) {
    case Kind::None:
      return 0;
    case Kind::Uniform:
      return scale == 0 ? 0 : rng.uniform_int(0, scale);
    case Kind::Exponential:
      return scale == 0 ? 0 : static_cast<Duration>(rng.exponential(static_cast<double>(scale)));
  }
  return 0;
}

Network::Network(Engine& engine, std::uint64_t master_seed) : engine_(engine), seed_(master_seed) {}

NodeId Network::add_node(Address address) {
  addresses_.push_back(address);
  return NodeId{static_cast<std::uint32_t>(addresses_.size() - 1)};
}

std::uint64_t Network::pair_key(NodeId a, NodeId b) {
  if (b < a) std::swap(a, b);
  return (std::uint64_t{a.value} << 32) | b.value;
}

LinkId Network::connect(NodeId a, NodeId b, const LinkParams& params) {
  if (a == b) throw std::invalid_argument("link endpoints must differ");
  if (a.value >= addresses_.size() || b.value >= addresses_.size()) {
    throw std::invalid_argument("link endpoint is not a known node");
  }
  if (params.base_latency == 0) throw std::invalid_argument("link base latency must be > 0");
  if (params.bandwidth_pps && !(*params.bandwidth_pps > 0.0)) {
    throw std::invalid_argument("link bandwidth cap must be > 0");
  }
  const std::uint64_t key = pair_key(a, b);
  if (by_pair_.contains(key)) throw std::invalid_argument("duplicate link");

  Link link;
  link.a = a;
  link.b = b;
  link.params = params;
  if (params.bandwidth_pps) {
    link.serialization = std::max<Duration>(1, static_cast<Duration>(std::llround(1e9 / *params.bandwidth_pps)));
  }
  LinkId id{static_cast<std::uint32_t>(links_.size())};
  links_.push_back(link);
  link_rngs_.emplace_back(seed_, stream::kLinkBase + key);
  by_pair_.emplace(key, id);
  return id;
}

std::optional<LinkId> Network::find_link(NodeId a, NodeId b) const {
  auto it = by_pair_.find(pair_key(a, b));
  if (it == by_pair_.end()) return std::nullopt;
  return it->second;
}

SimTime Network::deliver(LinkId id, NodeId from, Packet packet, SimTime send_time) {
  Link& link = links_.at(id.value);
  if (from != link.a && from != link.b) throw std::invalid_argument("sender is not an endpoint of the link");
  if (send_time < engine_.now()) throw std::logic_error("deliver(): send time lies in the past");

  const NodeId to = from == link.a ? link.b : link.a;
  Link::DirectionState& dir = link.direction_from(from);

  SimTime departure = send_time;
  if (link.serialization) {
    departure = std::max(departure, dir.next_free);
    dir.next_free = departure + link.serialization;
  }
  SimTime arrival = departure + link.params.base_latency + link.params.jitter.sample(link_rngs_[id.value]);
  if (dir.last_arrival && arrival <= *dir.last_arrival) arrival = *dir.last_arrival + 1;
  dir.last_arrival = arrival;

  packet.from = from;
  packet.to = to;
  packet.src = addresses_[from.value];
  packet.dst = addresses_[to.value];
  packet.id = next_packet_id_++;

  Event ev;
  ev.fire_time = arrival;
  ev.target = to;
  ev.kind = EventKind::PacketArrival;
  ev.tag = id.value;
  ev.packet = packet;
  engine_.schedule(std::move(ev));
  ++injected_;
  return arrival;
}

SimTime Network::send(NodeId from, NodeId to, Packet packet, SimTime send_time) {
  auto id = find_link(from, to);
  if (!id) {
    throw std::logic_error("no link between " + to_string(address_of(from)) + " and " +
                           to_string(address_of(to)));
  }
  return deliver(*id, from, packet, send_time);
}

void Network::on_arrival(const Event& ev) {
  Link& link = links_.at(ev.tag);
  ++delivered_;
  ++link.direction_from(ev.packet.from).delivered;
  if (link.params.instrumented) {
    ++instrumented_delivered_;
    if (sink_) sink_->record(ev.fire_time, ev.packet.src, ev.packet.dst);
  }
}

void Network::drop(const Packet&, const std::string& cause) {
  ++dropped_;
  ++drop_causes_[cause];
}

void Network::finalize() {
  if (finalized_) return;
  finalized_ = true;
  const std::size_t in_flight = engine_.pending(EventKind::PacketArrival);
  if (in_flight) {
    dropped_ += in_flight;
    drop_causes_["in flight at simulation end"] += in_flight;
  }
}

}  // namespace votetrace
