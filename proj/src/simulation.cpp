#include "votetrace/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace votetrace {

namespace {

// Cells travel along circuits; the rest are plain packets on the exit-server
// and client-directory connections.
enum Cell : std::uint16_t {
  kSetupRequest = 1,
  kSetupReply = 2,
  kRequest = 3,
  kData = 4,
  kSendme = 5,
  kVote = 6,
  kConfirm = 7,
  kAccessAck = 8,

  kServerRequest = 10,
  kServerData = 11,
  kServerSendme = 12,

  kBoxHandshake = 20,
  kBoxHandshakeReply = 21,
  kBoxPayload = 22,
  kBoxAck = 23,
  kBoxConfirm = 24,
  kBoxTeardown = 25,

  kDirRequest = 30,
  kDirResponse = 31,
};

constexpr std::uint16_t kBackward = 1;

enum Action : std::uint64_t { kActDirectoryFetch = 1, kActNextTransfer = 2, kActVote = 3 };
constexpr std::uint64_t action_tag(Action a, std::uint64_t arg) { return (std::uint64_t{a} << 56) | arg; }

enum StreamKind : std::uint8_t { kDownload, kPageObject, kVoteStream };

std::uint8_t role_octet(NodeRole role) {
  switch (role) {
    case NodeRole::Relay:
      return 1;
    case NodeRole::Directory:
      return 2;
    case NodeRole::Client:
      return 10;
    case NodeRole::BulkClient:
      return 20;
    case NodeRole::FileServer:
      return 30;
    case NodeRole::WebServer:
      return 40;
    case NodeRole::BallotBox:
      return 50;
  }
  return 0;
}

/// Uniform sample of `count` distinct elements, in ascending order.
std::vector<NodeId> sample_without_replacement(std::span<const NodeId> from, std::size_t count, Rng& rng) {
  std::vector<NodeId> pool(from.begin(), from.end());
  count = std::min(count, pool.size());
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t j = rng.uniform_int(i, pool.size() - 1);
    std::swap(pool[i], pool[j]);
  }
  pool.resize(count);
  std::sort(pool.begin(), pool.end());
  return pool;
}

}  // namespace

std::string to_string(NodeRole role) {
  switch (role) {
    case NodeRole::Relay:
      return "relay";
    case NodeRole::Directory:
      return "directory";
    case NodeRole::Client:
      return "client";
    case NodeRole::BulkClient:
      return "bulk-client";
    case NodeRole::FileServer:
      return "file-server";
    case NodeRole::WebServer:
      return "web-server";
    case NodeRole::BallotBox:
      return "ballot-box";
  }
  return "?";
}

std::string to_string(BehaviorKind kind) {
  switch (kind) {
    case BehaviorKind::FileTransfer:
      return "file-transfer";
    case BehaviorKind::Browser:
      return "browser";
    case BehaviorKind::Bulk:
      return "bulk";
    case BehaviorKind::VoteOnly:
      return "vote-only";
  }
  return "?";
}

BehaviorModel BehaviorModel::for_kind(BehaviorKind kind, const BehaviorConfig& config) {
  BehaviorModel m;
  m.kind = kind;
  switch (kind) {
    case BehaviorKind::FileTransfer:
      m.think_time_mean = config.think_time_mean;
      m.size_min_bytes = config.file_size_min_bytes;
      m.size_max_bytes = config.file_size_max_bytes;
      break;
    case BehaviorKind::Bulk:
      m.think_time_mean = config.bulk_think_time_mean;
      m.size_min_bytes = config.file_size_min_bytes;
      m.size_max_bytes = config.file_size_max_bytes;
      break;
    case BehaviorKind::Browser:
      m.think_time_mean = config.page_think_time_mean;
      m.sites = config.web_profiles;
      break;
    case BehaviorKind::VoteOnly:
      break;
  }
  return m;
}

double BehaviorModel::mean_transfer_bytes() const {
  switch (kind) {
    case BehaviorKind::FileTransfer:
    case BehaviorKind::Bulk:
      return (static_cast<double>(size_min_bytes) + static_cast<double>(size_max_bytes)) / 2.0;
    case BehaviorKind::Browser: {
      if (sites.empty()) return 0;
      double total = 0;
      for (const auto& s : sites) total += static_cast<double>(s.page_bytes);
      return total / static_cast<double>(sites.size());
    }
    case BehaviorKind::VoteOnly:
      return 0;
  }
  return 0;
}

struct Simulation::Stream {
  std::uint32_t id = 0;
  std::uint8_t kind = kDownload;
  NodeId client;
  NodeId server;
  std::uint32_t circuit = 0;
  std::uint64_t total_cells = 0;
  std::uint64_t sent = 0;
  std::uint64_t credit = 0;
  std::uint64_t received = 0;
  std::uint32_t vote_spec = 0;
  std::uint32_t exit_vote_cells = 0;
  std::uint32_t handshake_replies = 0;
  std::uint32_t box_payloads = 0;
  std::uint32_t confirms_forwarded = 0;
  std::uint32_t client_confirms = 0;
};

struct Simulation::ClientState {
  NodeId node;
  Rng rng;
  BehaviorModel model;
  std::uint32_t main_circuit = 0;
  bool main_ready = false;
  bool main_building = false;
  std::vector<std::uint32_t> waiting;
  // browser page in progress
  NodeId page_server;
  std::uint64_t object_cells = 0;
  std::uint32_t objects_left = 0;
  std::uint32_t objects_active = 0;
  bool page_html = false;
  std::uint32_t data_since_ack = 0;

  ClientState(NodeId n, Rng r) : node(n), rng(r) {}
};

Simulation::Simulation(ScenarioConfig config, std::unique_ptr<EventQueue> queue, bool schedule_configured_traffic)
    : config_(std::move(config)),
      engine_(std::move(queue)),
      network_(engine_, config_.seed),
      sink_(config_.discard_warmup ? config_.warmup : 0),
      topology_rng_(config_.seed, stream::kTopology),
      by_role_(7) {
  config_.validate();
  network_.set_sink(&sink_);
  build_topology();
  if (!schedule_configured_traffic) return;

  Rng bootstrap(config_.seed, stream::kAux);
  const auto& dirs = nodes_with_role(NodeRole::Directory);
  for (NodeRole role : {NodeRole::Client, NodeRole::BulkClient}) {
    for (NodeId c : nodes_with_role(role)) {
      if (!dirs.empty() && config_.warmup > 0) {
        engine_.schedule_at(bootstrap.uniform_int(0, config_.warmup - 1), c, EventKind::Timer,
                            action_tag(kActDirectoryFetch, 0));
      }
    }
  }
  BehaviorKind client_kind = BehaviorKind::VoteOnly;
  switch (config_.behavior.client_model) {
    case ClientModel::FileTransfer:
      client_kind = BehaviorKind::FileTransfer;
      break;
    case ClientModel::Browser:
      client_kind = BehaviorKind::Browser;
      break;
    case ClientModel::VoteOnly:
      client_kind = BehaviorKind::VoteOnly;
      break;
  }
  const BehaviorModel client_model = BehaviorModel::for_kind(client_kind, config_.behavior);
  const BehaviorModel bulk_model = BehaviorModel::for_kind(BehaviorKind::Bulk, config_.behavior);
  for (NodeId c : nodes_with_role(NodeRole::Client)) run_behavior(c, client_model);
  for (NodeId c : nodes_with_role(NodeRole::BulkClient)) run_behavior(c, bulk_model);
  for (const PlannedVote& v : planned_votes_) cast_vote(v.client, v.box, v.at, config_.vote);
}

Simulation::~Simulation() = default;

std::span<const NodeId> Simulation::nodes_with_role(NodeRole role) const {
  return by_role_[static_cast<std::size_t>(role)];
}

NodeId Simulation::add_node(NodeRole role, std::uint32_t index, Rng& rng) {
  const std::uint32_t n = index + 1;
  const Address address = Address::from_octets(10, role_octet(role), static_cast<std::uint8_t>(n >> 8),
                                               static_cast<std::uint8_t>(n & 0xff));
  NodeInfo info;
  info.id = network_.add_node(address);
  info.address = address;
  info.role = role;
  info.role_index = index;
  const NetworkConfig& net = config_.network;
  switch (role) {
    case NodeRole::Client:
    case NodeRole::BulkClient:
      info.access_latency = rng.uniform_int(net.client_latency_min, net.client_latency_max);
      // Log-uniform: many slow access links, a few fast ones.
      info.bandwidth_pps = std::exp(rng.uniform(std::log(net.client_bandwidth_min_pps),
                                                std::log(net.client_bandwidth_max_pps)));
      break;
    case NodeRole::Relay:
      info.access_latency = rng.uniform_int(net.relay_latency_min, net.relay_latency_max);
      info.bandwidth_pps = net.relay_bandwidth_pps;
      break;
    case NodeRole::FileServer:
    case NodeRole::WebServer:
      info.access_latency = rng.uniform_int(net.server_latency_min, net.server_latency_max);
      info.bandwidth_pps = std::exp(rng.uniform(std::log(net.content_bandwidth_min_pps),
                                                std::log(net.content_bandwidth_max_pps)));
      break;
    default:
      info.access_latency = rng.uniform_int(net.server_latency_min, net.server_latency_max);
      info.bandwidth_pps = net.server_bandwidth_pps;
      break;
  }
  nodes_.push_back(info);
  by_role_[static_cast<std::size_t>(role)].push_back(info.id);
  return info.id;
}

void Simulation::build_topology() {
  const Topology& t = config_.topology;
  if (t.client_count > 65000 || t.relay_count > 65000 || t.bulk_client_count > 65000) {
    throw ConfigError("topology: at most 65000 nodes per role are addressable");
  }
  Rng& rng = topology_rng_;
  const std::pair<NodeRole, std::uint32_t> counts[] = {
      {NodeRole::Relay, t.relay_count},           {NodeRole::Directory, t.directory_count},
      {NodeRole::Client, t.client_count},         {NodeRole::BulkClient, t.bulk_client_count},
      {NodeRole::FileServer, t.file_server_count}, {NodeRole::WebServer, t.web_server_count},
      {NodeRole::BallotBox, t.ballot_box_count},
  };
  for (auto [role, count] : counts) {
    for (std::uint32_t i = 0; i < count; ++i) add_node(role, i, rng);
  }
  const auto& profiles = config_.behavior.web_profiles;
  for (NodeId w : nodes_with_role(NodeRole::WebServer)) {
    nodes_[w.value].site = static_cast<std::uint32_t>(rng.uniform_int(0, profiles.size() - 1));
  }

  client_state_index_.assign(nodes_.size(), -1);

  const auto clients = nodes_with_role(NodeRole::Client);
  voters_ = sample_without_replacement(clients, t.voter_count, rng);
  visible_ = sample_without_replacement(clients, t.visible_client_count, rng);

  const auto boxes = nodes_with_role(NodeRole::BallotBox);
  for (NodeId v : voters_) {
    PlannedVote plan;
    plan.client = v;
    plan.box = boxes[rng.uniform_int(0, boxes.size() - 1)];
    plan.at = rng.uniform_int(config_.active_start(), config_.vote_window_end());
    planned_votes_.push_back(plan);
  }
}

Simulation::ClientState& Simulation::client_state(NodeId node) {
  std::int32_t& idx = client_state_index_.at(node.value);
  if (idx < 0) {
    idx = static_cast<std::int32_t>(client_states_.size());
    client_states_.push_back(std::make_unique<ClientState>(node, Rng(config_.seed, stream::kNodeBase + node.value)));
  }
  return *client_states_[idx];
}

LinkId Simulation::ensure_link(NodeId a, NodeId b) {
  if (auto id = network_.find_link(a, b)) return *id;
  const NodeInfo& na = nodes_[a.value];
  const NodeInfo& nb = nodes_[b.value];
  LinkParams params;
  params.base_latency = na.access_latency + nb.access_latency;
  params.jitter = config_.network.jitter;
  params.bandwidth_pps = std::min(na.bandwidth_pps, nb.bandwidth_pps);
  auto vantage = [](NodeRole r) { return r == NodeRole::Client || r == NodeRole::BallotBox; };
  params.instrumented = config_.capture_scope == CaptureScope::All || vantage(na.role) || vantage(nb.role);
  return network_.connect(a, b, params);
}

void Simulation::transmit(NodeId from, NodeId to, Packet packet) {
  network_.deliver(ensure_link(from, to), from, packet, engine_.now());
}

std::uint64_t Simulation::cells_for(std::uint64_t bytes) const {
  const std::uint64_t cell = config_.behavior.cell_bytes;
  return std::max<std::uint64_t>(1, (bytes + cell - 1) / cell);
}

std::uint32_t Simulation::new_stream(std::uint8_t kind, NodeId client, NodeId server, std::uint64_t cells) {
  Stream s;
  s.id = static_cast<std::uint32_t>(streams_.size() + 1);
  s.kind = kind;
  s.client = client;
  s.server = server;
  s.total_cells = cells;
  streams_.push_back(s);
  return s.id;
}

// --- circuits --------------------------------------------------------------

std::uint32_t Simulation::open_circuit(NodeId client, std::function<void(std::uint32_t)> on_ready) {
  const auto relays = nodes_with_role(NodeRole::Relay);
  const std::uint32_t hops = config_.circuit.hops;
  if (relays.size() < hops) {
    throw ConfigError("open_circuit: " + std::to_string(hops) + " hops need that many relays, have " +
                      std::to_string(relays.size()));
  }
  ClientState& cs = client_state(client);
  // Partial Fisher-Yates keeps the hops distinct; the order is the path.
  std::vector<NodeId> pool(relays.begin(), relays.end());
  for (std::uint32_t i = 0; i < hops; ++i) {
    std::swap(pool[i], pool[cs.rng.uniform_int(i, pool.size() - 1)]);
  }
  Circuit c;
  c.id = static_cast<std::uint32_t>(circuits_.size() + 1);
  c.owner = client;
  c.hops.assign(pool.begin(), pool.begin() + hops);
  c.requested_at = engine_.now();
  circuits_.push_back(std::move(c));
  circuit_ready_.push_back(std::move(on_ready));

  Circuit& circuit = circuits_.back();
  const std::uint32_t id = circuit.id;
  if (config_.circuit.setup_round_trips_per_hop == 0) {
    circuit.established_at = engine_.now();
    ++stats_.circuits_built;
    if (circuit_ready_[id - 1]) circuit_ready_[id - 1](id);
  } else {
    send_setup_request(circuit);
  }
  return id;
}

void Simulation::send_forward(Circuit& c, std::uint16_t cell, std::uint32_t stream, std::uint32_t aux) {
  Packet p;
  p.circuit = c.id;
  p.cell = cell;
  p.stream = stream;
  p.aux = aux;
  transmit(c.owner, c.hops.front(), p);
}

void Simulation::send_setup_request(Circuit& c) { send_forward(c, kSetupRequest, 0, c.setup_hop); }

// --- votes and behaviors ----------------------------------------------------

void Simulation::cast_vote(NodeId client, NodeId box, SimTime at, const VoteProtocolSpec& spec) {
  if (nodes_.at(box.value).role != NodeRole::BallotBox) throw std::invalid_argument("cast_vote: not a ballot box");
  if (at < config_.warmup) throw std::invalid_argument("cast_vote: votes start after warm-up");
  spec.validate();
  vote_specs_.push_back(spec);
  const std::uint32_t sid = new_stream(kVoteStream, client, box, 0);
  streams_[sid - 1].vote_spec = static_cast<std::uint32_t>(vote_specs_.size() - 1);
  engine_.schedule_at(at, client, EventKind::BehaviorTrigger, action_tag(kActVote, sid));
}

void Simulation::run_behavior(NodeId client, const BehaviorModel& model) {
  ClientState& cs = client_state(client);
  cs.model = model;
  SimTime first = config_.warmup;
  switch (model.kind) {
    case BehaviorKind::VoteOnly:
      return;
    case BehaviorKind::Bulk:
      first += cs.rng.uniform_int(0, kSecond);
      break;
    case BehaviorKind::FileTransfer:
    case BehaviorKind::Browser:
      first += static_cast<Duration>(cs.rng.exponential(static_cast<double>(model.think_time_mean)));
      break;
  }
  if (first < config_.duration) {
    engine_.schedule_at(first, client, EventKind::BehaviorTrigger, action_tag(kActNextTransfer, 0));
  }
}

void Simulation::request_on_main_circuit(ClientState& cs, std::uint32_t stream_id) {
  if (cs.main_ready) {
    streams_[stream_id - 1].circuit = cs.main_circuit;
    start_stream(stream_id);
    return;
  }
  cs.waiting.push_back(stream_id);
  if (cs.main_building) return;
  cs.main_building = true;
  open_circuit(cs.node, [this, &cs](std::uint32_t cid) {
    cs.main_circuit = cid;
    cs.main_ready = true;
    cs.main_building = false;
    std::vector<std::uint32_t> waiting;
    waiting.swap(cs.waiting);
    for (std::uint32_t sid : waiting) {
      streams_[sid - 1].circuit = cid;
      start_stream(sid);
    }
  });
}

void Simulation::start_stream(std::uint32_t stream_id) {
  Stream& s = streams_[stream_id - 1];
  Circuit& c = circuits_[s.circuit - 1];
  if (s.kind != kVoteStream) {
    send_forward(c, kRequest, s.id);
    return;
  }
  const VoteProtocolSpec& spec = vote_specs_[s.vote_spec];
  truth_.push_back({nodes_[s.client.value].address, engine_.now(), nodes_[s.server.value].address});
  ++stats_.votes_cast;
  for (std::uint32_t i = 0; i < spec.client_payload_cells; ++i) send_forward(c, kVote, s.id, i);
}

void Simulation::next_transfer(ClientState& cs) {
  switch (cs.model.kind) {
    case BehaviorKind::VoteOnly:
      return;
    case BehaviorKind::FileTransfer:
    case BehaviorKind::Bulk: {
      const auto servers = nodes_with_role(NodeRole::FileServer);
      const NodeId server = servers[cs.rng.uniform_int(0, servers.size() - 1)];
      const std::uint64_t bytes = cs.rng.uniform_int(cs.model.size_min_bytes, cs.model.size_max_bytes);
      request_on_main_circuit(cs, new_stream(kDownload, cs.node, server, cells_for(bytes)));
      return;
    }
    case BehaviorKind::Browser: {
      const auto servers = nodes_with_role(NodeRole::WebServer);
      cs.page_server = servers[cs.rng.uniform_int(0, servers.size() - 1)];
      const WebProfile& site = cs.model.sites.at(nodes_[cs.page_server.value].site % cs.model.sites.size());
      cs.object_cells = cells_for(site.page_bytes / site.object_count);
      cs.objects_left = site.object_count - 1;
      cs.objects_active = 1;
      cs.page_html = true;
      request_on_main_circuit(cs, new_stream(kPageObject, cs.node, cs.page_server, cs.object_cells));
      return;
    }
  }
}

void Simulation::start_page_objects(ClientState& cs) {
  const std::uint32_t parallel = config_.behavior.parallel_object_streams;
  while (cs.objects_left > 0 && cs.objects_active < parallel) {
    --cs.objects_left;
    ++cs.objects_active;
    request_on_main_circuit(cs, new_stream(kPageObject, cs.node, cs.page_server, cs.object_cells));
  }
}

void Simulation::stream_done(Stream& s) {
  ++stats_.transfers_completed;
  ClientState& cs = client_state(s.client);
  bool cycle_done = s.kind == kDownload;
  if (s.kind == kPageObject) {
    --cs.objects_active;
    cs.page_html = false;
    start_page_objects(cs);
    cycle_done = cs.objects_active == 0 && cs.objects_left == 0;
  }
  if (!cycle_done) return;
  const SimTime next =
      engine_.now() + static_cast<Duration>(cs.rng.exponential(static_cast<double>(cs.model.think_time_mean)));
  if (next < config_.duration) {
    engine_.schedule_at(next, cs.node, EventKind::BehaviorTrigger, action_tag(kActNextTransfer, 0));
  }
}

// --- event handling ---------------------------------------------------------

void Simulation::dispatch(const Event& ev) {
  if (ev.kind != EventKind::PacketArrival) {
    on_action(ev);
    return;
  }
  network_.on_arrival(ev);
  const NodeId self = ev.target;
  switch (nodes_[self.value].role) {
    case NodeRole::Relay:
      on_relay(self, ev.packet);
      break;
    case NodeRole::Client:
    case NodeRole::BulkClient:
      on_client(self, ev.packet);
      break;
    case NodeRole::FileServer:
    case NodeRole::WebServer:
      on_server(self, ev.packet);
      break;
    case NodeRole::BallotBox:
      on_box(self, ev.packet);
      break;
    case NodeRole::Directory:
      on_directory(self, ev.packet);
      break;
  }
}

void Simulation::on_action(const Event& ev) {
  const auto action = static_cast<Action>(ev.tag >> 56);
  const std::uint64_t arg = ev.tag & ((std::uint64_t{1} << 56) - 1);
  ClientState& cs = client_state(ev.target);
  switch (action) {
    case kActDirectoryFetch: {
      const auto dirs = nodes_with_role(NodeRole::Directory);
      Packet p;
      p.cell = kDirRequest;
      transmit(cs.node, dirs[cs.rng.uniform_int(0, dirs.size() - 1)], p);
      break;
    }
    case kActNextTransfer:
      next_transfer(cs);
      break;
    case kActVote: {
      const auto sid = static_cast<std::uint32_t>(arg);
      if (config_.circuit.fresh_vote_circuit) {
        open_circuit(cs.node, [this, sid](std::uint32_t cid) {
          streams_[sid - 1].circuit = cid;
          start_stream(sid);
        });
      } else {
        request_on_main_circuit(cs, sid);
      }
      break;
    }
  }
}

void Simulation::on_relay(NodeId self, const Packet& p) {
  if (p.cell >= kServerRequest) {
    on_exit_from_server(self, p);
    return;
  }
  if (p.cell == kAccessAck) return;  // consumed by the entry relay
  Circuit& c = circuits_.at(p.circuit - 1);
  const auto it = std::find(c.hops.begin(), c.hops.end(), self);
  if (it == c.hops.end()) {
    network_.drop(p, "cell for unknown circuit");
    return;
  }
  const auto pos = static_cast<std::size_t>(it - c.hops.begin());
  Packet out = p;
  if (p.flags & kBackward) {
    transmit(self, pos == 0 ? c.owner : c.hops[pos - 1], out);
    return;
  }
  if (p.cell == kSetupRequest && p.aux == pos) {
    out.cell = kSetupReply;
    out.flags = kBackward;
    transmit(self, pos == 0 ? c.owner : c.hops[pos - 1], out);
    return;
  }
  if (pos + 1 < c.hops.size()) {
    transmit(self, c.hops[pos + 1], out);
    return;
  }
  on_exit(self, c, pos, p);
}

void Simulation::on_exit(NodeId self, Circuit&, std::size_t, const Packet& p) {
  Stream& s = streams_.at(p.stream - 1);
  Packet out;
  out.stream = s.id;
  out.circuit = s.circuit;
  switch (p.cell) {
    case kRequest:
      out.cell = kServerRequest;
      transmit(self, s.server, out);
      break;
    case kSendme:
      out.cell = kServerSendme;
      transmit(self, s.server, out);
      break;
    case kVote: {
      const VoteProtocolSpec& spec = vote_specs_[s.vote_spec];
      if (++s.exit_vote_cells < spec.client_payload_cells) break;
      if (spec.handshake_packets > 0) {
        out.cell = kBoxHandshake;
        for (std::uint32_t i = 0; i < spec.handshake_packets; ++i) transmit(self, s.server, out);
      } else {
        exit_send_payload(s);
      }
      break;
    }
    default:
      network_.drop(p, "unexpected cell at exit");
  }
}

void Simulation::exit_send_payload(Stream& s) {
  const VoteProtocolSpec& spec = vote_specs_[s.vote_spec];
  const NodeId exit = circuits_[s.circuit - 1].hops.back();
  Packet out;
  out.stream = s.id;
  out.circuit = s.circuit;
  out.cell = kBoxPayload;
  for (std::uint32_t i = 0; i < spec.payload_packets_client_to_box; ++i) {
    out.aux = i;
    transmit(exit, s.server, out);
  }
}

void Simulation::on_exit_from_server(NodeId self, const Packet& p) {
  Stream& s = streams_.at(p.stream - 1);
  Circuit& c = circuits_.at(s.circuit - 1);
  const std::size_t pos = c.hops.size() - 1;
  const NodeId toward_client = pos == 0 ? c.owner : c.hops[pos - 1];
  Packet cell;
  cell.circuit = c.id;
  cell.stream = s.id;
  cell.flags = kBackward;
  switch (p.cell) {
    case kServerData:
      cell.cell = kData;
      transmit(self, toward_client, cell);
      break;
    case kBoxHandshakeReply:
      if (++s.handshake_replies == vote_specs_[s.vote_spec].handshake_packets) exit_send_payload(s);
      break;
    case kBoxAck:
      break;
    case kBoxConfirm: {
      const VoteProtocolSpec& spec = vote_specs_[s.vote_spec];
      cell.cell = kConfirm;
      transmit(self, toward_client, cell);
      if (++s.confirms_forwarded == spec.confirmation_packets_box_to_client) {
        Packet bye;
        bye.stream = s.id;
        bye.circuit = s.circuit;
        bye.cell = kBoxTeardown;
        for (std::uint32_t i = 0; i < spec.teardown_packets; ++i) transmit(self, s.server, bye);
      }
      break;
    }
    default:
      network_.drop(p, "unexpected packet at exit");
  }
}

void Simulation::on_client(NodeId self, const Packet& p) {
  switch (p.cell) {
    case kSetupReply: {
      Circuit& c = circuits_.at(p.circuit - 1);
      if (++c.setup_round_trip == config_.circuit.setup_round_trips_per_hop) {
        c.setup_round_trip = 0;
        ++c.setup_hop;
      }
      if (c.setup_hop < c.hops.size()) {
        send_setup_request(c);
        return;
      }
      c.established_at = engine_.now();
      ++stats_.circuits_built;
      if (auto& ready = circuit_ready_[c.id - 1]) {
        auto callback = std::move(ready);
        ready = nullptr;
        callback(c.id);
      }
      return;
    }
    case kData: {
      Stream& s = streams_.at(p.stream - 1);
      ClientState& cs = client_state(self);
      if (config_.behavior.data_ack_every > 0 && ++cs.data_since_ack == config_.behavior.data_ack_every) {
        cs.data_since_ack = 0;
        Packet ack;
        ack.circuit = p.circuit;
        ack.cell = kAccessAck;
        transmit(self, p.from, ack);
      }
      ++s.received;
      if (s.received == s.total_cells) {
        stream_done(s);
      } else if (s.received % config_.behavior.sendme_interval == 0) {
        send_forward(circuits_[s.circuit - 1], kSendme, s.id);
      }
      return;
    }
    case kConfirm: {
      Stream& s = streams_.at(p.stream - 1);
      if (++s.client_confirms == vote_specs_[s.vote_spec].confirmation_packets_box_to_client) {
        ++stats_.votes_confirmed;
      }
      return;
    }
    case kDirResponse:
      return;
    default:
      network_.drop(p, "unexpected packet at client");
  }
}

void Simulation::pump_server(Stream& s) {
  const NodeId exit = circuits_[s.circuit - 1].hops.back();
  const std::uint64_t window = config_.behavior.window_cells;
  Packet out;
  out.stream = s.id;
  out.circuit = s.circuit;
  out.cell = kServerData;
  while (s.sent < s.total_cells && s.sent < window + s.credit) {
    transmit(s.server, exit, out);
    ++s.sent;
  }
}

void Simulation::on_server(NodeId, const Packet& p) {
  Stream& s = streams_.at(p.stream - 1);
  switch (p.cell) {
    case kServerRequest:
      pump_server(s);
      break;
    case kServerSendme:
      s.credit += config_.behavior.sendme_interval;
      pump_server(s);
      break;
    default:
      network_.drop(p, "unexpected packet at server");
  }
}

void Simulation::on_box(NodeId self, const Packet& p) {
  Stream& s = streams_.at(p.stream - 1);
  const VoteProtocolSpec& spec = vote_specs_[s.vote_spec];
  Packet out;
  out.stream = s.id;
  out.circuit = s.circuit;
  switch (p.cell) {
    case kBoxHandshake:
      out.cell = kBoxHandshakeReply;
      transmit(self, p.from, out);
      break;
    case kBoxPayload:
      ++s.box_payloads;
      if (s.box_payloads < spec.payload_packets_client_to_box) {
        if (spec.ack_per_payload) {
          out.cell = kBoxAck;
          transmit(self, p.from, out);
        }
      } else if (s.box_payloads == spec.payload_packets_client_to_box) {
        out.cell = kBoxConfirm;
        for (std::uint32_t i = 0; i < spec.confirmation_packets_box_to_client; ++i) transmit(self, p.from, out);
      }
      break;
    case kBoxTeardown:
      break;
    default:
      network_.drop(p, "unexpected packet at ballot box");
  }
}

void Simulation::on_directory(NodeId self, const Packet& p) {
  if (p.cell != kDirRequest) {
    network_.drop(p, "unexpected packet at directory");
    return;
  }
  Packet out;
  out.cell = kDirResponse;
  for (std::uint32_t i = 0; i < config_.behavior.directory_fetch_cells; ++i) transmit(self, p.from, out);
}

std::uint64_t Simulation::run() {
  if (ran_) throw std::logic_error("Simulation::run() called twice");
  ran_ = true;
  const std::uint64_t n = engine_.run(config_.duration, [this](const Event& ev) { dispatch(ev); });
  network_.finalize();
  return n;
}

SimulationResult Simulation::result() {
  SimulationResult r;
  r.stats = stats_;
  r.stats.events = engine_.processed();
  r.stats.packets_injected = network_.injected();
  r.stats.packets_delivered = network_.delivered();
  r.stats.packets_dropped = network_.dropped();
  r.stats.instrumented_delivered = network_.instrumented_delivered();
  r.stats.records_observed = sink_.observed();
  r.log = sink_.take_sorted();
  r.stats.records_kept = r.log.size();
  r.truth = truth_;
  std::sort(r.truth.begin(), r.truth.end(),
            [](const VoteRecord& a, const VoteRecord& b) { return std::tie(a.time, a.client, a.box) < std::tie(b.time, b.client, b.box); });
  for (NodeId c : nodes_with_role(NodeRole::Client)) r.clients.insert(nodes_[c.value].address);
  for (NodeId c : visible_) r.visible_clients.insert(nodes_[c.value].address);
  for (NodeId b : nodes_with_role(NodeRole::BallotBox)) r.ballot_boxes.insert(nodes_[b.value].address);
  for (NodeId x : nodes_with_role(NodeRole::Relay)) r.relays.insert(nodes_[x.value].address);
  return r;
}

SimulationResult simulate(const ScenarioConfig& config, std::unique_ptr<EventQueue> queue) {
  Simulation sim(config, std::move(queue));
  sim.run();
  return sim.result();
}

}  // namespace votetrace
