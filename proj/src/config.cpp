#include "votetrace/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

namespace votetrace {

namespace pt = boost::property_tree;

void Topology::validate() const {
  if (voter_count > client_count) throw ConfigError("topology: voters exceed clients");
  if (visible_client_count > client_count) throw ConfigError("topology: visible clients exceed clients");
  if (ballot_box_count < 1) throw ConfigError("topology: at least one ballot box is required");
  if (relay_count < 1) throw ConfigError("topology: at least one relay is required");
}

std::string to_string(ClientModel m) {
  switch (m) {
    case ClientModel::FileTransfer:
      return "file-transfer";
    case ClientModel::Browser:
      return "browser";
    case ClientModel::VoteOnly:
      return "vote-only";
  }
  return "?";
}

ClientModel parse_client_model(const std::string& text) {
  if (text == "file-transfer") return ClientModel::FileTransfer;
  if (text == "browser") return ClientModel::Browser;
  if (text == "vote-only") return ClientModel::VoteOnly;
  throw ConfigError("unknown client model '" + text + "' (file-transfer|browser|vote-only)");
}

VoteProtocolSpec VoteProtocolSpec::civitas() {
  VoteProtocolSpec spec;
  spec.payload_packets_client_to_box = 3;
  spec.ack_per_payload = true;
  return spec;
}

std::uint32_t VoteProtocolSpec::visible_packets() const {
  const std::uint32_t acks = ack_per_payload && payload_packets_client_to_box > 0
                                 ? payload_packets_client_to_box - 1
                                 : 0;
  return client_payload_cells + payload_packets_client_to_box + acks + confirmation_packets_box_to_client * 2 +
         handshake_packets * 2 + teardown_packets;
}

void VoteProtocolSpec::validate() const {
  if (client_payload_cells < 1) throw ConfigError("vote: client_payload_cells must be >= 1");
  if (payload_packets_client_to_box < 1) throw ConfigError("vote: payload_packets must be >= 1");
  if (payload_packets_client_to_box > 1000 || confirmation_packets_box_to_client > 1000 ||
      handshake_packets > 1000 || teardown_packets > 1000 || client_payload_cells > 1000) {
    throw ConfigError("vote: packet counts must stay below 1000");
  }
}

std::vector<WebProfile> default_web_profiles() {
  // Rough 2014-era page weights; only the traffic shape matters.
  return {
      {"search", 120'000, 8},   {"social", 550'000, 40},  {"video", 1'400'000, 45},
      {"portal", 1'900'000, 90}, {"search-cn", 150'000, 12}, {"encyclopedia", 300'000, 20},
      {"microblog", 700'000, 35}, {"portal-cn", 1'600'000, 110}, {"shop-cn", 1'500'000, 80},
      {"shop", 2'000'000, 95},
  };
}

void ScenarioConfig::validate() const {
  topology.validate();
  vote.validate();
  if (duration == 0) throw ConfigError("simulation: duration must be > 0");
  if (warmup >= duration) throw ConfigError("simulation: warmup must end before the simulation does");
  if (vote_margin >= duration - warmup) throw ConfigError("simulation: vote margin leaves no voting window");
  if (circuit.hops < 1) throw ConfigError("circuit: hops must be >= 1");
  if (circuit.hops > topology.relay_count) {
    throw ConfigError("circuit: " + std::to_string(circuit.hops) + " hops need at least that many relays, have " +
                      std::to_string(topology.relay_count));
  }
  if (behavior.file_size_min_bytes > behavior.file_size_max_bytes || behavior.file_size_min_bytes == 0) {
    throw ConfigError("behavior: file size bounds invalid");
  }
  if (behavior.cell_bytes == 0) throw ConfigError("behavior: cell_bytes must be > 0");
  if (behavior.sendme_interval == 0) throw ConfigError("behavior: sendme_interval must be > 0");
  if (behavior.window_cells < behavior.sendme_interval) {
    throw ConfigError("behavior: window_cells must be >= sendme_interval");
  }
  if (behavior.parallel_object_streams == 0) throw ConfigError("behavior: parallel_object_streams must be > 0");
  if (behavior.client_model == ClientModel::Browser && topology.web_server_count == 0 &&
      topology.client_count > 0) {
    throw ConfigError("behavior: browser model needs web servers");
  }
  if (behavior.web_profiles.empty()) throw ConfigError("web: at least one site profile is required");
  const bool downloads = (behavior.client_model == ClientModel::FileTransfer && topology.client_count > 0) ||
                         topology.bulk_client_count > 0;
  if (downloads && topology.file_server_count == 0) {
    throw ConfigError("topology: file transfers need at least one file server");
  }
  const auto& n = network;
  if (n.client_latency_min == 0 || n.relay_latency_min == 0 || n.server_latency_min == 0) {
    throw ConfigError("network: latencies must be > 0");
  }
  if (n.client_latency_min > n.client_latency_max || n.relay_latency_min > n.relay_latency_max ||
      n.server_latency_min > n.server_latency_max) {
    throw ConfigError("network: latency ranges must have min <= max");
  }
  if (!(n.client_bandwidth_min_pps > 0) || n.client_bandwidth_min_pps > n.client_bandwidth_max_pps ||
      !(n.relay_bandwidth_pps > 0) || !(n.server_bandwidth_pps > 0) || !(n.content_bandwidth_min_pps > 0) ||
      n.content_bandwidth_min_pps > n.content_bandwidth_max_pps) {
    throw ConfigError("network: bandwidth caps must be positive with min <= max");
  }
}

ScenarioConfig ScenarioConfig::desk_scale() { return ScenarioConfig{}; }

ScenarioConfig ScenarioConfig::full_scale() {
  ScenarioConfig c;
  c.name = "full";
  c.duration = 60 * kMinute;
  c.warmup = 30 * kMinute;
  c.topology = {195, 3, 540, 200, 200, 210, 100, 0, 10};
  return c;
}

ScenarioConfig ScenarioConfig::toy(const VoteProtocolSpec& vote, std::uint64_t seed) {
  ScenarioConfig c;
  c.name = "toy";
  c.seed = seed;
  c.duration = 3 * kMinute;
  c.warmup = 1 * kMinute;
  c.vote_margin = 60 * kSecond;
  c.topology = {3, 1, 1, 1, 1, 0, 0, 0, 1};
  c.behavior.client_model = ClientModel::VoteOnly;
  c.vote = vote;
  c.network.jitter = JitterModel::none();
  return c;
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::uint64_t parse_u64(const std::string& text) {
  std::uint64_t v = 0;
  auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || p != text.data() + text.size()) throw ConfigError("expected an unsigned integer, got '" + text + "'");
  return v;
}

std::uint32_t parse_u32(const std::string& text) {
  const std::uint64_t v = parse_u64(text);
  if (v > 0xffffffffull) throw ConfigError("value out of range: " + text);
  return static_cast<std::uint32_t>(v);
}

double parse_double(const std::string& text) {
  std::istringstream in(text);
  double v = 0;
  in >> v;
  if (!in || !in.eof()) throw ConfigError("expected a number, got '" + text + "'");
  return v;
}

bool parse_bool(const std::string& text) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw ConfigError("expected true/false, got '" + text + "'");
}

/// Exact decimal -> integer scaling, e.g. ("1.5", 9) -> 1500000000.
std::uint64_t parse_scaled(const std::string& text, int digits) {
  const auto dot = text.find('.');
  const std::string whole = text.substr(0, dot);
  std::string frac = dot == std::string::npos ? std::string{} : text.substr(dot + 1);
  if (whole.empty() && frac.empty()) throw ConfigError("expected a decimal number, got '" + text + "'");
  if (static_cast<int>(frac.size()) > digits) {
    if (frac.find_first_not_of('0', digits) != std::string::npos) {
      throw ConfigError("too many decimal places in '" + text + "'");
    }
    frac.resize(digits);
  }
  frac.append(digits - frac.size(), '0');
  std::uint64_t scale = 1;
  for (int i = 0; i < digits; ++i) scale *= 10;
  const std::uint64_t w = whole.empty() ? 0 : parse_u64(whole);
  const std::uint64_t f = frac.empty() ? 0 : parse_u64(frac);
  return w * scale + f;
}

std::string format_scaled(std::uint64_t value, int digits) {
  std::uint64_t scale = 1;
  for (int i = 0; i < digits; ++i) scale *= 10;
  std::string frac = std::to_string(value % scale);
  frac.insert(0, digits - frac.size(), '0');
  while (!frac.empty() && frac.back() == '0') frac.pop_back();
  return std::to_string(value / scale) + (frac.empty() ? "" : "." + frac);
}

std::string format_double(double v) {
  std::ostringstream out;
  out.precision(17);
  out << v;
  return out.str();
}

std::string format_jitter(const JitterModel& j) {
  switch (j.kind) {
    case JitterModel::Kind::None:
      return "none";
    case JitterModel::Kind::Uniform:
      return "uniform";
    case JitterModel::Kind::Exponential:
      return "exponential";
  }
  return "none";
}

std::string format_profiles(const std::vector<WebProfile>& profiles) {
  std::string out;
  for (const auto& p : profiles) {
    if (!out.empty()) out += ", ";
    out += p.name + ":" + std::to_string(p.page_bytes) + ":" + std::to_string(p.object_count);
  }
  return out;
}

std::vector<WebProfile> parse_profiles(const std::string& text) {
  std::vector<WebProfile> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    const auto a = item.find(':');
    const auto b = item.find(':', a == std::string::npos ? a : a + 1);
    if (a == std::string::npos || b == std::string::npos) {
      throw ConfigError("web site profile must be name:page_bytes:objects, got '" + item + "'");
    }
    WebProfile p;
    p.name = item.substr(0, a);
    p.page_bytes = parse_u64(item.substr(a + 1, b - a - 1));
    p.object_count = parse_u32(item.substr(b + 1));
    if (p.object_count == 0 || p.page_bytes == 0) throw ConfigError("web site profile '" + p.name + "' is empty");
    out.push_back(p);
  }
  return out;
}

struct Field {
  const char* section;
  const char* key;
  std::function<void(ScenarioConfig&, const std::string&)> set;
  std::function<std::string(const ScenarioConfig&)> get;
};

#define VT_U32(sec, key, member)                                                    \
  Field {                                                                           \
    sec, key, [](ScenarioConfig& c, const std::string& v) { c.member = parse_u32(v); }, \
        [](const ScenarioConfig& c) { return std::to_string(c.member); }            \
  }
#define VT_U64(sec, key, member)                                                    \
  Field {                                                                           \
    sec, key, [](ScenarioConfig& c, const std::string& v) { c.member = parse_u64(v); }, \
        [](const ScenarioConfig& c) { return std::to_string(c.member); }            \
  }
#define VT_BOOL(sec, key, member)                                                      \
  Field {                                                                              \
    sec, key, [](ScenarioConfig& c, const std::string& v) { c.member = parse_bool(v); }, \
        [](const ScenarioConfig& c) { return std::string(c.member ? "true" : "false"); } \
  }
#define VT_DOUBLE(sec, key, member)                                                      \
  Field {                                                                                \
    sec, key, [](ScenarioConfig& c, const std::string& v) { c.member = parse_double(v); }, \
        [](const ScenarioConfig& c) { return format_double(c.member); }                  \
  }
// Durations are written in seconds (_s) or milliseconds (_ms), exact to 1 ns.
#define VT_SECONDS(sec, key, member)                                                       \
  Field {                                                                                  \
    sec, key, [](ScenarioConfig& c, const std::string& v) { c.member = parse_scaled(v, 9); }, \
        [](const ScenarioConfig& c) { return format_scaled(c.member, 9); }                 \
  }
#define VT_MILLIS(sec, key, member)                                                        \
  Field {                                                                                  \
    sec, key, [](ScenarioConfig& c, const std::string& v) { c.member = parse_scaled(v, 6); }, \
        [](const ScenarioConfig& c) { return format_scaled(c.member, 6); }                 \
  }

const std::vector<Field>& schema() {
  static const std::vector<Field> fields = {
      {"simulation", "name", [](ScenarioConfig& c, const std::string& v) { c.name = v; },
       [](const ScenarioConfig& c) { return c.name; }},
      VT_U64("simulation", "seed", seed),
      VT_SECONDS("simulation", "duration_s", duration),
      VT_SECONDS("simulation", "warmup_s", warmup),
      VT_SECONDS("simulation", "vote_margin_s", vote_margin),
      VT_BOOL("simulation", "discard_warmup", discard_warmup),
      {"simulation", "capture",
       [](ScenarioConfig& c, const std::string& v) {
         if (v == "vantage") c.capture_scope = CaptureScope::Vantage;
         else if (v == "all") c.capture_scope = CaptureScope::All;
         else throw ConfigError("capture must be vantage|all, got '" + v + "'");
       },
       [](const ScenarioConfig& c) { return std::string(c.capture_scope == CaptureScope::All ? "all" : "vantage"); }},

      VT_U32("topology", "relays", topology.relay_count),
      VT_U32("topology", "directories", topology.directory_count),
      VT_U32("topology", "clients", topology.client_count),
      VT_U32("topology", "visible_clients", topology.visible_client_count),
      VT_U32("topology", "voters", topology.voter_count),
      VT_U32("topology", "bulk_clients", topology.bulk_client_count),
      VT_U32("topology", "file_servers", topology.file_server_count),
      VT_U32("topology", "web_servers", topology.web_server_count),
      VT_U32("topology", "ballot_boxes", topology.ballot_box_count),

      {"behavior", "client_model",
       [](ScenarioConfig& c, const std::string& v) { c.behavior.client_model = parse_client_model(v); },
       [](const ScenarioConfig& c) { return to_string(c.behavior.client_model); }},
      VT_U64("behavior", "file_size_min_bytes", behavior.file_size_min_bytes),
      VT_U64("behavior", "file_size_max_bytes", behavior.file_size_max_bytes),
      VT_SECONDS("behavior", "think_time_mean_s", behavior.think_time_mean),
      VT_SECONDS("behavior", "bulk_think_time_mean_s", behavior.bulk_think_time_mean),
      VT_SECONDS("behavior", "page_think_time_mean_s", behavior.page_think_time_mean),
      VT_U32("behavior", "cell_bytes", behavior.cell_bytes),
      VT_U32("behavior", "sendme_interval", behavior.sendme_interval),
      VT_U32("behavior", "window_cells", behavior.window_cells),
      VT_U32("behavior", "parallel_object_streams", behavior.parallel_object_streams),
      VT_U32("behavior", "directory_fetch_cells", behavior.directory_fetch_cells),
      VT_U32("behavior", "data_ack_every", behavior.data_ack_every),

      {"web", "sites", [](ScenarioConfig& c, const std::string& v) { c.behavior.web_profiles = parse_profiles(v); },
       [](const ScenarioConfig& c) { return format_profiles(c.behavior.web_profiles); }},

      VT_U32("circuit", "hops", circuit.hops),
      VT_U32("circuit", "setup_round_trips_per_hop", circuit.setup_round_trips_per_hop),
      VT_BOOL("circuit", "fresh_vote_circuit", circuit.fresh_vote_circuit),

      {"vote", "profile",
       [](ScenarioConfig& c, const std::string& v) {
         if (v == "minimal") c.vote = VoteProtocolSpec::minimal();
         else if (v == "civitas") c.vote = VoteProtocolSpec::civitas();
         else throw ConfigError("vote profile must be minimal|civitas, got '" + v + "'");
       },
       nullptr},
      VT_U32("vote", "payload_packets", vote.payload_packets_client_to_box),
      VT_U32("vote", "confirmation_packets", vote.confirmation_packets_box_to_client),
      VT_U32("vote", "handshake_packets", vote.handshake_packets),
      VT_U32("vote", "teardown_packets", vote.teardown_packets),
      VT_U32("vote", "client_payload_cells", vote.client_payload_cells),
      VT_BOOL("vote", "ack_per_payload", vote.ack_per_payload),

      VT_MILLIS("network", "client_latency_min_ms", network.client_latency_min),
      VT_MILLIS("network", "client_latency_max_ms", network.client_latency_max),
      VT_MILLIS("network", "relay_latency_min_ms", network.relay_latency_min),
      VT_MILLIS("network", "relay_latency_max_ms", network.relay_latency_max),
      VT_MILLIS("network", "server_latency_min_ms", network.server_latency_min),
      VT_MILLIS("network", "server_latency_max_ms", network.server_latency_max),
      {"network", "jitter",
       [](ScenarioConfig& c, const std::string& v) {
         if (v == "none") c.network.jitter.kind = JitterModel::Kind::None;
         else if (v == "uniform") c.network.jitter.kind = JitterModel::Kind::Uniform;
         else if (v == "exponential") c.network.jitter.kind = JitterModel::Kind::Exponential;
         else throw ConfigError("jitter must be none|uniform|exponential, got '" + v + "'");
       },
       [](const ScenarioConfig& c) { return format_jitter(c.network.jitter); }},
      VT_MILLIS("network", "jitter_ms", network.jitter.scale),
      VT_DOUBLE("network", "client_bandwidth_min_pps", network.client_bandwidth_min_pps),
      VT_DOUBLE("network", "client_bandwidth_max_pps", network.client_bandwidth_max_pps),
      VT_DOUBLE("network", "relay_bandwidth_pps", network.relay_bandwidth_pps),
      VT_DOUBLE("network", "server_bandwidth_pps", network.server_bandwidth_pps),
      VT_DOUBLE("network", "content_bandwidth_min_pps", network.content_bandwidth_min_pps),
      VT_DOUBLE("network", "content_bandwidth_max_pps", network.content_bandwidth_max_pps),

      {"output", "log", [](ScenarioConfig& c, const std::string& v) { c.log_path = v; },
       [](const ScenarioConfig& c) { return c.log_path; }},
      {"output", "truth", [](ScenarioConfig& c, const std::string& v) { c.truth_path = v; },
       [](const ScenarioConfig& c) { return c.truth_path; }},
      {"output", "manifest", [](ScenarioConfig& c, const std::string& v) { c.manifest_path = v; },
       [](const ScenarioConfig& c) { return c.manifest_path; }},
  };
  return fields;
}

#undef VT_U32
#undef VT_U64
#undef VT_BOOL
#undef VT_DOUBLE
#undef VT_SECONDS
#undef VT_MILLIS

}  // namespace

ScenarioConfig parse_scenario(std::istream& in, const std::string& source) {
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(source + ":" + std::to_string(e.line()) + ": " + e.message());
  }

  ScenarioConfig config = ScenarioConfig::desk_scale();
  // The profile key is applied first so individual vote keys can refine it.
  if (auto vote = tree.get_child_optional("vote")) {
    if (auto profile = vote->get_optional<std::string>("profile")) {
      for (const Field& f : schema()) {
        if (std::string(f.section) == "vote" && std::string(f.key) == "profile") f.set(config, trim(*profile));
      }
    }
  }

  std::set<std::string> sections;
  for (const Field& f : schema()) sections.insert(f.section);
  for (const auto& [section, body] : tree) {
    if (!sections.contains(section)) {
      if (body.empty()) throw ConfigError(source + ": key '" + section + "' outside of any section");
      throw ConfigError(source + ": unknown section [" + section + "]");
    }
    for (const auto& [key, value] : body) {
      const Field* field = nullptr;
      for (const Field& f : schema()) {
        if (section == f.section && key == f.key) field = &f;
      }
      if (!field) throw ConfigError(source + ": unknown key '" + key + "' in [" + section + "]");
      if (section == "vote" && key == "profile") continue;
      try {
        field->set(config, trim(value.data()));
      } catch (const ConfigError& e) {
        throw ConfigError(source + ": [" + section + "] " + key + ": " + e.what());
      }
    }
  }
  config.validate();
  return config;
}

ScenarioConfig load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scenario file '" + path + "'");
  return parse_scenario(in, path);
}

std::string dump_scenario(const ScenarioConfig& config) {
  std::string out;
  std::string current;
  for (const Field& f : schema()) {
    if (!f.get) continue;
    if (current != f.section) {
      if (!current.empty()) out += "\n";
      current = f.section;
      out += "[" + current + "]\n";
    }
    out += std::string(f.key) + " = " + f.get(config) + "\n";
  }
  return out;
}

}  // namespace votetrace
