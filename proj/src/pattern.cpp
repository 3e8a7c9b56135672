#include "votetrace/pattern.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <thread>
#include <unordered_map>

namespace votetrace {

std::string to_string(Step step) {
  return std::string(step.role == Role::Client ? "client" : "server") + ' ' +
         (step.direction == Direction::Out ? "out" : "in");
}

void Pattern::validate() const {
  if (steps.empty()) throw PatternError("pattern is empty");
  if (steps.front() != Step{Role::Client, Direction::Out}) {
    throw PatternError("pattern must start with 'client out', got '" + to_string(steps.front()) + "'");
  }
}

std::size_t Pattern::max_steps_per_stream() const {
  std::map<Step, std::size_t> counts;
  std::size_t best = 0;
  for (Step s : steps) best = std::max(best, ++counts[s]);
  return best;
}

void write_pattern(std::ostream& out, const Pattern& pattern) {
  for (Step s : pattern.steps) out << to_string(s) << '\n';
}

Pattern read_pattern(std::istream& in, const std::string& source) {
  Pattern p;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    std::istringstream words(line);
    std::string role, dir, extra;
    if (!(words >> role)) continue;
    if (role.starts_with('#')) continue;
    if (!(words >> dir) || (words >> extra)) throw ParseError(source, number, "expected 'client|server out|in'");
    Step s;
    if (role == "client") {
      s.role = Role::Client;
    } else if (role == "server") {
      s.role = Role::Server;
    } else {
      throw ParseError(source, number, "unknown role '" + role + "'");
    }
    if (dir == "out") {
      s.direction = Direction::Out;
    } else if (dir == "in") {
      s.direction = Direction::In;
    } else {
      throw ParseError(source, number, "unknown direction '" + dir + "'");
    }
    p.steps.push_back(s);
  }
  p.validate();
  return p;
}

void save_pattern(const std::string& path, const Pattern& pattern) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  write_pattern(out, pattern);
}

Pattern load_pattern(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  return read_pattern(in, path);
}

Pattern extract_pattern(const AttackerView& reference) {
  if (reference.visible_clients.size() != 1 || reference.ballot_boxes.size() != 1) {
    throw PatternError("reference view needs exactly one client and one server");
  }
  const Address c = *reference.visible_clients.begin();
  const Address b = *reference.ballot_boxes.begin();
  const auto& r = reference.records;

  std::optional<std::size_t> first_in, last_in, last_out;
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (r[i].dst == b) {
      if (!first_in) first_in = i;
      last_in = i;
    }
    if (r[i].src == b) last_out = i;
  }
  if (!first_in) throw PatternError("reference view has no server input");

  std::optional<std::size_t> trigger;
  for (std::size_t i = 0; i <= *first_in; ++i) {
    if (r[i].src == c) trigger = i;
  }
  if (!trigger) throw PatternError("no client output precedes the server's first input");

  std::size_t end = *last_in;
  if (last_out) {
    for (std::size_t i = *last_out + 1; i < r.size(); ++i) {
      if (r[i].dst == c) {
        end = std::max(end, i);
        break;
      }
    }
  }

  Pattern p;
  for (std::size_t i = *trigger; i <= end; ++i) {
    if (r[i].src == c) {
      p.steps.push_back({Role::Client, Direction::Out});
    } else if (r[i].dst == c) {
      p.steps.push_back({Role::Client, Direction::In});
    } else if (r[i].dst == b) {
      p.steps.push_back({Role::Server, Direction::In});
    } else if (r[i].src == b) {
      p.steps.push_back({Role::Server, Direction::Out});
    }
  }
  p.validate();
  return p;
}

std::string to_string(WindowMode mode) { return mode == WindowMode::Tumbling ? "tumbling" : "sliding"; }

WindowMode parse_window_mode(const std::string& text) {
  if (text == "tumbling") return WindowMode::Tumbling;
  if (text == "sliding") return WindowMode::Sliding;
  throw std::invalid_argument("unknown window mode '" + text + "' (tumbling, sliding)");
}

void NoiseParams::validate() const {
  if (t == 0) throw std::invalid_argument("noise window t must be positive");
}

void MatchParams::validate() const {
  if (d == 0) throw std::invalid_argument("max gap d must be positive");
}

namespace {

/// Marks records of one endpoint-direction stream for deletion.
void mark_stream(const std::vector<PacketRecord>& records, const std::vector<std::size_t>& stream,
                 const NoiseParams& params, std::vector<char>& drop) {
  const std::size_t n = stream.size();
  if (n <= params.x) return;
  auto time = [&](std::size_t k) { return records[stream[k]].time; };
  if (params.mode == WindowMode::Tumbling) {
    std::size_t begin = 0;
    while (begin < n) {
      const SimTime window = time(begin) / params.t;
      std::size_t end = begin;
      while (end < n && time(end) / params.t == window) ++end;
      if (end - begin > params.x) {
        for (std::size_t k = begin; k < end; ++k) drop[stream[k]] = 1;
      }
      begin = end;
    }
    return;
  }
  // Sliding: the fullest windows start on a record, so checking [t_j, t_j + t)
  // for every j covers every window.
  std::vector<int> cover(n + 1, 0);
  std::size_t end = 0;
  for (std::size_t j = 0; j < n; ++j) {
    end = std::max(end, j);
    while (end < n && time(end) - time(j) < params.t) ++end;
    if (end - j > params.x) {
      ++cover[j];
      --cover[end];
    }
  }
  int running = 0;
  for (std::size_t k = 0; k < n; ++k) {
    running += cover[k];
    if (running > 0) drop[stream[k]] = 1;
  }
}

}  // namespace

AttackerView noise_reduce(const AttackerView& view, const NoiseParams& params) {
  params.validate();
  AttackerView out;
  out.visible_clients = view.visible_clients;
  out.ballot_boxes = view.ballot_boxes;
  if (params.x == NoiseParams::kUnlimited) {
    out.records = view.records;
    return out;
  }
  // Stream key: endpoint address and direction bit.
  std::unordered_map<std::uint64_t, std::vector<std::size_t>> streams;
  auto monitored = [&](Address a) { return view.visible_clients.count(a) || view.ballot_boxes.count(a); };
  for (std::size_t i = 0; i < view.records.size(); ++i) {
    const PacketRecord& r = view.records[i];
    if (monitored(r.src)) streams[(std::uint64_t{r.src.value} << 1) | 0].push_back(i);
    if (monitored(r.dst)) streams[(std::uint64_t{r.dst.value} << 1) | 1].push_back(i);
  }
  std::vector<char> drop(view.records.size(), 0);
  for (const auto& [key, stream] : streams) mark_stream(view.records, stream, params, drop);
  for (std::size_t i = 0; i < view.records.size(); ++i) {
    if (!drop[i]) out.records.push_back(view.records[i]);
  }
  return out;
}

namespace {

bool step_matches(Step s, const PacketRecord& r, Address c, Address b) {
  if (s.role == Role::Client) return s.direction == Direction::Out ? r.src == c : r.dst == c;
  return s.direction == Direction::Out ? r.src == b : r.dst == b;
}

std::optional<MatchResult> match_pair(const std::vector<PacketRecord>& records, const std::vector<std::size_t>& idx,
                                      const Pattern& pattern, Duration d, Address c, Address b) {
  const std::size_t n = idx.size();
  const std::size_t k = pattern.size();
  if (n < k) return std::nullopt;
  auto time = [&](std::size_t i) { return records[idx[i]].time; };

  // later[i]: first position whose time exceeds time(i).
  std::vector<std::size_t> later(n);
  for (std::size_t i = 0, j = 0; i < n; ++i) {
    j = std::max(j, i);
    while (j < n && time(j) <= time(i)) ++j;
    later[i] = j;
  }

  // feasible[s][i]: position i can take step s and the rest can still follow.
  std::vector<std::vector<char>> feasible(k, std::vector<char>(n, 0));
  std::vector<std::size_t> next_ok(n + 1);
  for (std::size_t s = k; s-- > 0;) {
    if (s + 1 < k) {
      next_ok[n] = n;
      for (std::size_t i = n; i-- > 0;) next_ok[i] = feasible[s + 1][i] ? i : next_ok[i + 1];
    }
    bool any = false;
    for (std::size_t i = 0; i < n; ++i) {
      if (!step_matches(pattern.steps[s], records[idx[i]], c, b)) continue;
      if (s + 1 < k) {
        const std::size_t j = next_ok[later[i]];
        if (j == n || time(j) - time(i) > d) continue;
      }
      feasible[s][i] = 1;
      any = true;
    }
    if (!any) return std::nullopt;
  }

  std::size_t cur = 0;
  while (cur < n && !feasible[0][cur]) ++cur;
  if (cur == n) return std::nullopt;
  MatchResult m;
  m.client = c;
  m.box = b;
  m.vote_time = time(cur);
  m.matched_records.push_back(idx[cur]);
  for (std::size_t s = 1; s < k; ++s) {
    std::size_t j = later[cur];
    while (!feasible[s][j]) ++j;  // exists and lies within d by construction
    cur = j;
    m.matched_records.push_back(idx[cur]);
  }
  return m;
}

}  // namespace

std::vector<MatchResult> match(const AttackerView& view, const Pattern& pattern, const MatchParams& params,
                               unsigned jobs) {
  pattern.validate();
  params.validate();
  std::unordered_map<std::uint32_t, std::vector<std::size_t>> by_endpoint;
  for (std::size_t i = 0; i < view.records.size(); ++i) {
    const PacketRecord& r = view.records[i];
    for (Address a : {r.src, r.dst}) {
      if (view.visible_clients.count(a) || view.ballot_boxes.count(a)) {
        auto& v = by_endpoint[a.value];
        if (v.empty() || v.back() != i) v.push_back(i);
      }
    }
  }
  static const std::vector<std::size_t> kNone;
  auto records_of = [&](Address a) -> const std::vector<std::size_t>& {
    auto it = by_endpoint.find(a.value);
    return it == by_endpoint.end() ? kNone : it->second;
  };

  const std::vector<Address> clients(view.visible_clients.begin(), view.visible_clients.end());
  std::vector<std::vector<MatchResult>> per_client(clients.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    std::vector<std::size_t> merged;
    for (std::size_t ci = next++; ci < clients.size(); ci = next++) {
      const Address c = clients[ci];
      const auto& cr = records_of(c);
      if (cr.empty()) continue;
      for (Address b : view.ballot_boxes) {
        const auto& br = records_of(b);
        merged.clear();
        std::set_union(cr.begin(), cr.end(), br.begin(), br.end(), std::back_inserter(merged));
        if (auto m = match_pair(view.records, merged, pattern, params.d, c, b)) per_client[ci].push_back(std::move(*m));
      }
    }
  };
  jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(clients.size())));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned j = 0; j < jobs; ++j) pool.emplace_back(worker);
  }
  std::vector<MatchResult> out;
  for (auto& v : per_client) std::move(v.begin(), v.end(), std::back_inserter(out));
  return out;
}

std::vector<MatchResult> analyze(const AttackerView& view, const Pattern& pattern, const NoiseParams& noise,
                                 const MatchParams& params, unsigned jobs) {
  return match(noise_reduce(view, noise), pattern, params, jobs);
}

}  // namespace votetrace
