#include "votetrace/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <thread>

namespace votetrace {

std::vector<VoteRecord> GroundTruth::visible_entries() const {
  std::vector<VoteRecord> out;
  for (const VoteRecord& v : entries) {
    if (visible_clients.count(v.client)) out.push_back(v);
  }
  return out;
}

std::size_t GroundTruth::visible_voters() const {
  AddressSet voters;
  for (const VoteRecord& v : visible_entries()) voters.insert(v.client);
  return voters.size();
}

std::size_t GroundTruth::visible_non_voters() const { return visible_clients.size() - visible_voters(); }

double Metrics::hit_rate() const {
  return visible_voters == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(visible_voters);
}

double Metrics::precision() const {
  return outputs == 0 ? 1.0 : static_cast<double>(hits) / static_cast<double>(outputs);
}

std::vector<bool> classify(const std::vector<MatchResult>& results, const GroundTruth& truth, Duration tolerance) {
  // One truth entry can back at most one hit; earlier results claim first.
  std::multimap<std::pair<Address, Address>, std::pair<SimTime, bool>> index;
  for (const VoteRecord& v : truth.visible_entries()) index.emplace(std::pair{v.client, v.box}, std::pair{v.time, false});
  std::vector<std::size_t> order(results.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::tie(results[a].client, results[a].box, results[a].vote_time) <
           std::tie(results[b].client, results[b].box, results[b].vote_time);
  });
  std::vector<bool> hit(results.size(), false);
  for (std::size_t i : order) {
    const MatchResult& r = results[i];
    auto [lo, hi] = index.equal_range({r.client, r.box});
    for (auto it = lo; it != hi; ++it) {
      auto& [time, used] = it->second;
      const SimTime diff = r.vote_time > time ? r.vote_time - time : time - r.vote_time;
      if (!used && diff <= tolerance) {
        used = true;
        hit[i] = true;
        break;
      }
    }
  }
  return hit;
}

Metrics score(const std::vector<MatchResult>& results, const GroundTruth& truth, Duration tolerance) {
  Metrics m;
  m.outputs = results.size();
  m.visible_voters = truth.visible_voters();
  for (bool hit : classify(results, truth, tolerance)) ++(hit ? m.hits : m.false_positives);
  return m;
}

Duration default_tolerance(const Pattern& pattern, Duration d) {
  return static_cast<Duration>(pattern.size() > 0 ? pattern.size() - 1 : 0) * d;
}

void SweepSpec::validate() const {
  if (x_values.empty() || d_values.empty()) throw std::invalid_argument("sweep needs at least one x and one d");
  if (t == 0) throw std::invalid_argument("sweep window t must be positive");
  for (Duration d : d_values) {
    if (d == 0) throw std::invalid_argument("sweep d values must be positive");
  }
}

std::vector<SweepRow> sweep(const SweepSpec& spec, const AttackerView& view, const Pattern& pattern,
                            const GroundTruth& truth) {
  spec.validate();
  std::vector<std::uint32_t> xs = spec.x_values;
  std::vector<Duration> ds = spec.d_values;
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  std::sort(ds.begin(), ds.end());
  ds.erase(std::unique(ds.begin(), ds.end()), ds.end());

  std::vector<SweepRow> rows(xs.size() * ds.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t xi = next++; xi < xs.size(); xi = next++) {
      const AttackerView reduced = noise_reduce(view, NoiseParams{xs[xi], spec.t, spec.mode});
      for (std::size_t di = 0; di < ds.size(); ++di) {
        const auto results = match(reduced, pattern, MatchParams{ds[di]});
        SweepRow& row = rows[xi * ds.size() + di];
        row.scenario = spec.scenario;
        row.seed = spec.seed;
        row.x = xs[xi];
        row.t = spec.t;
        row.d = ds[di];
        row.metrics = score(results, truth, spec.tolerance.value_or(default_tolerance(pattern, ds[di])));
      }
    }
  };
  const unsigned jobs = std::max(1u, std::min<unsigned>(spec.jobs, static_cast<unsigned>(xs.size())));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned j = 0; j < jobs; ++j) pool.emplace_back(worker);
  }
  return rows;
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows, bool header) {
  if (header) out << "scenario,seed,x,t_ns,d_ns,visible_voters,hits,false_positives,hit_rate,precision\n";
  char buf[64];
  for (const SweepRow& r : rows) {
    out << r.scenario << ',' << r.seed << ',' << r.x << ',' << r.t << ',' << r.d << ',' << r.metrics.visible_voters
        << ',' << r.metrics.hits << ',' << r.metrics.false_positives << ',';
    std::snprintf(buf, sizeof buf, "%.6f,%.6f", r.metrics.hit_rate(), r.metrics.precision());
    out << buf << '\n';
  }
}

namespace {
template <typename T>
T parse_number(const std::string& text, const std::string& source, std::size_t line, const char* column) {
  T value{};
  auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || p != text.data() + text.size() || text.empty()) {
    throw ParseError(source, line, std::string("bad ") + column + " '" + text + "'");
  }
  return value;
}
}  // namespace

std::vector<SweepRow> read_sweep_csv(std::istream& in, const std::string& source) {
  std::vector<SweepRow> rows;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.starts_with("scenario,")) continue;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    for (std::string col; std::getline(ss, col, ',');) cols.push_back(col);
    if (cols.size() < 10) throw ParseError(source, number, "expected 10 columns");
    // Scenario names may contain commas; the numeric columns are the last nine.
    while (cols.size() > 10) {
      cols[0] += ',' + cols[1];
      cols.erase(cols.begin() + 1);
    }
    SweepRow r;
    r.scenario = cols[0];
    r.seed = parse_number<std::uint64_t>(cols[1], source, number, "seed");
    r.x = parse_number<std::uint32_t>(cols[2], source, number, "x");
    r.t = parse_number<Duration>(cols[3], source, number, "t_ns");
    r.d = parse_number<Duration>(cols[4], source, number, "d_ns");
    r.metrics.visible_voters = parse_number<std::size_t>(cols[5], source, number, "visible_voters");
    r.metrics.hits = parse_number<std::size_t>(cols[6], source, number, "hits");
    r.metrics.false_positives = parse_number<std::size_t>(cols[7], source, number, "false_positives");
    r.metrics.outputs = r.metrics.hits + r.metrics.false_positives;
    rows.push_back(r);
  }
  return rows;
}

std::optional<SweepRow> best_point(const std::vector<SweepRow>& rows, std::size_t max_false_positives) {
  std::optional<SweepRow> best;
  for (const SweepRow& r : rows) {
    if (r.metrics.false_positives > max_false_positives) continue;
    if (!best) {
      best = r;
      continue;
    }
    const auto key = [](const SweepRow& s) {
      return std::tuple(s.metrics.hit_rate(), -static_cast<double>(s.metrics.false_positives),
                        -static_cast<double>(s.x), -static_cast<double>(s.d));
    };
    if (key(r) > key(*best)) best = r;
  }
  return best;
}

Comparison compare_scenarios(const std::vector<SweepRow>& rows, std::size_t max_false_positives, double slack) {
  std::vector<std::string> names;
  std::map<std::string, std::vector<SweepRow>> grouped;
  for (const SweepRow& r : rows) {
    if (!grouped.count(r.scenario)) names.push_back(r.scenario);
    grouped[r.scenario].push_back(r);
  }
  Comparison c;
  std::map<std::string, double> rate;
  for (const std::string& n : names) {
    c.rows.push_back({n, best_point(grouped[n], max_false_positives)});
    rate[n] = c.rows.back().best ? c.rows.back().best->metrics.hit_rate() : 0.0;
  }
  if (rate.count("vote-only") && rate.count("browser") && rate.count("file-transfer")) {
    c.expected_ordering =
        rate["vote-only"] >= rate["browser"] && rate["browser"] >= rate["file-transfer"] - slack;
  }
  return c;
}

void write_comparison(std::ostream& out, const Comparison& comparison) {
  out << "scenario,x,d_ns,visible_voters,hits,false_positives,hit_rate\n";
  char buf[32];
  for (const ScenarioSummary& s : comparison.rows) {
    out << s.scenario << ',';
    if (!s.best) {
      out << ",,,,,\n";
      continue;
    }
    const SweepRow& b = *s.best;
    std::snprintf(buf, sizeof buf, "%.6f", b.metrics.hit_rate());
    out << b.x << ',' << b.d << ',' << b.metrics.visible_voters << ',' << b.metrics.hits << ','
        << b.metrics.false_positives << ',' << buf << '\n';
  }
  if (comparison.expected_ordering) {
    out << "# ordering vote-only >= browser >= file-transfer: " << (*comparison.expected_ordering ? "holds" : "violated")
        << '\n';
  }
}

}  // namespace votetrace
