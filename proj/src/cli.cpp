#include "votetrace/cli.hpp"

#include "votetrace/manifest.hpp"
#include "votetrace/pipeline.hpp"
#include "votetrace/trace_io.hpp"

#include "CLI11.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

namespace votetrace {

namespace fs = std::filesystem;

namespace {

std::uint64_t to_u64(const std::string& text, const std::string& what) {
  std::uint64_t v = 0;
  auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || ec != std::errc{} || p != text.data() + text.size()) {
    throw std::invalid_argument("bad " + what + " '" + text + "'");
  }
  return v;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

std::string resolve(const std::string& base, const std::string& path) {
  if (path.empty() || fs::path(path).is_absolute() || base.empty()) return path;
  return (fs::path(base) / path).string();
}

void write_results(std::ostream& out, const std::vector<MatchResult>& results) {
  for (const MatchResult& r : results) out << to_string(r.client) << '\t' << r.vote_time << '\t' << to_string(r.box) << '\n';
}

}  // namespace

std::vector<std::uint64_t> parse_value_list(const std::string& text) {
  std::vector<std::uint64_t> values;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) {
    item = trim(item);
    if (item.empty()) continue;
    const auto dash = item.find('-');
    if (dash == std::string::npos) {
      values.push_back(to_u64(item, "value"));
      continue;
    }
    const std::uint64_t lo = to_u64(trim(item.substr(0, dash)), "range start");
    const std::uint64_t hi = to_u64(trim(item.substr(dash + 1)), "range end");
    if (hi < lo) throw std::invalid_argument("empty range '" + item + "'");
    for (std::uint64_t v = lo; v <= hi; ++v) values.push_back(v);
  }
  if (values.empty()) throw std::invalid_argument("empty value list");
  return values;
}

SweepFile parse_sweep_file(std::istream& in, const std::string& base_dir, const std::string& source) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(source + ":" + std::to_string(e.line()) + ": " + e.message());
  }
  SweepFile f;
  for (const auto& [section, body] : tree) {
    if (section != "sweep") throw ConfigError(source + ": unknown section [" + section + "]");
    for (const auto& [key, node] : body) {
      const std::string v = trim(node.data());
      try {
        if (key == "scenario") {
          f.spec.scenario = v;
        } else if (key == "seed") {
          f.spec.seed = to_u64(v, "seed");
        } else if (key == "log") {
          f.log = resolve(base_dir, v);
        } else if (key == "truth") {
          f.truth = resolve(base_dir, v);
        } else if (key == "pattern") {
          f.pattern = resolve(base_dir, v);
        } else if (key == "endpoints") {
          f.endpoints = resolve(base_dir, v);
        } else if (key == "x") {
          for (std::uint64_t x : parse_value_list(v)) f.spec.x_values.push_back(static_cast<std::uint32_t>(x));
        } else if (key == "d_ns") {
          for (std::uint64_t d : parse_value_list(v)) f.spec.d_values.push_back(d);
        } else if (key == "t_ns") {
          f.spec.t = to_u64(v, "t_ns");
        } else if (key == "window") {
          f.spec.mode = parse_window_mode(v);
        } else if (key == "tolerance_ns") {
          f.spec.tolerance = to_u64(v, "tolerance_ns");
        } else {
          throw ConfigError("unknown key '" + key + "'");
        }
      } catch (const std::invalid_argument& e) {
        throw ConfigError(source + ": [sweep] " + key + ": " + e.what());
      } catch (const ConfigError& e) {
        throw ConfigError(source + ": [sweep] " + e.what());
      }
    }
  }
  if (f.log.empty() || f.truth.empty() || f.pattern.empty()) {
    throw ConfigError(source + ": [sweep] needs log, truth and pattern");
  }
  if (f.endpoints.empty()) f.endpoints = f.log + ".endpoints";
  try {
    f.spec.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(source + ": " + e.what());
  }
  return f;
}

SweepFile load_sweep_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open sweep file '" + path + "'");
  return parse_sweep_file(in, fs::path(path).parent_path().string(), path);
}

int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Onion-routed e-voting simulator and traffic-correlation analyzer", "votetrace"};
  app.require_subcommand(1);

  std::string config_path, pattern_path, truth_path, out_path, log_path, endpoints_path, window = to_string(NoiseParams{}.mode);
  std::optional<std::uint64_t> seed;
  std::uint32_t x = 7;
  Duration t_ns = kSecond, d_ns = kSecond;
  std::optional<Duration> tolerance_ns;
  unsigned jobs = 1;
  std::string profile = "default";

  auto* sim = app.add_subcommand("simulate", "Run a scenario; write log, ground truth, endpoints and manifest");
  sim->add_option("--config", config_path, "Scenario file")->required();
  sim->add_option("--seed", seed, "Override the scenario seed");
  sim->add_option("--out", out_path, "Output directory (default: current)");

  auto* ext = app.add_subcommand("extract-pattern", "Learn the vote pattern from a toy run");
  ext->add_option("--config", config_path, "Scenario whose [vote] section defines the protocol");
  ext->add_option("--profile", profile, "Vote profile when no config is given")->check(CLI::IsMember({"default", "civitas"}));
  ext->add_option("--seed", seed, "Toy run seed");
  ext->add_option("--log", log_path, "Extract from this reference log instead of a toy run");
  ext->add_option("--endpoints", endpoints_path, "Endpoints of --log (default: LOG.endpoints)");
  ext->add_option("--out", out_path, "Pattern file (default: stdout)");

  auto* ana = app.add_subcommand("analyze", "Noise-reduce and match a log");
  ana->add_option("--log", log_path, "Native log or capture file")->required();
  ana->add_option("--endpoints", endpoints_path, "Endpoints file (default: LOG.endpoints)");
  ana->add_option("--pattern", pattern_path, "Pattern file")->required();
  ana->add_option("--x", x, "Largest tolerated block size");
  ana->add_option("--t-ns", t_ns, "Noise window length in ns");
  ana->add_option("--d-ns", d_ns, "Largest gap between matched records in ns");
  ana->add_option("--window", window, "tumbling or sliding")->check(CLI::IsMember({"tumbling", "sliding"}));
  ana->add_option("--truth", truth_path, "Ground truth; prints a metrics row");
  ana->add_option("--tolerance-ns", tolerance_ns, "Vote-time tolerance (default (steps-1)*d)");
  ana->add_option("--out", out_path, "Results file (default: stdout)");
  ana->add_option("--jobs", jobs, "Matcher threads");

  auto* swp = app.add_subcommand("sweep", "Sweep x and d; write CSV");
  swp->add_option("--config", config_path, "Sweep file")->required();
  swp->add_option("--out", out_path, "CSV file (default: stdout)");
  swp->add_option("--jobs", jobs, "Worker threads");

  std::vector<std::string> csv_paths;
  std::optional<std::size_t> max_fp;
  auto* rep = app.add_subcommand("report", "Compare the best points of swept scenarios");
  rep->add_option("csv", csv_paths, "Sweep CSV files")->required();
  rep->add_option("--max-fp", max_fp, "False-positive budget for the best point");
  rep->add_option("--out", out_path, "Summary file (default: stdout)");

  std::string trace_path, trace_format = "auto", remap = "100.64.0.0";
  std::vector<std::string> trace_nodes;
  Duration box_offset = 0;
  auto* spl = app.add_subcommand("splice", "Merge ballot-box streams of a log into an external trace");
  spl->add_option("--trace", trace_path, "External trace (native or capture file)")->required();
  spl->add_option("--format", trace_format, "native, pcap or auto")->check(CLI::IsMember({"native", "pcap", "auto"}));
  spl->add_option("--trace-node", trace_nodes, "Address the trace was captured at (repeatable)");
  spl->add_option("--log", log_path, "Simulated log holding the box streams")->required();
  spl->add_option("--endpoints", endpoints_path, "Endpoints of --log (default: LOG.endpoints)");
  spl->add_option("--box-offset-ns", box_offset, "Shift of the box streams after alignment");
  spl->add_option("--remap-base", remap, "Prefix for colliding external addresses");
  spl->add_option("--out", out_path, "Merged log; endpoints go to OUT.endpoints")->required();

  std::string to_format = "pcap";
  auto* cnv = app.add_subcommand("convert", "Convert a log between native text and capture format");
  cnv->add_option("--log", log_path, "Input trace")->required();
  cnv->add_option("--to", to_format, "native or pcap")->check(CLI::IsMember({"native", "pcap"}));
  cnv->add_option("--out", out_path, "Output file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  auto with_output = [&](const std::function<void(std::ostream&)>& body) {
    if (out_path.empty()) {
      body(out);
      return;
    }
    std::ofstream file(out_path, std::ios::binary);
    if (!file) throw std::runtime_error("cannot write '" + out_path + "'");
    body(file);
  };

  try {
    if (*sim) {
      ScenarioConfig config = load_scenario(config_path);
      if (seed) config.seed = *seed;
      const fs::path dir = out_path.empty() ? fs::path(".") : fs::path(out_path);
      fs::create_directories(dir);
      const SimulationResult result = simulate(config);
      const std::string log = (dir / config.log_path).string();
      save_native_log(log, result.log);
      save_ground_truth((dir / config.truth_path).string(), result.truth);
      save_endpoints(log + ".endpoints", {result.visible_clients, result.ballot_boxes});
      std::ofstream manifest(dir / config.manifest_path, std::ios::binary);
      manifest << run_manifest(config, result.stats);
      out << "records " << result.log.size() << ", votes " << result.truth.size() << ", hash " << run_hash(config)
          << '\n';
      return 0;
    }
    if (*ext) {
      Pattern pattern;
      if (!log_path.empty()) {
        const Endpoints e = load_endpoints(endpoints_path.empty() ? log_path + ".endpoints" : endpoints_path);
        pattern = extract_pattern(filter_visible(import_trace(log_path), e.visible_clients, e.ballot_boxes));
      } else {
        VoteProtocolSpec vote = profile == "civitas" ? VoteProtocolSpec::civitas() : VoteProtocolSpec::minimal();
        std::uint64_t toy_seed = seed.value_or(1);
        if (!config_path.empty()) {
          const ScenarioConfig config = load_scenario(config_path);
          vote = config.vote;
          if (!seed) toy_seed = config.seed;
        }
        pattern = learn_pattern(vote, toy_seed);
      }
      with_output([&](std::ostream& o) { write_pattern(o, pattern); });
      return 0;
    }
    if (*ana) {
      const Endpoints e = load_endpoints(endpoints_path.empty() ? log_path + ".endpoints" : endpoints_path);
      const AttackerView view = filter_visible(import_trace(log_path), e.visible_clients, e.ballot_boxes);
      const Pattern pattern = load_pattern(pattern_path);
      const auto results =
          analyze(view, pattern, NoiseParams{x, t_ns, parse_window_mode(window)}, MatchParams{d_ns}, jobs);
      with_output([&](std::ostream& o) { write_results(o, results); });
      const std::size_t candidates = e.visible_clients.size();
      if (truth_path.empty()) {
        err << "candidates " << candidates << ", reported " << results.size() << '\n';
      } else {
        const GroundTruth truth{load_ground_truth(truth_path), e.visible_clients};
        SweepRow row;
        row.scenario = fs::path(log_path).stem().string();
        row.x = x;
        row.t = t_ns;
        row.d = d_ns;
        row.metrics = score(results, truth, tolerance_ns.value_or(default_tolerance(pattern, d_ns)));
        write_sweep_csv(out_path.empty() ? err : out, {row});
      }
      return 0;
    }
    if (*swp) {
      SweepFile f = load_sweep_file(config_path);
      f.spec.jobs = jobs;
      const Endpoints e = load_endpoints(f.endpoints);
      const AttackerView view = filter_visible(import_trace(f.log), e.visible_clients, e.ballot_boxes);
      const GroundTruth truth{load_ground_truth(f.truth), e.visible_clients};
      const auto rows = sweep(f.spec, view, load_pattern(f.pattern), truth);
      with_output([&](std::ostream& o) { write_sweep_csv(o, rows); });
      return 0;
    }
    if (*rep) {
      std::vector<SweepRow> rows;
      for (const std::string& p : csv_paths) {
        std::ifstream in(p);
        if (!in) throw std::runtime_error("cannot open '" + p + "'");
        auto part = read_sweep_csv(in, p);
        rows.insert(rows.end(), part.begin(), part.end());
      }
      const Comparison c = compare_scenarios(rows, max_fp.value_or(static_cast<std::size_t>(-1)));
      with_output([&](std::ostream& o) { write_comparison(o, c); });
      return c.expected_ordering.value_or(true) ? 0 : 3;
    }
    if (*spl) {
      const Endpoints e = load_endpoints(endpoints_path.empty() ? log_path + ".endpoints" : endpoints_path);
      const std::vector<PacketRecord> sim_log = import_trace(log_path);
      std::vector<PacketRecord> box_streams;
      for (const PacketRecord& r : sim_log) {
        if (e.ballot_boxes.count(r.src) || e.ballot_boxes.count(r.dst)) box_streams.push_back(r);
      }
      SpliceOptions options;
      for (const std::string& n : trace_nodes) {
        auto a = parse_address(n);
        if (!a) throw std::invalid_argument("bad --trace-node '" + n + "'");
        options.trace_nodes.insert(*a);
      }
      auto base = parse_address(remap);
      if (!base) throw std::invalid_argument("bad --remap-base '" + remap + "'");
      options.remap_base = *base;
      options.box_offset = box_offset;
      const SpliceResult merged =
          splice(import_trace(trace_path, parse_trace_format(trace_format)), box_streams, e.ballot_boxes, options);
      save_native_log(out_path, merged.view.records);
      save_endpoints(out_path + ".endpoints", {merged.view.visible_clients, merged.view.ballot_boxes});
      out << "candidates " << merged.view.visible_clients.size() << ", records " << merged.view.records.size()
          << ", remapped " << merged.remapped.size() << '\n';
      return 0;
    }
    if (*cnv) {
      const auto records = import_trace(log_path);
      if (to_format == "pcap") {
        save_pcap(out_path, records);
      } else {
        save_native_log(out_path, records);
      }
      return 0;
    }
  } catch (const std::exception& e) {
    err << "votetrace: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace votetrace
