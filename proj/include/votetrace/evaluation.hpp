#pragma once

#include "votetrace/pattern.hpp"
#include "votetrace/truth.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace votetrace {

struct GroundTruth {
  std::vector<VoteRecord> entries;
  AddressSet visible_clients;

  /// Entries of visible clients only.
  std::vector<VoteRecord> visible_entries() const;
  std::size_t visible_voters() const;
  std::size_t visible_non_voters() const;
};

struct Metrics {
  std::size_t outputs = 0;
  std::size_t hits = 0;
  std::size_t false_positives = 0;
  std::size_t visible_voters = 0;
  /// hits / visible_voters, 0 when there are no visible voters.
  double hit_rate() const;
  /// hits / outputs, 1 when there is no output.
  double precision() const;
};

/// Whether each result is a hit: some visible truth entry has the same client
/// and box and a vote time within `tolerance`.
std::vector<bool> classify(const std::vector<MatchResult>& results, const GroundTruth& truth, Duration tolerance);
Metrics score(const std::vector<MatchResult>& results, const GroundTruth& truth, Duration tolerance);
/// (steps - 1) * d, the longest span a match can cover.
Duration default_tolerance(const Pattern& pattern, Duration d);

struct SweepSpec {
  std::string scenario;
  std::uint64_t seed = 0;
  std::vector<std::uint32_t> x_values;
  std::vector<Duration> d_values;
  Duration t = kSecond;
  WindowMode mode = NoiseParams{}.mode;
  /// Scoring tolerance; default_tolerance(pattern, d) when empty.
  std::optional<Duration> tolerance;
  unsigned jobs = 1;
  void validate() const;
};

struct SweepRow {
  std::string scenario;
  std::uint64_t seed = 0;
  std::uint32_t x = 0;
  Duration t = 0;
  Duration d = 0;
  Metrics metrics;
};

/// One row per (x, d), ordered by x then d.
std::vector<SweepRow> sweep(const SweepSpec& spec, const AttackerView& view, const Pattern& pattern,
                            const GroundTruth& truth);

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows, bool header = true);
std::vector<SweepRow> read_sweep_csv(std::istream& in, const std::string& source = "<csv>");

/// Highest hit rate among rows with at most `max_false_positives` (ties: fewer
/// false positives, then smaller x, then smaller d).
std::optional<SweepRow> best_point(const std::vector<SweepRow>& rows,
                                   std::size_t max_false_positives = static_cast<std::size_t>(-1));

struct ScenarioSummary {
  std::string scenario;
  std::optional<SweepRow> best;
};

struct Comparison {
  std::vector<ScenarioSummary> rows;
  /// Set when scenarios named vote-only, browser and file-transfer are all
  /// present: vote-only >= browser and browser >= file-transfer - slack.
  std::optional<bool> expected_ordering;
};

/// Groups rows by scenario name, keeps the best point of each.
Comparison compare_scenarios(const std::vector<SweepRow>& rows,
                             std::size_t max_false_positives = static_cast<std::size_t>(-1), double slack = 0.02);
void write_comparison(std::ostream& out, const Comparison& comparison);

}  // namespace votetrace
