#pragma once

#include "votetrace/capture.hpp"

#include <cstddef>
#include <iosfwd>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace votetrace {

enum class Role : std::uint8_t { Client, Server };
enum class Direction : std::uint8_t { Out, In };

struct Step {
  Role role = Role::Client;
  Direction direction = Direction::Out;
  friend constexpr auto operator<=>(const Step&, const Step&) = default;
};
std::string to_string(Step step);

class PatternError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Pattern {
  std::vector<Step> steps;

  std::size_t size() const { return steps.size(); }
  /// Throws PatternError unless non-empty and starting with a client output.
  void validate() const;
  /// Most steps sharing one (role, direction).
  std::size_t max_steps_per_stream() const;
  friend bool operator==(const Pattern&, const Pattern&) = default;
};

/// Pattern file: one `client|server out|in` step per line.
void write_pattern(std::ostream& out, const Pattern& pattern);
Pattern read_pattern(std::istream& in, const std::string& source = "<pattern>");
void save_pattern(const std::string& path, const Pattern& pattern);
Pattern load_pattern(const std::string& path);

/// Learns the vote pattern from a reference view holding exactly one client
/// and one server. The pattern starts at the last client output before the
/// server's first input, and ends at the server's last input or at the first
/// client input after the server's last output, whichever is later. Earlier
/// records (circuit setup, directory traffic) are trimmed.
Pattern extract_pattern(const AttackerView& reference);

enum class WindowMode { Tumbling, Sliding };
std::string to_string(WindowMode mode);
WindowMode parse_window_mode(const std::string& text);

struct NoiseParams {
  static constexpr std::uint32_t kUnlimited = std::numeric_limits<std::uint32_t>::max();
  /// Largest tolerated number of records per window.
  std::uint32_t x = kUnlimited;
  Duration t = kSecond;
  /// Tumbling: windows [k*t, (k+1)*t). Sliding: a record goes when any window
  /// of length t that contains it holds more than x records.
  WindowMode mode = WindowMode::Sliding;
  void validate() const;
};

/// Deletes every record of an over-full window. Each monitored endpoint and
/// direction forms its own stream; a record leaves when any of its streams
/// drops it.
AttackerView noise_reduce(const AttackerView& view, const NoiseParams& params);

struct MatchParams {
  Duration d = kSecond;
  void validate() const;
};

struct MatchResult {
  Address client;
  /// Time of the first matched client-output record.
  SimTime vote_time = 0;
  Address box;
  /// Indices into the analysed view, one per pattern step.
  std::vector<std::size_t> matched_records;
  friend bool operator==(const MatchResult&, const MatchResult&) = default;
};

/// For each (visible client, ballot box) pair, the earliest binding of the
/// pattern: record times strictly increase, consecutive gaps are at most d,
/// and among bindings with the earliest start the lexicographically smallest
/// record sequence is returned. Output is ordered by (client, box).
/// `jobs` > 1 spreads clients over threads; the output does not change.
std::vector<MatchResult> match(const AttackerView& view, const Pattern& pattern, const MatchParams& params,
                               unsigned jobs = 1);

/// match(noise_reduce(view, noise), pattern, params). Indices refer to the
/// reduced view.
std::vector<MatchResult> analyze(const AttackerView& view, const Pattern& pattern, const NoiseParams& noise,
                                 const MatchParams& params, unsigned jobs = 1);

}  // namespace votetrace
