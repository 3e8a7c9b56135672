#pragma once

#include "votetrace/evaluation.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace votetrace {

/// Sweep file (INI, section [sweep]) as read by the `sweep` command.
/// Relative paths are resolved against the file's directory.
struct SweepFile {
  SweepSpec spec;
  std::string log;
  std::string truth;
  std::string pattern;
  std::string endpoints;
};
SweepFile parse_sweep_file(std::istream& in, const std::string& base_dir, const std::string& source = "<sweep>");
SweepFile load_sweep_file(const std::string& path);

/// Parses "3-15", "3,5,7" or a mix such as "3-5,9".
std::vector<std::uint64_t> parse_value_list(const std::string& text);

/// Entry point of the votetrace command. Returns the process exit code.
int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace votetrace
