#pragma once

#include "votetrace/types.hpp"

#include <compare>
#include <iosfwd>
#include <string>
#include <vector>

namespace votetrace {

/// One cast vote: who, when (send time of the first payload cell at the
/// client) and at which ballot box.
struct VoteRecord {
  Address client;
  SimTime time = 0;
  Address box;

  friend constexpr auto operator<=>(const VoteRecord&, const VoteRecord&) = default;
};

/// Ground truth file: `client<TAB>time_ns<TAB>box` per line, sorted by time.
void write_ground_truth(std::ostream& out, std::vector<VoteRecord> votes);
std::vector<VoteRecord> read_ground_truth(std::istream& in, const std::string& source = "<truth>");
void save_ground_truth(const std::string& path, const std::vector<VoteRecord>& votes);
std::vector<VoteRecord> load_ground_truth(const std::string& path);

}  // namespace votetrace
