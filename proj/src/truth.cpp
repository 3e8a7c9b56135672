#include "votetrace/truth.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <tuple>

namespace votetrace {

namespace {
bool by_time(const VoteRecord& a, const VoteRecord& b) {
  return std::tie(a.time, a.client, a.box) < std::tie(b.time, b.client, b.box);
}
}  // namespace

void write_ground_truth(std::ostream& out, std::vector<VoteRecord> votes) {
  std::sort(votes.begin(), votes.end(), by_time);
  for (const VoteRecord& v : votes) {
    out << to_string(v.client) << '\t' << v.time << '\t' << to_string(v.box) << '\n';
  }
}

std::vector<VoteRecord> read_ground_truth(std::istream& in, const std::string& source) {
  std::vector<VoteRecord> votes;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.empty()) continue;
    const auto t1 = line.find('\t');
    const auto t2 = t1 == std::string::npos ? t1 : line.find('\t', t1 + 1);
    if (t2 == std::string::npos) throw ParseError(source, number, "expected client<TAB>time_ns<TAB>box");
    auto client = parse_address(std::string_view(line).substr(0, t1));
    auto box = parse_address(std::string_view(line).substr(t2 + 1));
    SimTime time = 0;
    const char* b = line.data() + t1 + 1;
    const char* e = line.data() + t2;
    auto [p, ec] = std::from_chars(b, e, time);
    if (!client || !box || ec != std::errc{} || p != e || b == e) {
      throw ParseError(source, number, "malformed ground truth line '" + line + "'");
    }
    votes.push_back({*client, time, *box});
  }
  return votes;
}

void save_ground_truth(const std::string& path, const std::vector<VoteRecord>& votes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write ground truth '" + path + "'");
  write_ground_truth(out, votes);
}

std::vector<VoteRecord> load_ground_truth(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open ground truth '" + path + "'");
  return read_ground_truth(in, path);
}

}  // namespace votetrace
