#pragma once

#include <cstdint>
#include <random>

namespace votetrace {

/// Seeded random stream. Every node, link and behavior owns its own stream,
/// derived from the master seed and a stream id, so adding draws in one
/// component never shifts the sequence seen by another.
///
/// Distribution math is done here rather than through <random> distributions
/// because those are implementation-defined and would make logs differ between
/// standard libraries.
class Rng {
 public:
  Rng(std::uint64_t master_seed, std::uint64_t stream_id);

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform in [0, 1).
  double uniform01();
  /// Uniform integer in [lo, hi] inclusive.
  std::uint64_t uniform_int(std::uint64_t lo, std::uint64_t hi);
  /// Uniform real in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }
  double exponential(double mean);

  static std::uint64_t derive(std::uint64_t master_seed, std::uint64_t stream_id);

 private:
  std::mt19937_64 engine_;
};

/// Stream id namespaces so that ids of different component kinds never collide.
namespace stream {
inline constexpr std::uint64_t kTopology = 1;
inline constexpr std::uint64_t kLinkBase = 1ull << 40;
inline constexpr std::uint64_t kNodeBase = 2ull << 40;
inline constexpr std::uint64_t kAux = 3ull << 40;
}  // namespace stream

}  // namespace votetrace
