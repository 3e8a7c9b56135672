#include "votetrace/types.hpp"
#include "votetrace/rng.hpp"

#include <charconv>
#include <cmath>

namespace votetrace {

std::string to_string(Address a) {
  std::string out;
  out.reserve(15);
  for (int shift = 24; shift >= 0; shift -= 8) {
    out += std::to_string((a.value >> shift) & 0xff);
    if (shift) out += '.';
  }
  return out;
}

std::optional<Address> parse_address(std::string_view text) {
  std::uint32_t value = 0;
  const char* p = text.data();
  const char* end = p + text.size();
  for (int i = 0; i < 4; ++i) {
    if (i > 0) {
      if (p == end || *p != '.') return std::nullopt;
      ++p;
    }
    unsigned octet = 0;
    auto [next, ec] = std::from_chars(p, end, octet);
    if (ec != std::errc{} || next == p || next - p > 3 || octet > 255) return std::nullopt;
    value = (value << 8) | octet;
    p = next;
  }
  if (p != end) return std::nullopt;
  return Address{value};
}

namespace {
std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}
}  // namespace

std::uint64_t Rng::derive(std::uint64_t master_seed, std::uint64_t stream_id) {
  return splitmix64(splitmix64(master_seed) ^ splitmix64(stream_id + 0x632be59bd9b4e019ull));
}

Rng::Rng(std::uint64_t master_seed, std::uint64_t stream_id)
    : engine_(derive(master_seed, stream_id)) {}

double Rng::uniform01() {
  // 53 random mantissa bits.
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

std::uint64_t Rng::uniform_int(std::uint64_t lo, std::uint64_t hi) {
  if (hi <= lo) return lo;
  const std::uint64_t span = hi - lo;
  if (span == ~std::uint64_t{0}) return engine_();
  const std::uint64_t range = span + 1;
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % range);
  std::uint64_t draw;
  do {
    draw = engine_();
  } while (draw >= limit);
  return lo + draw % range;
}

double Rng::exponential(double mean) {
  return -mean * std::log1p(-uniform01());
}

}  // namespace votetrace
