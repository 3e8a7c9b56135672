#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace votetrace {

/// Simulated time in integer nanoseconds since simulation start.
using SimTime = std::uint64_t;
/// A non-negative span of simulated time, also in nanoseconds.
using Duration = std::uint64_t;

inline constexpr Duration kNanosecond = 1;
inline constexpr Duration kMicrosecond = 1'000;
inline constexpr Duration kMillisecond = 1'000'000;
inline constexpr Duration kSecond = 1'000'000'000;
inline constexpr Duration kMinute = 60 * kSecond;

inline constexpr double to_seconds(Duration d) { return static_cast<double>(d) / 1e9; }
inline constexpr Duration from_seconds(double s) { return static_cast<Duration>(s * 1e9 + 0.5); }

/// Index of a simulated node.
struct NodeId {
  std::uint32_t value = 0;
  friend constexpr auto operator<=>(NodeId, NodeId) = default;
};

/// An IPv4 address. Ordering is numeric, which is the tie order used by logs.
struct Address {
  std::uint32_t value = 0;
  friend constexpr auto operator<=>(Address, Address) = default;

  static constexpr Address from_octets(std::uint8_t a, std::uint8_t b, std::uint8_t c,
                                       std::uint8_t d) {
    return Address{(std::uint32_t{a} << 24) | (std::uint32_t{b} << 16) |
                   (std::uint32_t{c} << 8) | std::uint32_t{d}};
  }
};

std::string to_string(Address a);
/// Parses a dotted quad. Returns nullopt on anything else.
std::optional<Address> parse_address(std::string_view text);

/// Raised when input data (logs, traces, pattern files, configs) cannot be parsed.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what)
      : std::runtime_error(source + ":" + std::to_string(line) + ": " + what),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Raised for invalid scenario or sweep configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace votetrace

template <>
struct std::hash<votetrace::Address> {
  std::size_t operator()(votetrace::Address a) const noexcept {
    return std::hash<std::uint32_t>{}(a.value);
  }
};
