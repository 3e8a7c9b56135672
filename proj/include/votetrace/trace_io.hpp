#pragma once

#include "votetrace/capture.hpp"

#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace votetrace {

/// Malformed binary capture; `offset` is the byte position of the problem.
class IngestError : public std::runtime_error {
 public:
  IngestError(const std::string& source, std::uint64_t offset, const std::string& what)
      : std::runtime_error(source + ": offset " + std::to_string(offset) + ": " + what), offset_(offset) {}
  std::uint64_t offset() const { return offset_; }

 private:
  std::uint64_t offset_;
};

/// Native text log: `time_ns src dst` per line, dotted-quad addresses, in log
/// order. The reader rejects lines that go backwards in log order.
void write_native_log(std::ostream& out, std::span<const PacketRecord> records);
std::vector<PacketRecord> read_native_log(std::istream& in, const std::string& source = "<log>");
void save_native_log(const std::string& path, std::span<const PacketRecord> records);
std::vector<PacketRecord> load_native_log(const std::string& path);

/// Classic capture file with nanosecond timestamps and raw IPv4 link type.
/// Each record becomes a bare 20-byte IPv4 header.
void write_pcap(std::ostream& out, std::span<const PacketRecord> records);
/// Accepts microsecond and nanosecond files of either byte order with
/// Ethernet, raw IP, IPv4 or Linux cooked link types. Non-IPv4 frames are
/// skipped. Records come back in file order.
std::vector<PacketRecord> read_pcap(std::istream& in, const std::string& source = "<pcap>");
void save_pcap(const std::string& path, std::span<const PacketRecord> records);

enum class TraceFormat { Native, Pcap, Auto };
TraceFormat parse_trace_format(const std::string& text);

/// Reads a trace and returns it in log order. Auto sniffs the capture magic.
std::vector<PacketRecord> import_trace(const std::string& path, TraceFormat format = TraceFormat::Auto);

/// Endpoint roles of a log: which addresses are monitored clients and which
/// are ballot boxes. One `client ADDR` or `box ADDR` per line.
struct Endpoints {
  AddressSet visible_clients;
  AddressSet ballot_boxes;
};
void write_endpoints(std::ostream& out, const Endpoints& endpoints);
Endpoints read_endpoints(std::istream& in, const std::string& source = "<endpoints>");
void save_endpoints(const std::string& path, const Endpoints& endpoints);
Endpoints load_endpoints(const std::string& path);

}  // namespace votetrace
