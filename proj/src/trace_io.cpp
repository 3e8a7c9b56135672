#include "votetrace/trace_io.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace votetrace {

namespace {

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  return in;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  return out;
}

std::vector<std::string_view> split_spaces(std::string_view line) {
  std::vector<std::string_view> parts;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && line[i] == ' ') ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ') ++i;
    if (i > start) parts.push_back(line.substr(start, i - start));
  }
  return parts;
}

constexpr std::uint32_t kMagicMicro = 0xa1b2c3d4;
constexpr std::uint32_t kMagicNano = 0xa1b23c4d;
constexpr std::uint32_t kLinkEthernet = 1;
constexpr std::uint32_t kLinkRaw = 101;
constexpr std::uint32_t kLinkLinuxSll = 113;
constexpr std::uint32_t kLinkIpv4 = 228;
constexpr std::uint32_t kMaxFrame = 256 * 1024;

void put_u32(std::ostream& out, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v), static_cast<char>(v >> 8), static_cast<char>(v >> 16),
                     static_cast<char>(v >> 24)};
  out.write(b, 4);
}

void put_u16(std::ostream& out, std::uint16_t v) {
  const char b[2] = {static_cast<char>(v), static_cast<char>(v >> 8)};
  out.write(b, 2);
}

std::uint32_t get_u32(const unsigned char* p, bool swap) {
  std::uint32_t v = p[0] | (p[1] << 8) | (p[2] << 16) | (std::uint32_t{p[3]} << 24);
  return swap ? __builtin_bswap32(v) : v;
}

std::uint16_t get_be16(const unsigned char* p) { return static_cast<std::uint16_t>((p[0] << 8) | p[1]); }
std::uint32_t get_be32(const unsigned char* p) {
  return (std::uint32_t{p[0]} << 24) | (p[1] << 16) | (p[2] << 8) | p[3];
}

std::uint16_t ipv4_checksum(const std::array<unsigned char, 20>& h) {
  std::uint32_t sum = 0;
  for (std::size_t i = 0; i < h.size(); i += 2) sum += get_be16(&h[i]);
  while (sum >> 16) sum = (sum & 0xffff) + (sum >> 16);
  return static_cast<std::uint16_t>(~sum);
}

/// Reads exactly n bytes; returns how many were available.
std::size_t read_some(std::istream& in, unsigned char* buf, std::size_t n) {
  in.read(reinterpret_cast<char*>(buf), static_cast<std::streamsize>(n));
  return static_cast<std::size_t>(in.gcount());
}

}  // namespace

void write_native_log(std::ostream& out, std::span<const PacketRecord> records) {
  for (const PacketRecord& r : records) out << r.time << ' ' << to_string(r.src) << ' ' << to_string(r.dst) << '\n';
}

std::vector<PacketRecord> read_native_log(std::istream& in, const std::string& source) {
  std::vector<PacketRecord> records;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto parts = split_spaces(line);
    if (parts.size() != 3) throw ParseError(source, number, "expected 'time_ns src dst'");
    PacketRecord r;
    auto [p, ec] = std::from_chars(parts[0].data(), parts[0].data() + parts[0].size(), r.time);
    if (ec != std::errc{} || p != parts[0].data() + parts[0].size()) {
      throw ParseError(source, number, "bad timestamp '" + std::string(parts[0]) + "'");
    }
    auto src = parse_address(parts[1]);
    auto dst = parse_address(parts[2]);
    if (!src || !dst) throw ParseError(source, number, "addresses must be dotted-quad IPv4");
    if (*src == *dst) throw ParseError(source, number, "source equals destination");
    r.src = *src;
    r.dst = *dst;
    if (!records.empty() && r < records.back()) throw ParseError(source, number, "line out of log order");
    records.push_back(r);
  }
  return records;
}

void save_native_log(const std::string& path, std::span<const PacketRecord> records) {
  auto out = open_out(path);
  write_native_log(out, records);
  if (!out) throw std::runtime_error("write failed: '" + path + "'");
}

std::vector<PacketRecord> load_native_log(const std::string& path) {
  auto in = open_in(path);
  return read_native_log(in, path);
}

void write_pcap(std::ostream& out, std::span<const PacketRecord> records) {
  put_u32(out, kMagicNano);
  put_u16(out, 2);
  put_u16(out, 4);
  put_u32(out, 0);  // thiszone
  put_u32(out, 0);  // sigfigs
  put_u32(out, 65535);
  put_u32(out, kLinkRaw);
  for (const PacketRecord& r : records) {
    put_u32(out, static_cast<std::uint32_t>(r.time / kSecond));
    put_u32(out, static_cast<std::uint32_t>(r.time % kSecond));
    put_u32(out, 20);
    put_u32(out, 20);
    std::array<unsigned char, 20> h{};
    h[0] = 0x45;
    h[3] = 20;
    h[8] = 64;
    h[9] = 253;  // experimental protocol number
    for (int i = 0; i < 4; ++i) {
      h[12 + i] = static_cast<unsigned char>(r.src.value >> (24 - 8 * i));
      h[16 + i] = static_cast<unsigned char>(r.dst.value >> (24 - 8 * i));
    }
    const std::uint16_t sum = ipv4_checksum(h);
    h[10] = static_cast<unsigned char>(sum >> 8);
    h[11] = static_cast<unsigned char>(sum);
    out.write(reinterpret_cast<const char*>(h.data()), h.size());
  }
}

std::vector<PacketRecord> read_pcap(std::istream& in, const std::string& source) {
  std::vector<PacketRecord> records;
  std::array<unsigned char, 24> header{};
  const std::size_t got = read_some(in, header.data(), header.size());
  if (got == 0) return records;
  if (got < header.size()) throw IngestError(source, got, "truncated file header");

  const std::uint32_t raw_magic = get_u32(header.data(), false);
  bool swap = false;
  bool nano = false;
  if (raw_magic == kMagicMicro || raw_magic == kMagicNano) {
    nano = raw_magic == kMagicNano;
  } else if (__builtin_bswap32(raw_magic) == kMagicMicro || __builtin_bswap32(raw_magic) == kMagicNano) {
    swap = true;
    nano = __builtin_bswap32(raw_magic) == kMagicNano;
  } else {
    throw IngestError(source, 0, "not a capture file (bad magic)");
  }
  const std::uint32_t linktype = get_u32(header.data() + 20, swap) & 0x0fffffff;
  if (linktype != kLinkEthernet && linktype != kLinkRaw && linktype != kLinkLinuxSll && linktype != kLinkIpv4) {
    throw IngestError(source, 20, "unsupported link type " + std::to_string(linktype));
  }

  std::uint64_t offset = header.size();
  std::vector<unsigned char> frame;
  while (true) {
    std::array<unsigned char, 16> rec{};
    const std::size_t n = read_some(in, rec.data(), rec.size());
    if (n == 0) break;
    if (n < rec.size()) throw IngestError(source, offset, "truncated record header");
    const std::uint64_t sec = get_u32(rec.data(), swap);
    const std::uint64_t frac = get_u32(rec.data() + 4, swap);
    const std::uint32_t incl = get_u32(rec.data() + 8, swap);
    if (incl > kMaxFrame) throw IngestError(source, offset + 8, "implausible captured length");
    if (frac >= (nano ? kSecond : 1'000'000)) throw IngestError(source, offset + 4, "sub-second field out of range");
    frame.resize(incl);
    if (read_some(in, frame.data(), incl) < incl) throw IngestError(source, offset + 16, "truncated packet data");

    std::size_t ip = 0;
    bool ipv4 = false;
    switch (linktype) {
      case kLinkEthernet: {
        ip = 14;
        if (incl >= 14) {
          std::uint16_t ethertype = get_be16(&frame[12]);
          if (ethertype == 0x8100 && incl >= 18) {
            ethertype = get_be16(&frame[16]);
            ip = 18;
          }
          ipv4 = ethertype == 0x0800;
        }
        break;
      }
      case kLinkLinuxSll:
        ip = 16;
        ipv4 = incl >= 16 && get_be16(&frame[14]) == 0x0800;
        break;
      case kLinkRaw:
      case kLinkIpv4:
        ipv4 = true;
        break;
    }
    if (ipv4 && incl >= ip + 20 && (frame[ip] >> 4) == 4) {
      PacketRecord r;
      r.time = sec * kSecond + (nano ? frac : frac * 1000);
      r.src = Address{get_be32(&frame[ip + 12])};
      r.dst = Address{get_be32(&frame[ip + 16])};
      if (r.src != r.dst) records.push_back(r);
    }
    offset += 16 + incl;
  }
  return records;
}

void save_pcap(const std::string& path, std::span<const PacketRecord> records) {
  auto out = open_out(path);
  write_pcap(out, records);
  if (!out) throw std::runtime_error("write failed: '" + path + "'");
}

TraceFormat parse_trace_format(const std::string& text) {
  if (text == "native") return TraceFormat::Native;
  if (text == "pcap") return TraceFormat::Pcap;
  if (text == "auto") return TraceFormat::Auto;
  throw std::invalid_argument("unknown trace format '" + text + "' (native, pcap, auto)");
}

std::vector<PacketRecord> import_trace(const std::string& path, TraceFormat format) {
  auto in = open_in(path);
  if (format == TraceFormat::Auto) {
    std::array<unsigned char, 4> magic{};
    const std::size_t n = read_some(in, magic.data(), magic.size());
    in.clear();
    in.seekg(0);
    format = TraceFormat::Native;
    if (n == 4) {
      const std::uint32_t m = get_u32(magic.data(), false);
      for (std::uint32_t known : {kMagicMicro, kMagicNano}) {
        if (m == known || __builtin_bswap32(m) == known) format = TraceFormat::Pcap;
      }
    }
  }
  std::vector<PacketRecord> records = format == TraceFormat::Pcap ? read_pcap(in, path) : read_native_log(in, path);
  sort_records(records);
  return records;
}

void write_endpoints(std::ostream& out, const Endpoints& endpoints) {
  for (Address a : endpoints.visible_clients) out << "client " << to_string(a) << '\n';
  for (Address a : endpoints.ballot_boxes) out << "box " << to_string(a) << '\n';
}

Endpoints read_endpoints(std::istream& in, const std::string& source) {
  Endpoints e;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto parts = split_spaces(line);
    if (parts.empty() || parts[0].starts_with('#')) continue;
    if (parts.size() != 2) throw ParseError(source, number, "expected 'client ADDR' or 'box ADDR'");
    auto addr = parse_address(parts[1]);
    if (!addr) throw ParseError(source, number, "bad address '" + std::string(parts[1]) + "'");
    if (parts[0] == "client") {
      e.visible_clients.insert(*addr);
    } else if (parts[0] == "box") {
      e.ballot_boxes.insert(*addr);
    } else {
      throw ParseError(source, number, "unknown role '" + std::string(parts[0]) + "'");
    }
  }
  return e;
}

void save_endpoints(const std::string& path, const Endpoints& endpoints) {
  auto out = open_out(path);
  write_endpoints(out, endpoints);
}

Endpoints load_endpoints(const std::string& path) {
  auto in = open_in(path);
  return read_endpoints(in, path);
}

}  // namespace votetrace
