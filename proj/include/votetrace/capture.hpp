#pragma once

#include "votetrace/types.hpp"

#include <compare>
#include <set>
#include <span>
#include <vector>

namespace votetrace {

/// One observed packet. Payload and size are never captured.
struct PacketRecord {
  SimTime time = 0;
  Address src;
  Address dst;

  /// Log order: time, then source, then destination.
  friend constexpr auto operator<=>(const PacketRecord&, const PacketRecord&) = default;
};

using AddressSet = std::set<Address>;

/// Collects records at instrumented links while a simulation runs.
class CaptureSink {
 public:
  /// Records stamped before `discard_before` are counted but not kept.
  explicit CaptureSink(SimTime discard_before = 0) : discard_before_(discard_before) {}

  /// Throws std::invalid_argument when src == dst.
  void record(SimTime time, Address src, Address dst);

  std::size_t size() const { return records_.size(); }
  std::uint64_t discarded() const { return discarded_; }
  /// Total records seen, kept or discarded.
  std::uint64_t observed() const { return records_.size() + discarded_; }

  /// Returns the records in log order and leaves the sink empty.
  std::vector<PacketRecord> take_sorted();

 private:
  SimTime discard_before_;
  std::uint64_t discarded_ = 0;
  std::vector<PacketRecord> records_;
};

/// The packet log restricted to what the attacker observes: first-hop links of
/// the visible clients and the links of the ballot boxes.
struct AttackerView {
  AddressSet visible_clients;
  AddressSet ballot_boxes;
  std::vector<PacketRecord> records;

  bool touches_vantage(const PacketRecord& r) const;
};

/// Sorts into log order (time, src, dst).
void sort_records(std::vector<PacketRecord>& records);
bool is_log_ordered(std::span<const PacketRecord> records, bool strict);

/// Keeps exactly the records that have a visible client or a ballot box as
/// source or destination. Throws std::invalid_argument if the two address sets
/// overlap.
AttackerView filter_visible(std::span<const PacketRecord> full_log, const AddressSet& visible_clients,
                            const AddressSet& ballot_boxes);
/// Re-filters an existing view with its own sets (identity on valid views).
AttackerView filter_visible(const AttackerView& view);

struct SpliceOptions {
  /// Addresses of the node(s) the external trace was captured at. They are
  /// never candidates.
  AddressSet trace_nodes;
  /// Colliding external addresses are moved into this prefix, lowest first.
  Address remap_base = Address::from_octets(100, 64, 0, 0);
  /// Offset added to the box streams after both inputs are shifted to t = 0.
  Duration box_offset = 0;
};

struct SpliceResult {
  AttackerView view;
  /// external address -> address used in the merged view, for remapped ones.
  std::vector<std::pair<Address, Address>> remapped;
};

/// Merges simulated ballot-box streams into an external vote-free trace. Every
/// external address other than the trace nodes becomes a candidate voter.
SpliceResult splice(std::span<const PacketRecord> external_trace, std::span<const PacketRecord> box_streams,
                    const AddressSet& ballot_boxes, const SpliceOptions& options = {});

}  // namespace votetrace
