#include "votetrace/capture.hpp"

#include <algorithm>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

namespace votetrace {

void CaptureSink::record(SimTime time, Address src, Address dst) {
  if (src == dst) throw std::invalid_argument("capture: packet with src == dst " + to_string(src));
  if (time < discard_before_) {
    ++discarded_;
    return;
  }
  records_.push_back({time, src, dst});
}

std::vector<PacketRecord> CaptureSink::take_sorted() {
  std::vector<PacketRecord> out = std::move(records_);
  records_.clear();
  sort_records(out);
  return out;
}

void sort_records(std::vector<PacketRecord>& records) {
  // Records arrive nearly sorted (engine order); only ties need fixing, but a
  // full sort keeps this independent of the producer.
  std::sort(records.begin(), records.end());
}

bool is_log_ordered(std::span<const PacketRecord> records, bool strict) {
  for (std::size_t i = 1; i < records.size(); ++i) {
    if (strict ? !(records[i - 1] < records[i]) : records[i] < records[i - 1]) return false;
  }
  return true;
}

bool AttackerView::touches_vantage(const PacketRecord& r) const {
  return visible_clients.contains(r.src) || visible_clients.contains(r.dst) ||
         ballot_boxes.contains(r.src) || ballot_boxes.contains(r.dst);
}

AttackerView filter_visible(std::span<const PacketRecord> full_log, const AddressSet& visible_clients,
                            const AddressSet& ballot_boxes) {
  for (Address box : ballot_boxes) {
    if (visible_clients.contains(box)) {
      throw std::invalid_argument("filter_visible: " + to_string(box) +
                                  " is both a visible client and a ballot box");
    }
  }
  std::unordered_set<Address> vantage(visible_clients.begin(), visible_clients.end());
  vantage.insert(ballot_boxes.begin(), ballot_boxes.end());

  AttackerView view;
  view.visible_clients = visible_clients;
  view.ballot_boxes = ballot_boxes;
  for (const PacketRecord& r : full_log) {
    if (vantage.contains(r.src) || vantage.contains(r.dst)) view.records.push_back(r);
  }
  if (!is_log_ordered(view.records, false)) sort_records(view.records);
  return view;
}

AttackerView filter_visible(const AttackerView& view) {
  return filter_visible(view.records, view.visible_clients, view.ballot_boxes);
}

SpliceResult splice(std::span<const PacketRecord> external_trace, std::span<const PacketRecord> box_streams,
                    const AddressSet& ballot_boxes, const SpliceOptions& options) {
  SpliceResult result;
  AttackerView& view = result.view;
  view.ballot_boxes = ballot_boxes;

  std::unordered_set<Address> sim_addresses;
  for (const PacketRecord& r : box_streams) {
    sim_addresses.insert(r.src);
    sim_addresses.insert(r.dst);
  }
  sim_addresses.insert(ballot_boxes.begin(), ballot_boxes.end());

  AddressSet external;
  for (const PacketRecord& r : external_trace) {
    external.insert(r.src);
    external.insert(r.dst);
  }

  std::unordered_set<Address> occupied = sim_addresses;
  occupied.insert(external.begin(), external.end());
  std::unordered_map<Address, Address> mapping;
  std::uint32_t cursor = options.remap_base.value;
  for (Address a : external) {
    if (!sim_addresses.contains(a)) continue;
    while (occupied.contains(Address{cursor})) ++cursor;
    mapping.emplace(a, Address{cursor});
    result.remapped.emplace_back(a, Address{cursor});
    occupied.insert(Address{cursor});
  }
  auto remap = [&](Address a) {
    auto it = mapping.find(a);
    return it == mapping.end() ? a : it->second;
  };

  AddressSet nodes;
  for (Address n : options.trace_nodes) nodes.insert(remap(n));
  for (Address a : external) {
    Address m = remap(a);
    if (!nodes.contains(m)) view.visible_clients.insert(m);
  }

  SimTime trace_zero = external_trace.empty() ? 0 : external_trace.front().time;
  for (const PacketRecord& r : external_trace) trace_zero = std::min(trace_zero, r.time);
  SimTime box_zero = box_streams.empty() ? 0 : box_streams.front().time;
  for (const PacketRecord& r : box_streams) box_zero = std::min(box_zero, r.time);

  view.records.reserve(external_trace.size() + box_streams.size());
  for (const PacketRecord& r : external_trace) {
    PacketRecord m{r.time - trace_zero, remap(r.src), remap(r.dst)};
    if (view.visible_clients.contains(m.src) || view.visible_clients.contains(m.dst)) {
      view.records.push_back(m);
    }
  }
  for (const PacketRecord& r : box_streams) {
    view.records.push_back({r.time - box_zero + options.box_offset, r.src, r.dst});
  }
  sort_records(view.records);
  return result;
}

}  // namespace votetrace
