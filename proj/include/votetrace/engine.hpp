#pragma once

#include "votetrace/types.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <queue>
#include <vector>

namespace votetrace {

enum class EventKind : std::uint8_t { PacketArrival = 0, Timer = 1, BehaviorTrigger = 2 };
inline constexpr std::size_t kEventKindCount = 3;

/// One unit of traffic on one hop. The engine treats it as opaque; the network
/// fills in the hop endpoints and the actors own the meaning of the rest.
struct Packet {
  NodeId from;
  NodeId to;
  Address src;
  Address dst;
  std::uint64_t id = 0;
  std::uint32_t circuit = 0;
  std::uint32_t stream = 0;
  std::uint16_t cell = 0;
  std::uint16_t flags = 0;
  std::uint32_t aux = 0;
};

struct Event {
  SimTime fire_time = 0;
  NodeId target;
  EventKind kind = EventKind::Timer;
  std::uint64_t seq = 0;
  std::uint64_t tag = 0;
  Packet packet;
};

/// Strict weak order used by every queue: earliest fire time first, then
/// insertion order.
inline bool fires_before(const Event& a, const Event& b) {
  if (a.fire_time != b.fire_time) return a.fire_time < b.fire_time;
  return a.seq < b.seq;
}

class EventQueue {
 public:
  virtual ~EventQueue() = default;
  virtual void push(Event ev) = 0;
  virtual Event pop() = 0;
  virtual const Event& top() const = 0;
  virtual bool empty() const = 0;
  virtual std::size_t size() const = 0;
};

class HeapEventQueue final : public EventQueue {
 public:
  void push(Event ev) override { heap_.push(std::move(ev)); }
  Event pop() override {
    Event ev = heap_.top();
    heap_.pop();
    return ev;
  }
  const Event& top() const override { return heap_.top(); }
  bool empty() const override { return heap_.empty(); }
  std::size_t size() const override { return heap_.size(); }

 private:
  struct Later {
    bool operator()(const Event& a, const Event& b) const { return fires_before(b, a); }
  };
  std::priority_queue<Event, std::vector<Event>, Later> heap_;
};

/// Single-threaded discrete-event core.
class Engine {
 public:
  using Handler = std::function<void(const Event&)>;

  explicit Engine(std::unique_ptr<EventQueue> queue = nullptr);

  SimTime now() const { return clock_; }

  /// Queues `ev`, assigning its sequence number. Throws std::logic_error when
  /// `ev.fire_time` lies before the current clock.
  void schedule(Event ev);
  void schedule_at(SimTime when, NodeId target, EventKind kind, std::uint64_t tag = 0);

  /// Processes every event with fire_time <= until, then advances the clock to
  /// `until`. Returns the number of events processed by this call.
  std::uint64_t run(SimTime until, const Handler& handler);

  std::size_t pending() const { return queue_->size(); }
  std::size_t pending(EventKind kind) const { return pending_by_kind_[static_cast<std::size_t>(kind)]; }
  std::uint64_t processed() const { return processed_; }

 private:
  std::unique_ptr<EventQueue> queue_;
  SimTime clock_ = 0;
  std::uint64_t next_seq_ = 0;
  std::uint64_t processed_ = 0;
  std::array<std::size_t, kEventKindCount> pending_by_kind_{};
};

}  // namespace votetrace
