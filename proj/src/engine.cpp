#include "votetrace/engine.hpp"

#include <stdexcept>
#include <string>

namespace votetrace {

Engine::Engine(std::unique_ptr<EventQueue> queue)
    : queue_(queue ? std::move(queue) : std::make_unique<HeapEventQueue>()) {}

void Engine::schedule(Event ev) {
  if (ev.fire_time < clock_) {
    throw std::logic_error("event scheduled in the past: fire_time=" +
                           std::to_string(ev.fire_time) + " now=" + std::to_string(clock_));
  }
  ev.seq = next_seq_++;
  ++pending_by_kind_[static_cast<std::size_t>(ev.kind)];
  queue_->push(std::move(ev));
}

void Engine::schedule_at(SimTime when, NodeId target, EventKind kind, std::uint64_t tag) {
  Event ev;
  ev.fire_time = when;
  ev.target = target;
  ev.kind = kind;
  ev.tag = tag;
  schedule(std::move(ev));
}

std::uint64_t Engine::run(SimTime until, const Handler& handler) {
  if (until < clock_) throw std::logic_error("run() target lies before the current clock");
  std::uint64_t count = 0;
  while (!queue_->empty() && queue_->top().fire_time <= until) {
    Event ev = queue_->pop();
    --pending_by_kind_[static_cast<std::size_t>(ev.kind)];
    clock_ = ev.fire_time;
    handler(ev);
    ++count;
  }
  clock_ = until;
  processed_ += count;
  return count;
}

}  // namespace votetrace
