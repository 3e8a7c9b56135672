#include "doctest.h"
#include "oracles.hpp"
#include "relay_chain.hpp"

#include "votetrace/engine.hpp"
#include "votetrace/network.hpp"
#include "votetrace/rng.hpp"

using namespace votetrace;

TEST_CASE("engine fires by time then insertion order") {
  Engine engine;
  std::vector<std::uint64_t> order;
  engine.schedule_at(30, NodeId{0}, EventKind::Timer, 1);
  engine.schedule_at(10, NodeId{0}, EventKind::Timer, 2);
  engine.schedule_at(30, NodeId{0}, EventKind::Timer, 3);
  engine.schedule_at(10, NodeId{0}, EventKind::Timer, 4);
  engine.run(100, [&](const Event& ev) { order.push_back(ev.tag); });
  CHECK(order == std::vector<std::uint64_t>{2, 4, 1, 3});
  CHECK(engine.now() == 100);
  CHECK(engine.processed() == 4);
}

TEST_CASE("engine run stops at the horizon and keeps later events") {
  Engine engine;
  engine.schedule_at(5, NodeId{0}, EventKind::Timer);
  engine.schedule_at(10, NodeId{0}, EventKind::BehaviorTrigger);
  engine.schedule_at(11, NodeId{0}, EventKind::PacketArrival);
  std::vector<SimTime> seen;
  CHECK(engine.run(10, [&](const Event& ev) { seen.push_back(ev.fire_time); }) == 2);
  CHECK(seen == std::vector<SimTime>{5, 10});
  CHECK(engine.pending() == 1);
  CHECK(engine.pending(EventKind::PacketArrival) == 1);
  CHECK(engine.pending(EventKind::Timer) == 0);
  CHECK_THROWS_AS(engine.schedule_at(9, NodeId{0}, EventKind::Timer), std::logic_error);
  CHECK_THROWS_AS(engine.run(3, [](const Event&) {}), std::logic_error);
}

TEST_CASE("handlers may schedule at the current instant") {
  Engine engine;
  int fired = 0;
  engine.schedule_at(7, NodeId{0}, EventKind::Timer, 0);
  engine.run(7, [&](const Event& ev) {
    ++fired;
    if (ev.tag < 3) engine.schedule_at(engine.now(), NodeId{0}, EventKind::Timer, ev.tag + 1);
  });
  CHECK(fired == 4);
}

TEST_CASE("heap queue pops the same sequence as the linear-scan reference") {
  Rng rng(42, 9);
  HeapEventQueue heap;
  oracle::NaiveQueue naive;
  std::uint64_t seq = 0;
  for (int round = 0; round < 2000; ++round) {
    if (heap.empty() || rng.uniform01() < 0.6) {
      Event ev;
      ev.fire_time = rng.uniform_int(0, 50);
      ev.seq = seq++;
      ev.tag = rng.next_u64();
      heap.push(ev);
      naive.push(ev);
    } else {
      const Event a = heap.pop();
      const Event b = naive.pop();
      REQUIRE(a.fire_time == b.fire_time);
      REQUIRE(a.seq == b.seq);
      REQUIRE(a.tag == b.tag);
    }
    REQUIRE(heap.size() == naive.size());
  }
}

TEST_CASE("rng streams are reproducible and independent") {
  Rng a(7, 1), b(7, 1), c(7, 2), d(8, 1);
  const auto x = a.next_u64();
  CHECK(x == b.next_u64());
  CHECK(x != c.next_u64());
  CHECK(x != d.next_u64());
  CHECK(Rng::derive(7, 1) == Rng::derive(7, 1));
  CHECK(Rng::derive(7, 1) != Rng::derive(7, 2));

  Rng r(1, 1);
  double sum = 0;
  for (int i = 0; i < 20000; ++i) {
    const auto u = r.uniform_int(3, 5);
    REQUIRE(u >= 3);
    REQUIRE(u <= 5);
    const double f = r.uniform01();
    REQUIRE(f >= 0.0);
    REQUIRE(f < 1.0);
    sum += r.exponential(2.0);
  }
  CHECK(sum / 20000 == doctest::Approx(2.0).epsilon(0.05));
}

namespace {

struct Bench {
  Engine engine;
  Network net{engine, 5};
  CaptureSink sink;
  std::vector<SimTime> arrivals;
  Bench() { net.set_sink(&sink); }
  void run(SimTime until) {
    engine.run(until, [&](const Event& ev) {
      net.on_arrival(ev);
      arrivals.push_back(ev.fire_time);
    });
  }
};

}  // namespace

TEST_CASE("link delay is the base latency without jitter or cap") {
  Bench b;
  const NodeId x = b.net.add_node(Address::from_octets(10, 0, 0, 1));
  const NodeId y = b.net.add_node(Address::from_octets(10, 0, 0, 2));
  b.net.connect(x, y, {3 * kMillisecond, JitterModel::none(), std::nullopt, true});
  CHECK(b.net.send(x, y, {}, 100) == 100 + 3 * kMillisecond);
  CHECK(b.net.send(y, x, {}, 200) == 200 + 3 * kMillisecond);
  b.run(kSecond);
  const auto recs = b.sink.take_sorted();
  REQUIRE(recs.size() == 2);
  CHECK(recs[0].src == Address::from_octets(10, 0, 0, 1));
  CHECK(recs[1].src == Address::from_octets(10, 0, 0, 2));
  CHECK(b.net.delivered() == 2);
}

TEST_CASE("bandwidth cap spaces a burst by the serialization time") {
  // 1000 packets queued at once on a 100 packets/s link: departures are 10 ms
  // apart, so the last arrives 999 * 10 ms after the first.
  Bench b;
  const NodeId x = b.net.add_node(Address::from_octets(10, 0, 0, 1));
  const NodeId y = b.net.add_node(Address::from_octets(10, 0, 0, 2));
  b.net.connect(x, y, {kMillisecond, JitterModel::none(), 100.0, false});
  SimTime first = 0, last = 0;
  for (int i = 0; i < 1000; ++i) {
    last = b.net.send(x, y, {}, 0);
    if (i == 0) first = last;
  }
  CHECK(last - first == 9'990 * kMillisecond);
  // The reverse direction has its own queue.
  CHECK(b.net.send(y, x, {}, 0) == kMillisecond);
}

TEST_CASE("arrivals per direction stay strictly ordered under jitter") {
  Bench b;
  const NodeId x = b.net.add_node(Address::from_octets(10, 0, 0, 1));
  const NodeId y = b.net.add_node(Address::from_octets(10, 0, 0, 2));
  b.net.connect(x, y, {kMillisecond, JitterModel::exponential(5 * kMillisecond), std::nullopt, false});
  SimTime prev = 0;
  for (int i = 0; i < 5000; ++i) {
    const SimTime a = b.net.send(x, y, {}, static_cast<SimTime>(i) * 100 * kMicrosecond);
    REQUIRE(a > prev);
    prev = a;
  }
}

TEST_CASE("connect rejects bad links") {
  Bench b;
  const NodeId x = b.net.add_node(Address::from_octets(10, 0, 0, 1));
  const NodeId y = b.net.add_node(Address::from_octets(10, 0, 0, 2));
  CHECK_THROWS_AS(b.net.connect(x, x, {}), std::invalid_argument);
  CHECK_THROWS_AS(b.net.connect(x, y, {0, {}, std::nullopt, false}), std::invalid_argument);
  CHECK_THROWS_AS(b.net.connect(x, y, {kMillisecond, {}, 0.0, false}), std::invalid_argument);
  b.net.connect(x, y, {});
  CHECK_THROWS_AS(b.net.connect(y, x, {}), std::invalid_argument);
  const NodeId z = b.net.add_node(Address::from_octets(10, 0, 0, 3));
  CHECK_THROWS_AS(b.net.send(x, z, {}, 0), std::logic_error);
}

TEST_CASE("packets still in flight count as dropped at the end") {
  Bench b;
  const NodeId x = b.net.add_node(Address::from_octets(10, 0, 0, 1));
  const NodeId y = b.net.add_node(Address::from_octets(10, 0, 0, 2));
  b.net.connect(x, y, {kSecond, {}, std::nullopt, false});
  b.net.send(x, y, {}, 0);
  b.net.send(x, y, {}, kSecond);
  b.run(kSecond + kSecond / 2);
  b.net.finalize();
  CHECK(b.net.injected() == 2);
  CHECK(b.net.delivered() == 1);
  CHECK(b.net.dropped() == 1);
  CHECK(b.net.injected() == b.net.delivered() + b.net.dropped());
}

TEST_CASE("zero jitter preserves inter-packet gaps across a relay chain") {
  const auto sends = chain::poisson_sends(500, 40 * kMillisecond);
  const auto arrivals = chain::relay_chain(sends, 4, JitterModel::none());
  REQUIRE(arrivals.size() == sends.size());
  CHECK(chain::gaps(arrivals) == chain::gaps(sends));
}

TEST_CASE("default jitter keeps gaps strongly correlated") {
  const auto sends = chain::poisson_sends(500, 40 * kMillisecond);
  const auto arrivals = chain::relay_chain(sends, 4, JitterModel::uniform(2 * kMillisecond));
  REQUIRE(arrivals.size() == sends.size());
  CHECK(chain::correlation(chain::gaps(sends), chain::gaps(arrivals)) >= 0.9);
}
