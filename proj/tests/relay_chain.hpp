#pragma once

// Drives packets along a chain of links; shared by the engine tests and the
// acceptance run.

#include "votetrace/engine.hpp"
#include "votetrace/network.hpp"
#include "votetrace/rng.hpp"

#include <cmath>
#include <numeric>
#include <vector>

namespace chain {

using namespace votetrace;

/// Sends `sends` over a chain of `hops` links and returns arrival times at the
/// far end.
inline std::vector<SimTime> relay_chain(const std::vector<SimTime>& sends, std::size_t hops, JitterModel jitter) {
  Engine engine;
  Network net(engine, 11);
  std::vector<NodeId> nodes;
  for (std::size_t i = 0; i <= hops; ++i) nodes.push_back(net.add_node(Address{0x0a000001u + static_cast<std::uint32_t>(i)}));
  for (std::size_t i = 0; i < hops; ++i) {
    net.connect(nodes[i], nodes[i + 1], {(5 + 3 * i) * kMillisecond, jitter, std::nullopt, false});
  }
  std::vector<SimTime> out;
  for (SimTime s : sends) {
    engine.schedule_at(s, nodes[0], EventKind::Timer);
  }
  engine.run(1000 * kSecond, [&](const Event& ev) {
    if (ev.kind == EventKind::Timer) {
      net.send(nodes[0], nodes[1], {}, engine.now());
      return;
    }
    net.on_arrival(ev);
    const std::uint32_t at = ev.target.value;
    if (at == hops) {
      out.push_back(ev.fire_time);
    } else {
      net.send(nodes[at], nodes[at + 1], ev.packet, engine.now());
    }
  });
  return out;
}

inline std::vector<double> gaps(const std::vector<SimTime>& t) {
  std::vector<double> g;
  for (std::size_t i = 1; i < t.size(); ++i) g.push_back(static_cast<double>(t[i] - t[i - 1]));
  return g;
}

inline double correlation(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

inline std::vector<SimTime> poisson_sends(std::size_t n, Duration mean_gap) {
  Rng rng(3, 3);
  std::vector<SimTime> s;
  SimTime t = 0;
  for (std::size_t i = 0; i < n; ++i) {
    t += 1 + static_cast<Duration>(rng.exponential(static_cast<double>(mean_gap)));
    s.push_back(t);
  }
  return s;
}

}  // namespace chain

