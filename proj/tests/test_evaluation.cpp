#include "doctest.h"

#include "votetrace/evaluation.hpp"
#include "votetrace/pipeline.hpp"
#include "votetrace/simulation.hpp"

#include <algorithm>
#include <sstream>

using namespace votetrace;

namespace {

Address client(std::uint8_t i) { return Address::from_octets(10, 10, 0, i); }
Address box(std::uint8_t i) { return Address::from_octets(10, 50, 0, i); }

MatchResult result(Address c, Address b, SimTime t) {
  MatchResult m;
  m.client = c;
  m.box = b;
  m.vote_time = t;
  return m;
}

GroundTruth five_voters() {
  GroundTruth g;
  for (std::uint8_t i = 1; i <= 8; ++i) g.visible_clients.insert(client(i));
  g.entries = {{client(1), 10 * kSecond, box(1)}, {client(2), 20 * kSecond, box(2)},
               {client(3), 30 * kSecond, box(1)}, {client(4), 40 * kSecond, box(2)},
               {client(5), 50 * kSecond, box(1)}, {client(9), 60 * kSecond, box(1)}};
  return g;
}

SweepRow row(std::string scenario, std::uint32_t x, Duration d, std::size_t hits, std::size_t fp,
             std::size_t voters = 10) {
  SweepRow r;
  r.scenario = std::move(scenario);
  r.x = x;
  r.d = d;
  r.t = kSecond;
  r.metrics.hits = hits;
  r.metrics.false_positives = fp;
  r.metrics.outputs = hits + fp;
  r.metrics.visible_voters = voters;
  return r;
}

}  // namespace

TEST_CASE("ground truth counts only visible clients") {
  const GroundTruth g = five_voters();
  CHECK(g.visible_entries().size() == 5);
  CHECK(g.visible_voters() == 5);
  CHECK(g.visible_non_voters() == 3);
}

TEST_CASE("perfect output scores a full hit rate and no false positives") {
  const GroundTruth g = five_voters();
  std::vector<MatchResult> out;
  for (const VoteRecord& v : g.visible_entries()) out.push_back(result(v.client, v.box, v.time + 300 * kMillisecond));
  const Metrics m = score(out, g, kSecond);
  CHECK(m.hits == 5);
  CHECK(m.false_positives == 0);
  CHECK(m.hit_rate() == 1.0);
  CHECK(m.precision() == 1.0);
}

TEST_CASE("hand-scored mixed output") {
  const GroundTruth g = five_voters();
  const std::vector<MatchResult> out = {
      result(client(1), box(1), 10 * kSecond),                    // hit
      result(client(1), box(1), 10 * kSecond + 1),                // same entry again
      result(client(2), box(1), 20 * kSecond),                    // wrong box
      result(client(3), box(1), 30 * kSecond + 4 * kSecond),      // exactly at tolerance
      result(client(4), box(2), 40 * kSecond - 4 * kSecond - 1),  // just outside
      result(client(6), box(1), 10 * kSecond),                    // non-voter
      result(client(9), box(1), 60 * kSecond),                    // invisible voter
  };
  CHECK(classify(out, g, 4 * kSecond) == std::vector<bool>{true, false, false, true, false, false, false});
  const Metrics m = score(out, g, 4 * kSecond);
  CHECK(m.outputs == 7);
  CHECK(m.hits == 2);
  CHECK(m.false_positives == 5);
  CHECK(m.visible_voters == 5);
  CHECK(m.hit_rate() == doctest::Approx(0.4));
  CHECK(m.precision() == doctest::Approx(2.0 / 7.0));
}

TEST_CASE("scoring does not depend on output order") {
  const GroundTruth g = five_voters();
  std::vector<MatchResult> out = {result(client(1), box(1), 10 * kSecond + 5), result(client(1), box(1), 10 * kSecond),
                                  result(client(2), box(2), 21 * kSecond), result(client(5), box(1), 49 * kSecond),
                                  result(client(7), box(2), 1)};
  const Metrics base = score(out, g, 2 * kSecond);
  std::sort(out.begin(), out.end(), [](const MatchResult& a, const MatchResult& b) { return a.vote_time > b.vote_time; });
  do {
    const Metrics m = score(out, g, 2 * kSecond);
    REQUIRE(m.hits == base.hits);
    REQUIRE(m.false_positives == base.false_positives);
    REQUIRE(m.hits + m.false_positives == out.size());
  } while (std::next_permutation(out.begin(), out.end(), [](const MatchResult& a, const MatchResult& b) {
    return std::tie(a.client, a.vote_time) < std::tie(b.client, b.vote_time);
  }));
  CHECK(base.hits == 3);
}

TEST_CASE("empty inputs") {
  const Metrics none = score({}, GroundTruth{}, kSecond);
  CHECK(none.hit_rate() == 0.0);
  CHECK(none.precision() == 1.0);
  CHECK(default_tolerance(Pattern{}, kSecond) == 0);
  Pattern five;
  five.steps.assign(5, Step{Role::Client, Direction::Out});
  CHECK(default_tolerance(five, 250 * kMillisecond) == kSecond);
}

TEST_CASE("a singleton sweep equals one analyze and score call") {
  ScenarioConfig c;
  c.name = "small";
  c.duration = 120 * kSecond;
  c.warmup = 30 * kSecond;
  c.vote_margin = 20 * kSecond;
  c.topology = {6, 1, 10, 8, 6, 2, 2, 0, 2};
  c.behavior.file_size_min_bytes = 50'000;
  c.behavior.file_size_max_bytes = 200'000;
  c.behavior.think_time_mean = 20 * kSecond;
  const SimulationResult sim = simulate(c);
  const AttackerView view = attacker_view(sim);
  const GroundTruth truth = ground_truth(sim);
  const Pattern p = learn_pattern(c.vote);

  SweepSpec spec;
  spec.scenario = "small";
  spec.x_values = {7};
  spec.d_values = {kSecond};
  const auto rows = sweep(spec, view, p, truth);
  REQUIRE(rows.size() == 1);
  const Metrics direct = score(analyze(view, p, {7, kSecond, spec.mode}, {kSecond}), truth, default_tolerance(p, kSecond));
  CHECK(rows[0].metrics.outputs == direct.outputs);
  CHECK(rows[0].metrics.hits == direct.hits);
  CHECK(rows[0].metrics.false_positives == direct.false_positives);
  CHECK(rows[0].metrics.visible_voters == truth.visible_voters());
  CHECK(direct.hits > 0);

  spec.x_values = {9, 3, 7};
  spec.d_values = {2 * kSecond, kSecond};
  spec.jobs = 2;
  const auto grid = sweep(spec, view, p, truth);
  REQUIRE(grid.size() == 6);
  CHECK(grid[0].x == 3);
  CHECK(grid[0].d == kSecond);
  CHECK(grid[1].d == 2 * kSecond);
  CHECK(grid[5].x == 9);
  CHECK(grid[2].metrics.hits == rows[0].metrics.hits);
  spec.jobs = 1;
  const auto serial = sweep(spec, view, p, truth);
  for (std::size_t i = 0; i < grid.size(); ++i) CHECK(serial[i].metrics.hits == grid[i].metrics.hits);

  SweepSpec bad = spec;
  bad.d_values = {};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = spec;
  bad.d_values = {0};
  CHECK_THROWS_AS(sweep(bad, view, p, truth), std::invalid_argument);
}

TEST_CASE("sweep CSV round-trips") {
  const std::vector<SweepRow> rows = {row("a", 3, kSecond, 4, 1), row("b,c", 7, 250 * kMillisecond, 0, 0, 0)};
  std::stringstream ss;
  write_sweep_csv(ss, rows);
  const std::string text = ss.str();
  CHECK(text.rfind("scenario,seed,x,t_ns,d_ns", 0) == 0);
  std::stringstream in(text);
  const auto back = read_sweep_csv(in);
  REQUIRE(back.size() == 2);
  CHECK(back[1].scenario == "b,c");
  CHECK(back[0].x == 3);
  CHECK(back[1].d == 250 * kMillisecond);
  CHECK(back[0].metrics.hits == 4);
  CHECK(back[0].metrics.false_positives == 1);
  CHECK(back[0].metrics.visible_voters == 10);
  std::istringstream bad("scenario,seed\nx,1,2\n");
  CHECK_THROWS_AS(read_sweep_csv(bad), ParseError);
}

TEST_CASE("best point respects the budget and breaks ties") {
  const std::vector<SweepRow> rows = {row("s", 9, kSecond, 8, 30), row("s", 7, 2 * kSecond, 6, 2),
                                      row("s", 7, kSecond, 6, 2),  row("s", 6, kSecond, 6, 3),
                                      row("s", 8, kSecond, 6, 1),  row("s", 5, kSecond, 2, 0)};
  CHECK(best_point(rows)->x == 9);
  const auto within = best_point(rows, 2);
  REQUIRE(within);
  CHECK(within->x == 8);
  CHECK(within->metrics.false_positives == 1);
  std::vector<SweepRow> tied = {rows[1], rows[2]};
  CHECK(best_point(tied, 2)->d == kSecond);
  CHECK(best_point(rows, 0)->x == 5);
  CHECK_FALSE(best_point({}, 5));
  CHECK_FALSE(best_point({row("s", 1, kSecond, 1, 4)}, 3));
}

TEST_CASE("scenario comparison checks the expected ordering") {
  std::vector<SweepRow> rows = {row("file-transfer", 7, kSecond, 5, 0), row("browser", 7, kSecond, 6, 0),
                                row("vote-only", 7, kSecond, 9, 0), row("vote-only", 8, kSecond, 10, 9)};
  Comparison c = compare_scenarios(rows, 1);
  REQUIRE(c.rows.size() == 3);
  CHECK(c.rows[0].scenario == "file-transfer");
  CHECK(c.rows[2].best->x == 7);
  REQUIRE(c.expected_ordering);
  CHECK(*c.expected_ordering);

  rows[1] = row("browser", 7, kSecond, 48, 0, 100);
  rows[0] = row("file-transfer", 7, kSecond, 5, 0);
  CHECK(*compare_scenarios(rows, 1).expected_ordering);
  rows[1] = row("browser", 7, kSecond, 47, 0, 100);
  CHECK_FALSE(*compare_scenarios(rows, 1).expected_ordering);
  CHECK_FALSE(compare_scenarios({rows[0], rows[1]}).expected_ordering);

  std::ostringstream a, b;
  write_comparison(a, compare_scenarios(rows, 1));
  write_comparison(b, compare_scenarios(rows, 1));
  CHECK(a.str() == b.str());
  CHECK(a.str().find("violated") != std::string::npos);
}
