#include "doctest.h"
#include "mut/scenarios.hpp"

using namespace mut;

namespace {

StateValuation lc_state(const ScenarioSim& s, int x, int y, int x1, int x2) {
  return StateValuation(s.game->schema(), {x, y, x1, 2, x2, 2});
}

const ScenarioSim& lane5() {
  static const ScenarioSim s = build_lane_change({});
  return s;
}

const ScenarioSim& left_turn() {
  static const ScenarioSim s = build_left_turn({});
  return s;
}

}  // namespace

TEST_CASE("config parsing reports line numbers") {
  KeyValues kv = KeyValues::parse("# header\nversion = 1\n\nscenario = lane_change  # trailing\nlength = 7\n");
  CHECK(kv.integer("version", 0) == 1);
  CHECK(kv.str("scenario", "") == "lane_change");
  CHECK(kv.unused() == std::vector<std::string>{"length"});
  try {
    KeyValues::parse("version = 1\nscenario\n");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
  CHECK_THROWS_AS(KeyValues::parse("a = 1\na = 2\n"), ParseError);
  KeyValues bad = KeyValues::parse("length = five\n");
  CHECK_THROWS_AS(bad.integer("length", 0), ConfigError);
}

TEST_CASE("default configs survive a text round trip") {
  KeyValues a = KeyValues::parse(to_config_text(LaneChangeConfig{}));
  CHECK(a.str("scenario", "") == "lane_change");
  CHECK(to_config_text(lane_change_config(a)) == to_config_text(LaneChangeConfig{}));
  KeyValues b = KeyValues::parse(to_config_text(LeftTurnConfig{}));
  CHECK(to_config_text(left_turn_config(b)) == to_config_text(LeftTurnConfig{}));
  KeyValues c = KeyValues::parse("version = 1\nscenario = lane_change\nlength = 6\n");
  CHECK(build_scenario(c).game->num_vertices() > lane5().game->num_vertices());
  KeyValues d = KeyValues::parse("version = 2\nscenario = lane_change\n");
  CHECK_THROWS_AS(build_scenario(d), ConfigError);
  KeyValues e = KeyValues::parse("version = 1\nscenario = roundabout\n");
  CHECK_THROWS_AS(build_scenario(e), ConfigError);
}

TEST_CASE("invalid layouts are rejected") {
  LaneChangeConfig lc;
  lc.tester1_x = 4;
  lc.tester2_x = 2;
  CHECK_THROWS_AS(build_lane_change(lc), ConfigError);
  lc = {};
  lc.length = 3;
  CHECK_THROWS_AS(build_lane_change(lc), ConfigError);
  LeftTurnConfig lt;
  lt.wait = lt.goal;
  CHECK_THROWS_AS(build_left_turn(lt), ConfigError);
  lt = {};
  lt.car_trigger = {{2, 4}};
  CHECK_THROWS_AS(build_left_turn(lt), ConfigError);
  lt = {};
  lt.red = 0;
  CHECK_THROWS_AS(build_left_turn(lt), ConfigError);
}

TEST_CASE("lane change moves respect alternation and the track") {
  const ScenarioSim& s = lane5();
  const GameGraph& g = *s.game;
  CHECK(g.num_vertices() == 2 * 10 * 10);  // 10 system cells, 10 ordered tester pairs
  const Digraph& d = g.graph();
  for (Vertex v = 0; v < g.num_vertices(); ++v)
    for (std::size_t e = d.out_begin(v); e < d.out_end(v); ++e) {
      auto a = g.values(v), b = g.values(d.edge_dst(e));
      if (g.turn(v) == Player::system) {
        CHECK(std::equal(a.begin() + 2, a.end(), b.begin() + 2));
        CHECK((b[0] == a[0] || b[0] == a[0] + 1));
        CHECK(b[1] >= a[1]);
      } else {
        CHECK(std::equal(a.begin(), a.begin() + 2, b.begin()));
        CHECK(b[2] < b[4]);
      }
    }
}

TEST_CASE("lane change goal sets match a direct count") {
  const ScenarioSim& s = lane5();
  const AuxGraph& aux = *s.aux;
  const int L = 5;
  // Count safe valuations satisfying each case of the merged goal by enumeration.
  int joint = 0, first = 0, second = 0;
  for (int x = 1; x <= L; ++x)
    for (int x1 = 1; x1 <= L; ++x1)
      for (int x2 = x1 + 1; x2 <= L; ++x2) {
        if (x == x1 || x == x2) continue;  // collision in lane 2
        bool p1 = x == x1 + 1, p2 = x == x2 - 1;
        joint += p1 && p2;
        first += p1;
        second += p2;
      }
  std::vector<int> got(3, 0);
  for (Vertex v : (aux.merged_goal() & s.aux_arena.safe).members()) ++got[aux.copy(v)];
  CHECK(got[0] == 2 * joint);
  CHECK(got[1] == 2 * first);
  CHECK(got[2] == 2 * second);
}

TEST_CASE("only the left turn needs a temporal constraint") {
  CHECK_FALSE(lane5().spec.temporal_refinement.has_value());
  CHECK(left_turn().spec.temporal_refinement.has_value());
  CHECK_FALSE(needs_temporal_constraint(lane5().unit1, lane5().unit2, *lane5().game));
  CHECK(needs_temporal_constraint(left_turn().unit1, left_turn().unit2, *left_turn().game));
}

TEST_CASE("initial lane change configuration lies in the filter") {
  for (int L : {5, 10, 15}) {
    LaneChangeConfig c;
    c.length = L;
    ScenarioSim s = build_lane_change(c);
    FilterW f = synthesize_filter(*s.aux, s.spec);
    CHECK_MESSAGE(f.contains(s.aux->lift(s.initial, 0)), "length " << L);
    CHECK(f.union_set == monolithic_winning_region(s.aux_arena, f.goals));
    if (L == 5) {
      for (std::size_t g = 0; g < f.goals.size(); ++g)
        for (int j = 1; j <= f.goals[g].jmax(); ++j) {
          bool reachable_layer = false;
          for (Vertex v : f.goals[g].order.layers[j]) reachable_layer |= f.contains(v);
          if (reachable_layer) CHECK(!f.win[g][j].empty());
        }
    }
  }
}

TEST_CASE("left turn initial state lies in the filter") {
  const ScenarioSim& s = left_turn();
  FilterW f = synthesize_filter(*s.aux, s.spec);
  CHECK(f.contains(s.aux->lift(s.initial, 0)));
  CHECK(f.goals.size() == 2);  // the refinement makes the two goals exclusive
}

TEST_CASE("system model samples admissible moves uniformly") {
  LaneChangeConfig c;
  c.length = 10;
  const ScenarioSim s = build_lane_change(c);
  std::vector<Vertex> starts{s.initial};
  // Add a few states with more options than the start.
  for (Vertex v = 0; v < s.game->num_vertices() && starts.size() < 4; ++v)
    if (s.game->turn(v) == Player::system && system_moves(s, v).size() >= 3) starts.push_back(v);
  REQUIRE(starts.size() == 4);
  // Upper 1% points of the chi-square distribution by degrees of freedom.
  const double crit[] = {0, 6.635, 9.210, 11.345, 13.277};
  std::mt19937_64 rng(5);
  for (Vertex v : starts) {
    auto moves = system_moves(s, v);
    REQUIRE(moves.size() >= 2);
    REQUIRE(moves.size() <= 5);
    std::map<std::size_t, int> hist;
    const int n = 10000;
    for (int i = 0; i < n; ++i) ++hist[*system_model_step(s, v, rng)];
    REQUIRE(hist.size() == moves.size());
    double chi2 = 0;
    const double e = static_cast<double>(n) / moves.size();
    for (std::size_t m : moves) chi2 += (hist[m] - e) * (hist[m] - e) / e;
    CHECK_MESSAGE(chi2 < crit[moves.size() - 1], "state " << v);
  }
  // Changing lane at once would hit tester 1, leaving stay and straight.
  CHECK(system_moves(s, s.initial).size() == 2);
}

TEST_CASE("lane change monitor verdicts") {
  const ScenarioSim& s = lane5();
  Trace good{lc_state(s, 1, 1, 2, 4), lc_state(s, 2, 1, 2, 4), lc_state(s, 2, 1, 2, 4), lc_state(s, 3, 2, 2, 4)};
  Verdicts v = monitor(s, good);
  CHECK(v.spec.assumption);
  CHECK(v.spec.merged);
  CHECK(v.coverage);
  Trace lazy{lc_state(s, 1, 1, 2, 4), lc_state(s, 2, 1, 2, 4), lc_state(s, 2, 1, 3, 4)};
  v = monitor(s, lazy);
  CHECK_FALSE(v.spec.assumption);
  CHECK_FALSE(v.coverage);
  Trace crash{lc_state(s, 1, 1, 2, 4), lc_state(s, 2, 2, 2, 4)};
  CHECK_FALSE(monitor(s, crash).spec.assumption);
}

TEST_CASE("left turn monitor demands the car and the pedestrian separately") {
  const ScenarioSim& s = left_turn();
  auto st = [&](int sy, int sz, int cy, int ped, int light) {
    return StateValuation(s.game->schema(), {sy, sz, cy, ped, light});
  };
  // Drive to the wait cell, let the car pass, then the pedestrian, then turn.
  Trace t{st(7, 4, 0, 0, 0), st(6, 4, 0, 0, 0), st(6, 4, 0, 0, 1), st(5, 4, 0, 0, 1),
          st(5, 4, 0, 0, 2), st(4, 4, 0, 0, 2), st(4, 4, 0, 0, 3), st(4, 4, 0, 0, 3)};
  int cy = 0, light = 3;
  for (int k = 0; k < 4; ++k) {
    ++cy;
    ++light;
    t.push_back(st(4, 4, cy, 0, light));
    t.push_back(st(4, 4, cy, 0, light));
  }
  for (int p = 1; p <= 6; ++p) {
    t.push_back(st(4, 4, cy, p, light));  // light held: the monitor allows an unchanged light
    t.push_back(st(4, 4, cy, p, light));
  }
  const Cell route[]{{3, 3}, {2, 3}, {1, 3}, {0, 3}};
  for (Cell c : route) {
    t.push_back(st(c.y, c.z, cy, 6, light));
    ++light;
    t.push_back(st(c.y, c.z, cy, 6, light));
  }
  Verdicts v = monitor(s, t);
  CHECK(v.spec.assumption);
  CHECK(v.spec.unit1);
  CHECK(v.spec.unit2);
  CHECK(v.spec.refined);
  CHECK(v.coverage);
  CHECK(s.complete(t.back().values()));
  CHECK(s.render(t.back().values()).find('S') != std::string::npos);
  CHECK(*s.light(t.back().values()) == light);
}
