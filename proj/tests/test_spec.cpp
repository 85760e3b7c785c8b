#include "doctest.h"
#include "mut/spec.hpp"

#include <functional>

using namespace mut;

namespace {

SchemaPtr schema_of(std::vector<VarDecl> v) { return std::make_shared<const Schema>(std::move(v)); }

// All traces of the given length over states enumerated by `states`.
void for_each_trace(const std::vector<StateValuation>& states, int len,
                    const std::function<void(const Trace&)>& fn) {
  Trace t;
  std::function<void()> rec = [&] {
    if (static_cast<int>(t.size()) == len) {
      fn(t);
      return;
    }
    for (const auto& s : states) {
      t.push_back(s);
      rec();
      t.pop_back();
    }
  };
  rec();
}

std::vector<StateValuation> all_states(const SchemaPtr& sc) {
  std::vector<StateValuation> out;
  std::vector<int> vals(sc->size());
  std::function<void(std::size_t)> rec = [&](std::size_t i) {
    if (i == sc->size()) {
      out.emplace_back(sc, vals);
      return;
    }
    for (int v = (*sc)[i].domain.lo; v <= (*sc)[i].domain.hi; ++v) {
      vals[i] = v;
      rec(i + 1);
    }
  };
  rec(0);
  return out;
}

}  // namespace

TEST_CASE("spec text format round-trips") {
  const char* text =
      "# comment\n"
      "INIT x = 0\n"
      "INIT y = 1   # trailing\n"
      "SAFE x' <= x + 1\n"
      "SAFE !(x = y)\n"
      "GOAL x = 3 | y = 0\n";
  GR1Spec s = parse_gr1(text);
  CHECK(s.safety.size() == 2);
  CHECK(s.recurrence.size() == 1);
  std::string printed = print_gr1(s);
  CHECK(printed == "INIT x = 0 & y = 1\nSAFE x' <= x + 1\nSAFE !(x = y)\nGOAL x = 3 | y = 0\n");
  CHECK(parse_gr1(printed) == s);
  CHECK(print_gr1(parse_gr1(printed)) == printed);
  CHECK_THROWS_AS(parse_gr1("INIT x' = 1"), ParseError);
  CHECK_THROWS_AS(parse_gr1("WHEN x = 1"), ParseError);
  try {
    parse_gr1("SAFE x = 1\n\nGOAL x =");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
  }
}

TEST_CASE("saturation is idempotent and reads as a -> g") {
  auto sc = schema_of({{"p", {0, 1}}, {"q", {0, 1}}});
  TestContract c{sc, GR1Spec{V("p") == 1, {}, {}}, GR1Spec{PropFormula(), {V("q") == 0}, {V("p") == 0}}, false};
  TestContract s = saturate(c);
  CHECK(s.saturated);
  TestContract ss = saturate(s);
  CHECK(ss.saturated);
  CHECK(ss.assumption == s.assumption);
  CHECK(ss.guarantee == s.guarantee);

  // Independent reading over 2-step traces.
  auto states = all_states(sc);
  int checked = 0;
  for_each_trace(states, 2, [&](const Trace& t) {
    bool a = t[0].at("p") == 1;
    bool g = t[0].at("q") == 0 && t[1].at("q") == 0 && (t[0].at("p") == 0 || t[1].at("p") == 0);
    CHECK(monitor(s, t) == (!a || g));
    CHECK(monitor(c, t) == g);
    ++checked;
  });
  CHECK(checked == 16);
}

TEST_CASE("strong merge preconditions") {
  auto sc1 = schema_of({{"x", {0, 3}}});
  auto sc2 = schema_of({{"x", {0, 4}}});
  GR1Spec g{PropFormula(), {}, {V("x") == 1}};
  TestContract c1 = saturate({sc1, {}, g, false});
  TestContract c2 = saturate({sc2, {}, g, false});
  CHECK_THROWS_AS(strong_merge(c1, c2), SpecError);
  CHECK_THROWS_AS(strong_merge(c1, TestContract{sc1, {}, g, false}), SpecError);
  TestContract two_goals = saturate({sc1, {}, GR1Spec{PropFormula(), {}, {V("x") == 1, V("x") == 2}}, false});
  CHECK_THROWS_AS(strong_merge(c1, two_goals), SpecError);
  MergedSpec m = strong_merge(c1, c1);
  CHECK_THROWS_AS(refine_temporal(m, V("x") == 1, V("x") == 1), SpecError);
}

namespace {

// Toy world: system position s in 0..3 moving along a ring, tester flag t in 0..1.
struct Toy {
  SchemaPtr sc = schema_of({{"s", {0, 3}}, {"t", {0, 1}}});
  GR1Spec a1{V("s") == 0, {Next("s") == V("s") || Next("s") == V("s") + 1 || Next("s") == V("s") - 3}, {V("s") == 2}};
  GR1Spec a2{V("s") == 0, {!(V("s") == 3 && V("t") == 1)}, {}};
  GR1Spec g1{V("t") == 0, {}, {V("s") == 1 && V("t") == 1}};
  GR1Spec g2{V("t") == 0, {Next("t") >= V("t")}, {V("s") == 2 && V("t") == 1}};
  TestContract c1 = saturate({sc, a1, g1, false});
  TestContract c2 = saturate({sc, a2, g2, false});
};

}  // namespace

TEST_CASE("merged monitor implies both unit monitors under the merged assumption") {
  Toy toy;
  MergedSpec m = strong_merge(toy.c1, toy.c2);
  MergedSpec r = strong_merge(toy.c2, toy.c1);
  auto states = all_states(toy.sc);
  long with_assumption = 0, accepted = 0;
  for (int len = 1; len <= 4; ++len) {
    for_each_trace(states, len, [&](const Trace& t) {
      MergedVerdicts v = monitor(m, t);
      MergedVerdicts w = monitor(r, t);
      CHECK(v.merged == w.merged);
      CHECK(v.assumption == (monitor(toy.a1, t) && monitor(toy.a2, t)));
      if (v.assumption) {
        ++with_assumption;
        CHECK(v.merged == (v.unit1 && v.unit2));
        if (v.merged) ++accepted;
      }
    });
  }
  CHECK(with_assumption > 0);
  CHECK(accepted > 0);
}

TEST_CASE("self merge collapses to the unit contract") {
  Toy toy;
  MergedSpec m = strong_merge(toy.c1, toy.c1);
  auto states = all_states(toy.sc);
  for_each_trace(states, 3, [&](const Trace& t) { CHECK(monitor(m, t).merged == monitor(toy.c1, t)); });
}

TEST_CASE("temporal refinement demands separate witnesses") {
  // Three cells, system position s; testers hold flags c (car) and w (walker).
  auto sc = schema_of({{"s", {0, 2}}, {"c", {0, 1}}, {"w", {0, 1}}});
  GR1Spec a{V("s") == 0, {}, {V("s") == 2}};
  PropFormula wait_car = V("s") == 1 && V("c") == 1;
  PropFormula wait_ped = V("s") == 1 && V("w") == 1;
  TestContract c1 = saturate({sc, a, GR1Spec{PropFormula(), {}, {wait_car}}, false});
  TestContract c2 = saturate({sc, a, GR1Spec{PropFormula(), {}, {wait_ped}}, false});
  MergedSpec m = refine_temporal(strong_merge(c1, c2), wait_car, wait_ped);
  REQUIRE(m.temporal_refinement);

  auto states = all_states(sc);
  long accepted = 0;
  for_each_trace(states, 6, [&](const Trace& t) {
    bool am = t[0].at("s") == 0;
    bool reach2 = false, car = false, ped = false, only_car = false, only_ped = false;
    for (const auto& st : t) {
      int s = st.at("s"), c = st.at("c"), w = st.at("w");
      reach2 = reach2 || s == 2;
      car = car || (s == 1 && c == 1);
      ped = ped || (s == 1 && w == 1);
      only_car = only_car || (s == 1 && c == 1 && w == 0);
      only_ped = only_ped || (s == 1 && w == 1 && c == 0);
    }
    am = am && reach2;
    bool eq8 = !am || (only_car && only_ped && car && ped);
    MergedVerdicts v = monitor(m, t);
    REQUIRE(v.refined == eq8);
    if (v.refined) CHECK(v.merged);
    if (am && v.refined) ++accepted;
  });
  CHECK(accepted > 0);

  // Waiting for both at once at every waiting step is never enough.
  Trace both;
  for (int s : {0, 1, 1, 2}) both.emplace_back(sc, std::vector<int>{s, 1, 1});
  MergedVerdicts v = monitor(m, both);
  CHECK(v.merged);
  CHECK_FALSE(v.refined);
}

TEST_CASE("aux goals become exclusive under refinement") {
  auto sc = schema_of({{"s", {0, 2}}, {"c", {0, 1}}, {"w", {0, 1}}});
  PropFormula p1 = V("c") == 1, p2 = V("w") == 1;
  TestContract c1 = saturate({sc, {}, GR1Spec{PropFormula(), {}, {p1}}, false});
  TestContract c2 = saturate({sc, {}, GR1Spec{PropFormula(), {}, {p2}}, false});
  MergedSpec plain = strong_merge(c1, c2);
  CHECK(plain.aux_psi1() == p1);
  MergedSpec r = refine_temporal(plain, p1, p2);
  auto xsc = schema_of({{"c", {0, 1}}, {"w", {0, 1}}, {kAuxCopyVar, {0, 2}}});
  for (int c = 0; c <= 1; ++c)
    for (int w = 0; w <= 1; ++w)
      for (int k = 0; k <= 2; ++k) {
        StateValuation s(xsc, {c, w, k});
        bool expect_plain = (k == 0 && c && w) || (k == 1 && c) || (k == 2 && w);
        bool expect_refined = (k == 1 && c && !w) || (k == 2 && w && !c);
        CHECK(eval(plain.merged_recurrence, s) == expect_plain);
        CHECK(eval(r.merged_recurrence, s) == expect_refined);
      }
}
