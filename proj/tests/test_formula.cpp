#include "doctest.h"
#include "mut/formula.hpp"

#include <functional>
#include <random>

using namespace mut;

namespace {

SchemaPtr binary_schema(int n) {
  std::vector<VarDecl> vars;
  for (int i = 0; i < n; ++i) vars.push_back({"b" + std::to_string(i), {0, 1}});
  return std::make_shared<const Schema>(std::move(vars));
}

// Random formula paired with a closure that evaluates it directly on the raw values.
struct Gen {
  PropFormula f;
  std::function<bool(const std::vector<int>&)> oracle;
};

Gen random_formula(std::mt19937& rng, int depth, int nvars) {
  std::uniform_int_distribution<int> pick(0, depth <= 0 ? 1 : 5);
  int k = pick(rng);
  if (k == 0) {
    int i = std::uniform_int_distribution<int>(0, nvars - 1)(rng);
    int c = std::uniform_int_distribution<int>(0, 1)(rng);
    auto op = static_cast<CmpOp>(std::uniform_int_distribution<int>(0, 5)(rng));
    auto name = "b" + std::to_string(i);
    auto f = cmp(V(name), op, C(c));
    return {f, [i, c, op](const std::vector<int>& v) {
              int l = v[i];
              switch (op) {
                case CmpOp::eq: return l == c;
                case CmpOp::ne: return l != c;
                case CmpOp::lt: return l < c;
                case CmpOp::le: return l <= c;
                case CmpOp::gt: return l > c;
                case CmpOp::ge: return l >= c;
              }
              return false;
            }};
  }
  if (k == 1) {
    int i = std::uniform_int_distribution<int>(0, nvars - 1)(rng);
    int j = std::uniform_int_distribution<int>(0, nvars - 1)(rng);
    int off = std::uniform_int_distribution<int>(-1, 1)(rng);
    auto f = V("b" + std::to_string(i)) < V("b" + std::to_string(j)) + off;
    return {f, [i, j, off](const std::vector<int>& v) { return v[i] < v[j] + off; }};
  }
  if (k == 2) {
    auto a = random_formula(rng, depth - 1, nvars);
    return {!a.f, [o = a.oracle](const std::vector<int>& v) { return !o(v); }};
  }
  if (k == 3) {
    bool b = std::uniform_int_distribution<int>(0, 1)(rng);
    return {PropFormula::truth(b), [b](const std::vector<int>&) { return b; }};
  }
  auto a = random_formula(rng, depth - 1, nvars);
  auto b = random_formula(rng, depth - 1, nvars);
  if (k == 4)
    return {a.f && b.f, [x = a.oracle, y = b.oracle](const std::vector<int>& v) { return x(v) && y(v); }};
  return {a.f || b.f, [x = a.oracle, y = b.oracle](const std::vector<int>& v) { return x(v) || y(v); }};
}

}  // namespace

TEST_CASE("atoms evaluate on a lane-change valuation") {
  auto schema = std::make_shared<const Schema>(std::vector<VarDecl>{
      {"x", {1, 5}}, {"y", {1, 2}}, {"x1", {1, 5}}, {"y1", {1, 2}}});
  StateValuation s(schema, {3, 2, 3, 2});
  CHECK(eval(V("y") == 2, s));
  auto no_collision = !(V("y") == V("y1") && V("x") == V("x1"));
  CHECK_FALSE(eval(no_collision, s));
  CHECK(eval(no_collision, StateValuation(schema, {2, 2, 3, 2})));
}

TEST_CASE("missing variables and unbound primes raise") {
  auto schema = std::make_shared<const Schema>(std::vector<VarDecl>{{"x", {0, 3}}});
  StateValuation s(schema, {1});
  CHECK_THROWS_AS(eval(V("z") == 1, s), EvalError);
  CHECK_THROWS_AS(eval(Next("x") == 1, s), EvalError);
  CHECK(eval(Next("x") == V("x") + 1, s, StateValuation(schema, {2})));
}

TEST_CASE("random formulas agree with the truth table") {
  std::mt19937 rng(7);
  for (int nvars = 1; nvars <= 3; ++nvars) {
    auto schema = binary_schema(nvars);
    for (int trial = 0; trial < 300; ++trial) {
      Gen g = random_formula(rng, 4, nvars);
      for (int m = 0; m < (1 << nvars); ++m) {
        std::vector<int> vals;
        for (int i = 0; i < nvars; ++i) vals.push_back((m >> i) & 1);
        REQUIRE(eval(g.f, StateValuation(schema, vals)) == g.oracle(vals));
      }
    }
  }
}

TEST_CASE("printing then parsing is the identity") {
  std::mt19937 rng(11);
  for (int trial = 0; trial < 500; ++trial) {
    PropFormula f = random_formula(rng, 4, 3).f;
    std::string text = to_string(f);
    PropFormula back = parse_formula(text);
    INFO(text);
    CHECK(back == f);
    CHECK(to_string(back) == text);
  }
  CHECK(to_string(parse_formula("x' = x - 1 && !(y == -2) || z >= 0")) == "x' = x - 1 & !(y = -2) | z >= 0");
}

TEST_CASE("parse errors carry the line number") {
  try {
    parse_formula("x = ", 42);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 42);
  }
  CHECK_THROWS_AS(parse_formula("3 = 4"), ParseError);
  CHECK_THROWS_AS(parse_formula("(x = 1"), ParseError);
  CHECK_THROWS_AS(parse_formula("x = 1 y"), ParseError);
}

TEST_CASE("variables reports primed references") {
  auto f = Next("x") == V("y") + 1 && V("z") < 3;
  CHECK(f.variables() == std::set<std::string>{"x'", "y", "z"});
  CHECK(f.mentions_primed());
  CHECK_FALSE((V("z") < 3).mentions_primed());
}
