#include "doctest.h"
#include "mut/game_graph.hpp"

#include <random>

using namespace mut;

namespace {

SchemaPtr one_var(const std::string& name, int lo, int hi) {
  return std::make_shared<const Schema>(std::vector<VarDecl>{{name, {lo, hi}}});
}

// Random transition system over a single variable with n values.
TransitionSystem random_ts(const std::string& name, int n, std::mt19937& rng, double p) {
  std::bernoulli_distribution coin(p);
  std::vector<std::vector<int>> adj(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (coin(rng)) adj[i].push_back(j);
  return TransitionSystem::from_function(one_var(name, 0, n - 1), PropFormula(), [adj](const std::vector<int>& v) {
    std::vector<std::vector<int>> out;
    for (int j : adj[v[0]]) out.push_back({j});
    return out;
  });
}

// Chain 0 -> 1 -> 2 with self loops, as a formula-built system.
TransitionSystem chain_ts(const std::string& name, int n) {
  return TransitionSystem::from_formulas(one_var(name, 0, n - 1), PropFormula(),
                                         Next(name) == V(name) || Next(name) == V(name) + 1);
}

std::shared_ptr<const GameGraph> game(const TransitionSystem& sys, const TransitionSystem& test) {
  auto prod = std::make_shared<const ProductTS>(product(sys, test));
  return std::make_shared<const GameGraph>(build_game_graph(prod));
}

}  // namespace

TEST_CASE("interleaved product counts") {
  std::mt19937 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    auto a = random_ts("s", 3, rng, 0.4);
    auto b = random_ts("t", 3, rng, 0.4);
    ProductTS p = product(a, b);
    CHECK(p.joint.size() == 9);
    // Enumerate pairs directly: (s,t) -> (s',t) or (s,t').
    std::size_t expected = 0;
    for (std::size_t s = 0; s < 3; ++s)
      for (std::size_t t = 0; t < 3; ++t) {
        std::set<std::pair<std::size_t, std::size_t>> targets;
        for (auto s2 : a.succ[s]) targets.insert({s2, t});
        for (auto t2 : b.succ[t]) targets.insert({s, t2});
        expected += targets.size();
      }
    CHECK(p.joint.num_transitions() == expected);
    auto g = game(a, b);
    CHECK(g->graph().num_edges() == a.num_transitions() * 3 + b.num_transitions() * 3);
  }
  auto two = chain_ts("s", 2);
  CHECK(product(two, chain_ts("t", 2)).joint.size() == 4);
}

TEST_CASE("formula-built and function-built systems agree") {
  auto f = chain_ts("s", 4);
  auto g = TransitionSystem::from_function(one_var("s", 0, 3), PropFormula(), [](const std::vector<int>& v) {
    return std::vector<std::vector<int>>{{v[0]}, {v[0] + 1}};
  });
  CHECK(f.states == g.states);
  CHECK(f.succ == g.succ);
}

TEST_CASE("synchronous product and restriction") {
  auto a = chain_ts("x1", 3);
  auto b = chain_ts("x2", 3);
  auto s = synchronous_product(a, b);
  CHECK(s.size() == 9);
  CHECK(s.num_transitions() == a.num_transitions() * b.num_transitions());
  auto r = restrict(s, V("x1") < V("x2"));
  CHECK(r.size() == 3);
  for (std::size_t i = 0; i < r.size(); ++i) {
    CHECK(r.states[i][0] < r.states[i][1]);
    for (auto j : r.succ[i]) CHECK(r.states[j][0] < r.states[j][1]);
  }
  r.check();
}

TEST_CASE("game graph alternates turns and keeps the partner fixed") {
  auto g = game(chain_ts("s", 2), chain_ts("t", 2));
  CHECK(g->num_vertices() == 8);
  const Digraph& d = g->graph();
  for (Vertex v = 0; v < g->num_vertices(); ++v) {
    CHECK(d.out_degree(v) >= 1);
    for (std::size_t e = d.out_begin(v); e < d.out_end(v); ++e) {
      Vertex w = d.edge_dst(e);
      CHECK(g->turn(w) != g->turn(v));
      if (g->turn(v) == Player::system) CHECK(g->test_state(w) == g->test_state(v));
      else CHECK(g->sys_state(w) == g->sys_state(v));
    }
  }
  CHECK(g->valuation(g->vertex(Player::tester, 1, 0)).to_string() == "s=1 t=0");
}

TEST_CASE("partial order on a chain") {
  std::vector<Player> owner(4, Player::tester);
  Digraph d(owner, {{3, 2}, {2, 1}, {1, 0}});
  VertexSet goal(4);
  goal.insert(0);
  PartialOrder po = partial_order(d, goal);
  for (int k = 0; k < 4; ++k) CHECK(po.dist[k] == k);
  CHECK(po.depth() == 3);
  CHECK_THROWS_AS(partial_order(d, VertexSet(4)), GraphError);

  VertexSet blocked(4);
  blocked.insert(2);
  PartialOrder cut = partial_order(d, goal, nullptr, &blocked);
  CHECK(cut.dist[1] == 1);
  CHECK(cut.dist[2] == kInfDist);
  CHECK(cut.dist[3] == kInfDist);
}

TEST_CASE("partial order matches boolean matrix powers") {
  std::mt19937 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 9;
    std::bernoulli_distribution coin(0.2);
    std::vector<std::pair<Vertex, Vertex>> edges;
    std::vector<std::vector<int>> adj(n, std::vector<int>(n, 0));
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (coin(rng)) {
          edges.emplace_back(i, j);
          adj[i][j] = 1;
        }
    Digraph d(std::vector<Player>(n, Player::tester), edges);
    VertexSet goal(n);
    goal.insert(0);
    goal.insert(static_cast<Vertex>(rng() % n));
    PartialOrder po = partial_order(d, goal);
    // reach[k][v]: some walk of length exactly k from v ends in goal.
    std::vector<int> expect(n, kInfDist);
    std::vector<int> cur(n);
    for (int v = 0; v < n; ++v) cur[v] = goal.contains(v);
    for (int k = 0; k <= n; ++k) {
      for (int v = 0; v < n; ++v)
        if (cur[v] && expect[v] == kInfDist) expect[v] = k;
      std::vector<int> nxt(n, 0);
      for (int v = 0; v < n; ++v)
        for (int w = 0; w < n; ++w) nxt[v] = nxt[v] || (adj[v][w] && cur[w]);
      cur = nxt;
    }
    CHECK(po.dist == expect);
  }
}

TEST_CASE("auxiliary graph rewiring") {
  auto g = game(chain_ts("s", 3), chain_ts("t", 2));
  PropFormula psi1 = V("s") == 2 && V("t") == 0;
  PropFormula psi2 = V("s") == 1;
  AuxGraph aux = build_aux_graph(g, psi1, psi2);
  const std::size_t nb = g->num_vertices();
  CHECK(aux.num_vertices() == 3 * nb);
  VertexSet p1 = g->satisfying(psi1), p2 = g->satisfying(psi2);

  // Every aux edge projects onto a base edge and switches copy exactly per the rule.
  const Digraph& d = aux.graph();
  const Digraph& bd = g->graph();
  std::size_t expected_edges = 0;
  for (Vertex v = 0; v < nb; ++v) {
    std::size_t deg = bd.out_degree(v);
    expected_edges += deg * ((p1.contains(v) && p2.contains(v)) ? 2 : 1);  // copy 0
    expected_edges += 2 * deg;                                             // copies 1 and 2
  }
  CHECK(d.num_edges() == expected_edges);
  for (std::size_t e = 0; e < d.num_edges(); ++e) {
    Vertex u = d.edge_src(e), w = d.edge_dst(e);
    std::size_t be = aux.base_edge(e);
    CHECK(bd.edge_src(be) == aux.base_vertex(u));
    CHECK(bd.edge_dst(be) == aux.base_vertex(w));
    CHECK(d.owner(u) == bd.owner(aux.base_vertex(u)));
    Vertex b = aux.base_vertex(u);
    int cu = aux.copy(u), cw = aux.copy(w);
    if (cu == 0) {
      bool ok = (cw == 1 && p2.contains(b)) || (cw == 2 && p1.contains(b)) ||
                (cw == 0 && !p1.contains(b) && !p2.contains(b));
      CHECK(ok);
    } else if (cu == 1) {
      CHECK(cw == (p1.contains(b) ? 0 : 1));
    } else {
      CHECK(cw == (p2.contains(b) ? 0 : 2));
    }
  }

  // merged goal agrees with the formula over aux_copy
  PropFormula mr = any_of({V(kAuxCopyVar) == 0 && psi1 && psi2, V(kAuxCopyVar) == 1 && psi1,
                           V(kAuxCopyVar) == 2 && psi2});
  CHECK(aux.merged_goal() == aux.satisfying(mr));
  CHECK_THROWS_AS(build_aux_graph(g, psi1, V("s") == 7), GraphError);
}

TEST_CASE("everything is a goal: every copy-0 edge leaves copy 0") {
  auto g = game(chain_ts("s", 2), chain_ts("t", 2));
  AuxGraph aux = build_aux_graph(g, PropFormula(), PropFormula());
  const Digraph& d = aux.graph();
  for (Vertex v = 0; v < aux.base_size(); ++v)
    for (std::size_t e = d.out_begin(v); e < d.out_end(v); ++e) CHECK(aux.copy(d.edge_dst(e)) != 0);
}

TEST_CASE("copy 1 is entered only through second-goal vertices") {
  // 6-vertex base graph: 3-state system, 1-state tester.
  auto sys = TransitionSystem::from_function(one_var("s", 0, 2), PropFormula(), [](const std::vector<int>& v) {
    return std::vector<std::vector<int>>{{v[0]}, {(v[0] + 1) % 3}};
  });
  auto test = TransitionSystem::from_function(one_var("t", 0, 0), PropFormula(),
                                              [](const std::vector<int>& v) { return std::vector<std::vector<int>>{v}; });
  auto g = game(sys, test);
  CHECK(g->num_vertices() == 6);
  AuxGraph aux = build_aux_graph(g, V("s") == 0, V("s") == 2);
  const Digraph& d = aux.graph();
  // Enumerate all simple paths from copy 0 and record the vertex preceding the first entry into copy 1.
  std::function<void(Vertex, std::vector<uint8_t>&)> walk = [&](Vertex v, std::vector<uint8_t>& on) {
    for (std::size_t e = d.out_begin(v); e < d.out_end(v); ++e) {
      Vertex w = d.edge_dst(e);
      if (aux.copy(w) == 1) {
        CHECK(aux.psi2().contains(v));
        continue;
      }
      if (aux.copy(w) != 0 || on[w]) continue;
      on[w] = 1;
      walk(w, on);
      on[w] = 0;
    }
  };
  for (Vertex v = 0; v < 6; ++v) {
    std::vector<uint8_t> on(aux.num_vertices(), 0);
    on[v] = 1;
    walk(v, on);
  }
}

TEST_CASE("assumption 1 fails for disconnected goals") {
  // Two disconnected self-loop components of the system: s in {0} and {1}.
  auto sys = TransitionSystem::from_function(one_var("s", 0, 1), PropFormula(),
                                             [](const std::vector<int>& v) { return std::vector<std::vector<int>>{v}; });
  auto g = game(sys, chain_ts("t", 2));
  AuxGraph aux = build_aux_graph(g, V("s") == 0, V("s") == 1);
  CHECK_FALSE(check_assumption1(aux, partial_order(*g, V("s") == 0), partial_order(*g, V("s") == 1)));

  auto g2 = game(chain_ts("s", 3), chain_ts("t", 2));
  AuxGraph aux2 = build_aux_graph(g2, V("s") == 0, V("s") == 2);
  CHECK(check_assumption1(aux2, partial_order(*g2, V("s") == 0), partial_order(*g2, V("s") == 2)));
}

TEST_CASE("disjoint goals on a chain need no temporal constraint") {
  auto g = game(chain_ts("s", 3), TransitionSystem::from_function(one_var("t", 0, 0), PropFormula(), [](const std::vector<int>& v) {
                  return std::vector<std::vector<int>>{v};
                }));
  auto sc = std::make_shared<const Schema>(std::vector<VarDecl>{{"s", {0, 2}}, {"t", {0, 0}}});
  GR1Spec a{V("s") == 0, {}, {}};
  TestContract c1 = saturate({sc, a, GR1Spec{PropFormula(), {}, {V("s") == 1}}, false});
  TestContract c2 = saturate({sc, a, GR1Spec{PropFormula(), {}, {V("s") == 2}}, false});
  CHECK_FALSE(needs_temporal_constraint(c1, c2, *g));
  TestContract c3 = saturate({sc, a, GR1Spec{PropFormula(), {}, {V("s") == 1 && V("t") == 0}}, false});
  CHECK(needs_temporal_constraint(c1, c3, *g));
}

TEST_CASE("graph dumps") {
  auto g = game(chain_ts("s", 2), chain_ts("t", 1));
  CHECK(dump_graph(*g) == "0 0 0 -> 2,3\n1 0 0 -> 3\n2 1 0 -> 0\n3 1 0 -> 1\n");
  CHECK(dump_bindings(*g).substr(0, 8) == "0 s=0 t=");
}
