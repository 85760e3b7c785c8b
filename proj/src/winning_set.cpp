#include "mut/winning_set.hpp"

#include <algorithm>


namespace mut {

namespace {

// System safety is split into a state part (checked on the successor) and a step part.
std::vector<std::uint8_t> admissible_edges(const Digraph& d, const std::vector<std::uint8_t>& sys_state_ok,
                                           const std::vector<std::uint8_t>& sys_step_ok,
                                           const std::vector<std::uint8_t>& test_step_ok) {
  std::vector<std::uint8_t> ok(d.num_edges());
  for (std::size_t e = 0; e < ok.size(); ++e) {
    if (d.owner(d.edge_src(e)) == Player::system)
      ok[e] = sys_step_ok[e] && sys_state_ok[d.edge_dst(e)];
    else
      ok[e] = test_step_ok[e];
  }
  return ok;
}

void split(const std::vector<PropFormula>& fs, std::vector<PropFormula>& state, std::vector<PropFormula>& step) {
  for (const auto& f : fs) (f.mentions_primed() ? step : state).push_back(f);
}

std::vector<PropFormula> tester_safety(const MergedSpec& m) {
  std::vector<PropFormula> out = m.unit1.guarantee.safety;
  for (const auto& f : m.unit2.guarantee.safety)
    if (std::none_of(out.begin(), out.end(), [&](const PropFormula& g) { return g == f; })) out.push_back(f);
  return out;
}

template <class G>
Arena arena_over(const G& g, const Digraph& d, const MergedSpec& m) {
  std::vector<PropFormula> ts_state, ts_step, ss_state, ss_step;
  split(tester_safety(m), ts_state, ts_step);
  split(m.assumption.safety, ss_state, ss_step);
  Arena a;
  a.graph = &d;
  a.safe = g.satisfying(all_of(ts_state));
  VertexSet sys_state = g.satisfying(all_of(ss_state));
  std::vector<std::uint8_t> sys_state_ok(d.num_vertices());
  for (Vertex v = 0; v < d.num_vertices(); ++v) sys_state_ok[v] = sys_state.contains(v);
  a.edge_ok = admissible_edges(d, sys_state_ok, g.edges_satisfying(all_of(ss_step)), g.edges_satisfying(all_of(ts_step)));
  a.progress = g.satisfying(all_of(m.assumption.recurrence));
  a.terminal = VertexSet(d.num_vertices());
  // A system honouring its own liveness never enters a state from which progress is unreachable.
  if (!a.progress.empty()) {
    PartialOrder live = partial_order(d, a.progress, &a.edge_ok);
    for (Vertex v = 0; v < d.num_vertices(); ++v) {
      if (d.owner(v) != Player::system) continue;
      for (std::size_t e = d.out_begin(v); e < d.out_end(v); ++e)
        if (live.dist[d.edge_dst(e)] == kInfDist) a.edge_ok[e] = 0;
    }
  }
  return a;
}

inline bool cpre_at(const Digraph& g, const std::vector<std::uint8_t>& ok, const std::uint8_t* z, Vertex v) {
  const std::size_t b = g.out_begin(v), e = g.out_end(v);
  if (g.owner(v) == Player::tester) {
    for (std::size_t k = b; k < e; ++k)
      if (ok[k] && z[g.edge_dst(k)]) return true;
    return false;
  }
  bool any = false;
  for (std::size_t k = b; k < e; ++k) {
    if (!ok[k]) continue;
    any = true;
    if (!z[g.edge_dst(k)]) return false;
  }
  return any;
}

}  // namespace

Arena build_arena(const AuxGraph& aux, const MergedSpec& m) {
  Arena a = arena_over(aux, aux.graph(), m);
  a.terminal = aux.merged_goal();
  return a;
}

Arena build_arena(const GameGraph& g, const MergedSpec& m) { return arena_over(g, g.graph(), m); }

VertexSet controllable_predecessor(const Digraph& g, const VertexSet& target, const VertexSet& safe,
                                   const std::vector<std::uint8_t>* edge_ok) {
  std::vector<std::uint8_t> all;
  if (!edge_ok) {
    all.assign(g.num_edges(), 1);
    edge_ok = &all;
  }
  VertexSet out(g.num_vertices());
  for (Vertex v = 0; v < g.num_vertices(); ++v)
    if (safe.contains(v) && cpre_at(g, *edge_ok, target.data(), v)) out.insert(v);
  return out;
}

VertexSet attractor(const Arena& a, const VertexSet& target, const VertexSet& region) {
  const Digraph& g = *a.graph;
  VertexSet y = target;
  std::vector<Vertex> todo;
  for (Vertex v : region.members())
    if (a.safe.contains(v) && !y.contains(v)) todo.push_back(v);
  bool changed = true;
  while (changed) {
    changed = false;
    std::vector<Vertex> rest;
    for (Vertex v : todo) {
      if (cpre_at(g, a.edge_ok, y.data(), v)) {
        y.insert(v);
        changed = true;
      } else {
        rest.push_back(v);
      }
    }
    todo.swap(rest);
  }
  return y;
}

VertexSet solve_reach_or_persist(const Arena& a, const VertexSet& target, const VertexSet& region) {
  const Digraph& g = *a.graph;
  std::vector<Vertex> cand;
  for (Vertex v : region.members())
    if (a.safe.contains(v) && !target.contains(v)) cand.push_back(v);

  VertexSet y = target;
  while (true) {
    // Vertices forced into y in one step.
    VertexSet base = target;
    for (Vertex v : cand)
      if (y.contains(v) || cpre_at(g, a.edge_ok, y.data(), v)) base.insert(v);
    // Greatest set from which the tester reaches `base` or stays put among non-progress states.
    VertexSet x = base;
    std::vector<Vertex> stay;
    for (Vertex v : cand)
      if (!base.contains(v) && !a.progress.contains(v)) {
        x.insert(v);
        stay.push_back(v);
      }
    bool changed = true;
    while (changed) {
      changed = false;
      std::vector<Vertex> keep;
      for (Vertex v : stay) {
        if (cpre_at(g, a.edge_ok, x.data(), v)) {
          keep.push_back(v);
        } else {
          x.erase(v);
          changed = true;
        }
      }
      stay.swap(keep);
    }
    if (x == y) return y;
    y = std::move(x);
  }
}

// ---------------------------------------------------------------------------

std::vector<GoalClass> goal_classes(const AuxGraph& aux, const Arena& a) {
  static const char* names[] = {"joint", "first", "second"};
  std::vector<GoalClass> out;
  const std::size_t n = aux.num_vertices();
  for (int c = 0; c < 3; ++c) {
    VertexSet set(n);
    for (Vertex v = 0; v < n; ++v)
      if (aux.copy(v) == c && a.terminal.contains(v) && a.safe.contains(v)) set.insert(v);
    if (set.empty()) continue;
    VertexSet blocked = a.safe.complement() | (a.terminal - set);
    GoalClass gc;
    gc.name = names[c];
    gc.copy = c;
    gc.order = partial_order(*a.graph, set, &a.edge_ok, &blocked);
    gc.vertices = std::move(set);
    out.push_back(std::move(gc));
  }
  return out;
}

namespace {

constexpr std::uint16_t kFarU16 = 0xffff;

// Backward breadth-first distances to a single goal vertex, other terminals blocking.
std::vector<std::uint16_t> vertex_goal_dist(const Arena& a, Vertex goal) {
  const Digraph& g = *a.graph;
  std::vector<std::uint16_t> dist(g.num_vertices(), kFarU16);
  std::vector<Vertex> queue{goal};
  dist[goal] = 0;
  for (std::size_t h = 0; h < queue.size(); ++h) {
    Vertex u = queue[h];
    for (std::size_t k = g.in_begin(u); k < g.in_end(u); ++k) {
      std::size_t e = g.in_edge(k);
      Vertex w = g.edge_src(e);
      if (!a.edge_ok[e] || dist[w] != kFarU16 || !a.safe.contains(w) || a.terminal.contains(w)) continue;
      dist[w] = static_cast<std::uint16_t>(std::min<int>(dist[u] + 1, kFarU16 - 1));
      queue.push_back(w);
    }
  }
  return dist;
}

}  // namespace

int FilterW::progress_dist(std::size_t i, Vertex v) const {
  if (!per_vertex_progress()) return goals[i].order.dist[v];
  std::uint16_t d = goal_dist[i][v];
  return d == kFarU16 ? kInfDist : d;
}

std::vector<Vertex> short_horizon_winset(const Arena& a, const GoalClass& g, int j, const VertexSet& w) {
  const auto& layers = g.order.layers;
  if (j < 1 || j >= static_cast<int>(layers.size())) return {};
  const std::size_t n = a.graph->num_vertices();
  VertexSet target(n), region(n);
  for (Vertex v : layers[j - 1])
    if (w.contains(v)) target.insert(v);
  for (int k = j; k <= j + 1 && k < static_cast<int>(layers.size()); ++k)
    for (Vertex v : layers[k])
      if (w.contains(v) && !a.terminal.contains(v)) region.insert(v);
  VertexSet win = solve_reach_or_persist(a, target, region);
  std::vector<Vertex> out;
  for (int k = j; k <= j + 1 && k < static_cast<int>(layers.size()); ++k)
    for (Vertex v : layers[k])
      if (win.contains(v)) out.push_back(v);
  std::sort(out.begin(), out.end());
  return out;
}

FilterW synthesize_filter(const Arena& a, std::vector<GoalClass> goals, const FilterOptions& opt) {
  const std::size_t n = a.graph->num_vertices();
  FilterW f;
  f.safe = a.safe;
  f.terminal = a.terminal;
  f.goals = std::move(goals);
  f.win.resize(f.goals.size());

  VertexSet w = a.terminal & a.safe;
  for (const auto& g : f.goals)
    for (Vertex v = 0; v < n; ++v)
      if (g.order.dist[v] != kInfDist && a.safe.contains(v)) w.insert(v);
  if (f.goals.empty()) w = VertexSet(n);

  std::vector<std::pair<int, int>> windows;
  for (int gi = 0; gi < static_cast<int>(f.goals.size()); ++gi) {
    f.win[gi].assign(f.goals[gi].order.layers.size(), {});
    for (int j = 1; j <= f.goals[gi].jmax(); ++j) windows.emplace_back(gi, j);
  }

  // A window only sees w on layers j-1..j+1 of its goal, so after the first pass only
  // windows next to a removed vertex are solved again.
  const int nw = static_cast<int>(windows.size());
  std::vector<std::vector<Vertex>> results(nw);
  std::vector<int> dirty(nw);
  for (int k = 0; k < nw; ++k) dirty[k] = k;
  while (!dirty.empty()) {
    ++f.outer_iterations;
    const int nd = static_cast<int>(dirty.size());
    auto solve = [&](int i) {
      const int k = dirty[i];
      results[k] = short_horizon_winset(a, f.goals[windows[k].first], windows[k].second, w);
    };
    if (opt.exec == Exec::parallel) {
#pragma omp parallel for schedule(dynamic)
      for (int i = 0; i < nd; ++i) solve(i);
    } else {
      for (int i = 0; i < nd; ++i) solve(i);
    }
    VertexSet next = a.terminal & w;
    for (const auto& r : results)
      for (Vertex v : r) next.insert(v);
    const VertexSet removed = w - next;
    w = std::move(next);
    std::vector<std::vector<std::uint8_t>> touched(f.goals.size());
    for (std::size_t gi = 0; gi < f.goals.size(); ++gi) touched[gi].assign(f.goals[gi].order.layers.size() + 1, 0);
    for (Vertex v : removed.members())
      for (std::size_t gi = 0; gi < f.goals.size(); ++gi) {
        const int d = f.goals[gi].order.dist[v];
        if (d != kInfDist) touched[gi][d] = 1;
      }
    dirty.clear();
    for (int k = 0; k < nw; ++k) {
      if (!opt.incremental) {
        if (!removed.empty()) dirty.push_back(k);
        continue;
      }
      const auto& t = touched[windows[k].first];
      const int j = windows[k].second;
      if (t[j - 1] || t[j] || (j + 1 < static_cast<int>(t.size()) && t[j + 1])) dirty.push_back(k);
    }
  }
  for (int k = 0; k < nw; ++k) f.win[windows[k].first][windows[k].second] = std::move(results[k]);
  f.union_set = std::move(w);

  std::vector<Vertex> gv;
  for (const auto& g : f.goals)
    for (Vertex v : g.vertices.members()) gv.push_back(v);
  if (!gv.empty() && gv.size() * n <= opt.vertex_goal_budget) {
    f.goal_vertices = std::move(gv);
    f.goal_dist.resize(f.goal_vertices.size());
    const int ng = static_cast<int>(f.goal_vertices.size());
    if (opt.exec == Exec::parallel) {
#pragma omp parallel for schedule(dynamic)
      for (int i = 0; i < ng; ++i) f.goal_dist[i] = vertex_goal_dist(a, f.goal_vertices[i]);
    } else {
      for (int i = 0; i < ng; ++i) f.goal_dist[i] = vertex_goal_dist(a, f.goal_vertices[i]);
    }
  }
  return f;
}

FilterW synthesize_filter(const AuxGraph& aux, const MergedSpec& m, const FilterOptions& opt) {
  const GameGraph& base = aux.base();
  VertexSet p1 = base.satisfying(m.aux_psi1()), p2 = base.satisfying(m.aux_psi2());
  if (p1.empty() || p2.empty()) throw SpecError("tests cannot be merged: a unit goal is unsatisfiable");
  PartialOrder o1 = partial_order(base.graph(), p1), o2 = partial_order(base.graph(), p2);
  if (!check_assumption1(aux, o1, o2)) throw SpecError("tests cannot be merged: no edge links one goal to the other");
  Arena a = build_arena(aux, m);
  return synthesize_filter(a, goal_classes(aux, a), opt);
}

VertexSet monolithic_winning_region(const Arena& a, const std::vector<GoalClass>& goals, Exec exec, GoalGrain grain) {
  const std::size_t n = a.graph->num_vertices();
  if (goals.empty()) return VertexSet(n);
  VertexSet region = a.safe - a.terminal;
  std::vector<VertexSet> targets;
  for (const auto& g : goals) {
    if (grain == GoalGrain::goal_class) {
      targets.push_back(g.vertices & a.safe);
      continue;
    }
    for (Vertex v : g.vertices.members()) {
      VertexSet t(n);
      t.insert(v);
      targets.push_back(std::move(t));
    }
  }
  const int nt = static_cast<int>(targets.size());
  std::vector<VertexSet> parts(targets.size());
  auto solve = [&](int i) { parts[i] = solve_reach_or_persist(a, targets[i], region); };
  if (exec == Exec::parallel) {
#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < nt; ++i) solve(i);
  } else {
    for (int i = 0; i < nt; ++i) solve(i);
  }
  VertexSet out = a.terminal & a.safe;
  for (const auto& p : parts) out |= p;
  return out;
}

std::vector<std::size_t> allowed_actions(const FilterW& f, const Arena& a, Vertex v, const std::vector<bool>& active) {
  const Digraph& g = *a.graph;
  if (g.owner(v) != Player::tester) throw std::invalid_argument("allowed_actions expects a tester vertex");
  if (!f.contains(v)) throw FilterBreach("vertex " + std::to_string(v) + " lies outside the filter");
  std::vector<std::size_t> out;
  for (std::size_t e = g.out_begin(v); e < g.out_end(v); ++e) {
    Vertex u = g.edge_dst(e);
    if (!a.edge_ok[e] || !f.contains(u)) continue;
    bool progress = a.terminal.contains(v);
    for (std::size_t i = 0; i < f.num_progress_goals() && !progress; ++i) {
      if (!active.empty() && !active[i]) continue;
      int dv = f.progress_dist(i, v), du = f.progress_dist(i, u);
      progress = dv != kInfDist && du != kInfDist && du <= dv;
    }
    if (progress) out.push_back(e);
  }
  return out;
}

std::string dump_filter(const FilterW& f) {
  std::string out;
  for (std::size_t g = 0; g < f.win.size(); ++g)
    for (std::size_t j = 1; j < f.win[g].size(); ++j)
      for (Vertex v : f.win[g][j]) out += std::to_string(g) + ", " + std::to_string(j) + ", " + std::to_string(v) + "\n";
  for (Vertex v : f.union_set.members()) out += "union, " + std::to_string(v) + "\n";
  return out;
}

}  // namespace mut
