#include "mut/game_graph.hpp"

#include <algorithm>
#include <deque>
#include <numeric>
#include <set>

namespace mut {

std::size_t VertexSet::count() const {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

std::vector<Vertex> VertexSet::members() const {
  std::vector<Vertex> out;
  for (std::size_t i = 0; i < bits_.size(); ++i)
    if (bits_[i]) out.push_back(static_cast<Vertex>(i));
  return out;
}

bool VertexSet::subset_of(const VertexSet& o) const {
  for (std::size_t i = 0; i < bits_.size(); ++i)
    if (bits_[i] && !o.bits_[i]) return false;
  return true;
}

VertexSet& VertexSet::operator|=(const VertexSet& o) {
  for (std::size_t i = 0; i < bits_.size(); ++i) bits_[i] |= o.bits_[i];
  return *this;
}

VertexSet& VertexSet::operator&=(const VertexSet& o) {
  for (std::size_t i = 0; i < bits_.size(); ++i) bits_[i] &= o.bits_[i];
  return *this;
}

VertexSet& VertexSet::operator-=(const VertexSet& o) {
  for (std::size_t i = 0; i < bits_.size(); ++i) bits_[i] &= static_cast<std::uint8_t>(!o.bits_[i]);
  return *this;
}

VertexSet VertexSet::complement() const {
  VertexSet out(bits_.size());
  for (std::size_t i = 0; i < bits_.size(); ++i) out.bits_[i] = !bits_[i];
  return out;
}

Digraph::Digraph(std::vector<Player> owner, const std::vector<std::pair<Vertex, Vertex>>& edges)
    : owner_(std::move(owner)) {
  const std::size_t n = owner_.size();
  out_off_.assign(n + 1, 0);
  in_off_.assign(n + 1, 0);
  for (auto [u, w] : edges) {
    if (u >= n || w >= n) throw GraphError("edge endpoint out of range");
    ++out_off_[u + 1];
    ++in_off_[w + 1];
  }
  std::partial_sum(out_off_.begin(), out_off_.end(), out_off_.begin());
  std::partial_sum(in_off_.begin(), in_off_.end(), in_off_.begin());
  out_dst_.resize(edges.size());
  edge_src_.resize(edges.size());
  std::vector<std::size_t> pos(out_off_.begin(), out_off_.end() - 1);
  for (auto [u, w] : edges) {
    std::size_t e = pos[u]++;
    out_dst_[e] = w;
    edge_src_[e] = u;
  }
  in_edge_.resize(edges.size());
  std::vector<std::size_t> ipos(in_off_.begin(), in_off_.end() - 1);
  for (std::size_t e = 0; e < out_dst_.size(); ++e) in_edge_[ipos[out_dst_[e]]++] = e;
}

// ---------------------------------------------------------------------------

namespace {

void enumerate_valuations(const Schema& sc, const std::function<void(const std::vector<int>&)>& fn) {
  std::vector<int> vals(sc.size());
  for (std::size_t i = 0; i < sc.size(); ++i) vals[i] = sc[i].domain.lo;
  if (sc.size() == 0) {
    fn(vals);
    return;
  }
  while (true) {
    fn(vals);
    std::size_t i = sc.size();
    while (i > 0) {
      --i;
      if (vals[i] < sc[i].domain.hi) {
        ++vals[i];
        break;
      }
      vals[i] = sc[i].domain.lo;
      if (i == 0) return;
    }
  }
}

}  // namespace

std::size_t TransitionSystem::num_transitions() const {
  std::size_t n = 0;
  for (const auto& s : succ) n += s.size();
  return n;
}

std::optional<std::uint32_t> TransitionSystem::find(const std::vector<int>& values) const {
  if (index_.size() != states.size()) {
    index_.clear();
    for (std::uint32_t i = 0; i < states.size(); ++i) index_.emplace(states[i], i);
  }
  auto it = index_.find(values);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

void TransitionSystem::check() const {
  if (succ.size() != states.size()) throw GraphError("transition table size mismatch");
  for (const auto& row : succ)
    for (auto t : row)
      if (t >= states.size()) throw GraphError("transition to undeclared state");
}

TransitionSystem TransitionSystem::from_formulas(SchemaPtr schema, const PropFormula& invariant,
                                                 const PropFormula& rule) {
  TransitionSystem ts;
  ts.schema = schema;
  enumerate_valuations(*schema, [&](const std::vector<int>& v) {
    if (eval(invariant, StateValuation(schema, v))) ts.states.push_back(v);
  });
  ts.succ.resize(ts.states.size());
  for (std::size_t i = 0; i < ts.states.size(); ++i) {
    StateValuation s(schema, ts.states[i]);
    for (std::uint32_t j = 0; j < ts.states.size(); ++j)
      if (eval(rule, s, StateValuation(schema, ts.states[j]))) ts.succ[i].push_back(j);
  }
  return ts;
}

TransitionSystem TransitionSystem::from_function(SchemaPtr schema, const PropFormula& invariant,
                                                 const SuccessorFn& next) {
  TransitionSystem ts;
  ts.schema = schema;
  enumerate_valuations(*schema, [&](const std::vector<int>& v) {
    StateValuation s(schema, v);
    if (s.in_domain() && eval(invariant, s)) ts.states.push_back(v);
  });
  ts.succ.resize(ts.states.size());
  for (std::size_t i = 0; i < ts.states.size(); ++i) {
    std::set<std::uint32_t> targets;
    for (const auto& n : next(ts.states[i]))
      if (auto j = ts.find(n)) targets.insert(*j);
    ts.succ[i].assign(targets.begin(), targets.end());
  }
  return ts;
}

ProductTS product(const TransitionSystem& sys, const TransitionSystem& test) {
  ProductTS p{sys, test, {}};
  p.joint.schema = std::make_shared<const Schema>(Schema::concat(*sys.schema, *test.schema));
  const std::size_t nt = test.size();
  p.joint.states.reserve(sys.size() * nt);
  for (const auto& s : sys.states)
    for (const auto& t : test.states) {
      std::vector<int> v = s;
      v.insert(v.end(), t.begin(), t.end());
      p.joint.states.push_back(std::move(v));
    }
  p.joint.succ.resize(p.joint.states.size());
  for (std::uint32_t s = 0; s < sys.size(); ++s)
    for (std::uint32_t t = 0; t < nt; ++t) {
      auto& row = p.joint.succ[s * nt + t];
      for (auto s2 : sys.succ[s]) row.push_back(static_cast<std::uint32_t>(s2 * nt + t));
      for (auto t2 : test.succ[t]) row.push_back(static_cast<std::uint32_t>(s * nt + t2));
      std::sort(row.begin(), row.end());
      row.erase(std::unique(row.begin(), row.end()), row.end());
    }
  return p;
}

TransitionSystem synchronous_product(const TransitionSystem& a, const TransitionSystem& b) {
  TransitionSystem out;
  out.schema = std::make_shared<const Schema>(Schema::concat(*a.schema, *b.schema));
  const std::size_t nb = b.size();
  for (const auto& s : a.states)
    for (const auto& t : b.states) {
      std::vector<int> v = s;
      v.insert(v.end(), t.begin(), t.end());
      out.states.push_back(std::move(v));
    }
  out.succ.resize(out.states.size());
  for (std::uint32_t i = 0; i < a.size(); ++i)
    for (std::uint32_t j = 0; j < nb; ++j)
      for (auto i2 : a.succ[i])
        for (auto j2 : b.succ[j]) out.succ[i * nb + j].push_back(static_cast<std::uint32_t>(i2 * nb + j2));
  for (auto& row : out.succ) std::sort(row.begin(), row.end());
  return out;
}

TransitionSystem restrict(const TransitionSystem& ts, const PropFormula& keep) {
  TransitionSystem out;
  out.schema = ts.schema;
  std::vector<std::int64_t> remap(ts.size(), -1);
  for (std::size_t i = 0; i < ts.size(); ++i)
    if (eval(keep, ts.valuation(static_cast<std::uint32_t>(i)))) {
      remap[i] = static_cast<std::int64_t>(out.states.size());
      out.states.push_back(ts.states[i]);
    }
  out.succ.resize(out.states.size());
  for (std::size_t i = 0; i < ts.size(); ++i) {
    if (remap[i] < 0) continue;
    for (auto j : ts.succ[i])
      if (remap[j] >= 0) out.succ[remap[i]].push_back(static_cast<std::uint32_t>(remap[j]));
  }
  return out;
}

// ---------------------------------------------------------------------------

GameGraph::GameGraph(std::shared_ptr<const ProductTS> prod) : prod_(std::move(prod)) {
  prod_->sys.check();
  prod_->test.check();
  schema_ = prod_->joint.schema;
  nsys_ = prod_->sys.size();
  ntest_ = prod_->test.size();
  nq_ = nsys_ * ntest_;
  std::vector<Player> owner(2 * nq_, Player::system);
  std::fill(owner.begin() + static_cast<std::ptrdiff_t>(nq_), owner.end(), Player::tester);
  std::vector<std::pair<Vertex, Vertex>> edges;
  for (std::uint32_t s = 0; s < nsys_; ++s)
    for (std::uint32_t t = 0; t < ntest_; ++t)
      for (auto s2 : prod_->sys.succ[s]) edges.emplace_back(vertex(Player::system, s, t), vertex(Player::tester, s2, t));
  for (std::uint32_t s = 0; s < nsys_; ++s)
    for (std::uint32_t t = 0; t < ntest_; ++t)
      for (auto t2 : prod_->test.succ[t]) edges.emplace_back(vertex(Player::tester, s, t), vertex(Player::system, s, t2));
  graph_ = Digraph(std::move(owner), edges);
}

std::vector<int> GameGraph::values(Vertex v) const {
  std::vector<int> out = prod_->sys.states[sys_state(v)];
  const auto& t = prod_->test.states[test_state(v)];
  out.insert(out.end(), t.begin(), t.end());
  return out;
}

VertexSet GameGraph::satisfying(const PropFormula& f) const {
  VertexSet out(num_vertices());
  for (std::size_t q = 0; q < nq_; ++q) {
    bool b = eval(f, valuation(static_cast<Vertex>(q)));
    out.set(static_cast<Vertex>(q), b);
    out.set(static_cast<Vertex>(q + nq_), b);
  }
  return out;
}

std::vector<std::uint8_t> GameGraph::edges_satisfying(const PropFormula& f) const {
  std::vector<StateValuation> vals;
  vals.reserve(num_vertices());
  for (Vertex v = 0; v < num_vertices(); ++v) vals.push_back(valuation(v));
  std::vector<std::uint8_t> out(graph_.num_edges());
  for (std::size_t e = 0; e < out.size(); ++e)
    out[e] = eval(f, vals[graph_.edge_src(e)], vals[graph_.edge_dst(e)]) ? 1 : 0;
  return out;
}

GameGraph build_game_graph(std::shared_ptr<const ProductTS> prod) { return GameGraph(std::move(prod)); }

// ---------------------------------------------------------------------------

PartialOrder partial_order(const Digraph& g, const VertexSet& goal, const std::vector<std::uint8_t>* edge_ok,
                           const VertexSet* blocked) {
  if (goal.empty()) throw GraphError("partial order requested for an empty goal set");
  PartialOrder po;
  po.goal = goal;
  po.dist.assign(g.num_vertices(), kInfDist);
  std::deque<Vertex> queue;
  po.layers.emplace_back();
  for (Vertex v : goal.members()) {
    po.dist[v] = 0;
    po.layers[0].push_back(v);
    queue.push_back(v);
  }
  while (!queue.empty()) {
    Vertex u = queue.front();
    queue.pop_front();
    for (std::size_t k = g.in_begin(u); k < g.in_end(u); ++k) {
      std::size_t e = g.in_edge(k);
      if (edge_ok && !(*edge_ok)[e]) continue;
      Vertex w = g.edge_src(e);
      if (po.dist[w] != kInfDist) continue;
      if (blocked && blocked->contains(w)) continue;
      po.dist[w] = po.dist[u] + 1;
      if (static_cast<int>(po.layers.size()) <= po.dist[w]) po.layers.emplace_back();
      po.layers[po.dist[w]].push_back(w);
      queue.push_back(w);
    }
  }
  for (auto& layer : po.layers) std::sort(layer.begin(), layer.end());
  return po;
}

PartialOrder partial_order(const GameGraph& g, const PropFormula& goal) {
  return partial_order(g.graph(), g.satisfying(goal));
}

// ---------------------------------------------------------------------------

StateValuation AuxGraph::valuation(Vertex v) const {
  std::vector<int> vals = base_->values(base_vertex(v));
  vals.push_back(copy(v));
  return StateValuation(schema_, std::move(vals));
}

VertexSet AuxGraph::satisfying(const PropFormula& f) const {
  VertexSet out(num_vertices());
  for (Vertex v = 0; v < num_vertices(); ++v) out.set(v, eval(f, valuation(v)));
  return out;
}

std::vector<std::uint8_t> AuxGraph::edges_satisfying(const PropFormula& f) const {
  std::vector<std::uint8_t> base = base_->edges_satisfying(f);
  std::vector<std::uint8_t> out(graph_.num_edges());
  for (std::size_t e = 0; e < out.size(); ++e) out[e] = base[base_edge_[e]];
  return out;
}

AuxGraph build_aux_graph(std::shared_ptr<const GameGraph> g, const PropFormula& psi1, const PropFormula& psi2) {
  VertexSet p1 = g->satisfying(psi1);
  VertexSet p2 = g->satisfying(psi2);
  if (p1.empty()) throw GraphError("first unit goal is unsatisfiable on the game graph");
  if (p2.empty()) throw GraphError("second unit goal is unsatisfiable on the game graph");
  AuxGraph aux;
  aux.base_ = g;
  aux.nb_ = g->num_vertices();
  const std::size_t nb = aux.nb_;
  const Digraph& bg = g->graph();

  std::vector<Player> owner(3 * nb);
  for (int c = 0; c < 3; ++c)
    for (Vertex v = 0; v < nb; ++v) owner[c * nb + v] = bg.owner(v);

  // Target copies for the out-edges of a vertex lying in copy c.
  auto targets = [&](int c, Vertex v) {
    std::vector<int> out;
    if (c == 0) {
      if (p2.contains(v)) out.push_back(1);
      if (p1.contains(v)) out.push_back(2);
      if (out.empty()) out.push_back(0);
    } else if (c == 1) {
      out.push_back(p1.contains(v) ? 0 : 1);
    } else {
      out.push_back(p2.contains(v) ? 0 : 2);
    }
    return out;
  };

  std::vector<std::pair<Vertex, Vertex>> edges;
  for (int c = 0; c < 3; ++c)
    for (Vertex v = 0; v < nb; ++v) {
      auto tc = targets(c, v);
      for (std::size_t e = bg.out_begin(v); e < bg.out_end(v); ++e)
        for (int t : tc) {
          edges.emplace_back(aux.lift(v, c), aux.lift(bg.edge_dst(e), t));
          aux.base_edge_.push_back(e);
        }
    }
  aux.graph_ = Digraph(std::move(owner), edges);

  aux.psi1_ = VertexSet(3 * nb);
  aux.psi2_ = VertexSet(3 * nb);
  aux.merged_goal_ = VertexSet(3 * nb);
  for (int c = 0; c < 3; ++c)
    for (Vertex v = 0; v < nb; ++v) {
      Vertex a = aux.lift(v, c);
      aux.psi1_.set(a, p1.contains(v));
      aux.psi2_.set(a, p2.contains(v));
      bool goal = c == 0 ? (p1.contains(v) && p2.contains(v)) : c == 1 ? p1.contains(v) : p2.contains(v);
      aux.merged_goal_.set(a, goal);
    }

  std::vector<VarDecl> vars = g->schema()->vars();
  vars.push_back({kAuxCopyVar, {0, 2}});
  aux.schema_ = std::make_shared<const Schema>(std::move(vars));
  return aux;
}

bool check_assumption1(const AuxGraph& aux, const PartialOrder& p1, const PartialOrder& p2) {
  const Digraph& g = aux.base().graph();
  if (p1.dist.size() != g.num_vertices() || p2.dist.size() != g.num_vertices())
    throw GraphError("partial orders must be computed on the base game graph");
  auto crosses = [&](const PartialOrder& from, const PartialOrder& into) {
    for (Vertex v : from.goal.members())
      for (std::size_t e = g.out_begin(v); e < g.out_end(v); ++e) {
        int d = into.dist[g.edge_dst(e)];
        if (d >= 1 && d != kInfDist) return true;
      }
    return false;
  };
  return crosses(p1, p2) || crosses(p2, p1);
}

// ---------------------------------------------------------------------------

namespace {

std::vector<PropFormula> all_safety(const TestContract& c) {
  std::vector<PropFormula> out = c.assumption.safety;
  out.insert(out.end(), c.guarantee.safety.begin(), c.guarantee.safety.end());
  return out;
}

}  // namespace

bool needs_temporal_constraint(const TestContract& c1, const TestContract& c2, const GameGraph& g, int depth) {
  if (c1.guarantee.recurrence.size() != 1 || c2.guarantee.recurrence.size() != 1)
    throw SpecError("each unit guarantee must carry exactly one recurrence goal");
  const auto& prod = g.product();
  const std::size_t ns = prod.sys.size(), nt = prod.test.size();
  VertexSet g1 = g.satisfying(c1.guarantee.recurrence.front());
  VertexSet g2 = g.satisfying(c2.guarantee.recurrence.front());

  // Per tester configuration, the system states each unit goal would demand.
  // Both goals must ask the same of the system wherever both ask something.
  std::vector<std::uint8_t> active(nt, 0);
  bool some_joint = false;
  for (std::uint32_t t = 0; t < nt; ++t) {
    bool any1 = false, any2 = false, differ = false;
    for (std::uint32_t s = 0; s < ns; ++s) {
      Vertex v = g.vertex(Player::system, s, t);
      any1 = any1 || g1.contains(v);
      any2 = any2 || g2.contains(v);
      differ = differ || g1.contains(v) != g2.contains(v);
    }
    if (any1 && any2) {
      if (differ) return false;
      active[t] = 1;
      some_joint = true;
    }
  }
  if (!some_joint) return false;

  // Bounded exploration of safe executions from initial vertices, tracking which
  // goal has been met at jointly demanded configurations.
  std::vector<PropFormula> safety = all_safety(c1);
  for (const auto& f : all_safety(c2)) safety.push_back(f);
  std::vector<PropFormula> state_safety, step_safety;
  for (const auto& f : safety) (f.mentions_primed() ? step_safety : state_safety).push_back(f);
  VertexSet safe = g.satisfying(all_of(state_safety));
  std::vector<std::uint8_t> edge_ok = g.edges_satisfying(all_of(step_safety));
  VertexSet init = g.satisfying(all_of({c1.assumption.init, c1.guarantee.init, c2.assumption.init, c2.guarantee.init}));
  const Digraph& dg = g.graph();

  auto flags_at = [&](Vertex v, int f) {
    if (active[g.test_state(v)]) {
      if (g1.contains(v)) f |= 1;
      if (g2.contains(v)) f |= 2;
    }
    return f;
  };
  std::vector<std::uint8_t> seen(g.num_vertices() * 4, 0);
  std::vector<std::pair<Vertex, int>> frontier;
  for (Vertex v = 0; v < g.num_vertices(); ++v)
    if (g.turn(v) == Player::system && init.contains(v) && safe.contains(v)) {
      int f = flags_at(v, 0);
      if (!seen[v * 4 + f]) {
        seen[v * 4 + f] = 1;
        frontier.emplace_back(v, f);
      }
    }
  bool agree_somewhere = false;
  for (int d = 0; d <= depth && !frontier.empty(); ++d) {
    std::vector<std::pair<Vertex, int>> next;
    for (auto [v, f] : frontier) {
      if (f == 1 || f == 2) return false;
      if (f == 3) agree_somewhere = true;
      if (d == depth) continue;
      for (std::size_t e = dg.out_begin(v); e < dg.out_end(v); ++e) {
        Vertex w = dg.edge_dst(e);
        if (!edge_ok[e] || !safe.contains(w)) continue;
        int f2 = flags_at(w, f);
        if (!seen[w * 4 + f2]) {
          seen[w * 4 + f2] = 1;
          next.emplace_back(w, f2);
        }
      }
    }
    frontier = std::move(next);
  }
  return agree_somewhere;
}

// ---------------------------------------------------------------------------

namespace {

std::string adjacency_line(const Digraph& g, Vertex v, int turn, int copy) {
  std::string line = std::to_string(v) + " " + std::to_string(turn) + " " + std::to_string(copy) + " ->";
  for (std::size_t e = g.out_begin(v); e < g.out_end(v); ++e) {
    line += e == g.out_begin(v) ? " " : ",";
    line += std::to_string(g.edge_dst(e));
  }
  return line + "\n";
}

}  // namespace

std::string dump_graph(const GameGraph& g) {
  std::string out;
  for (Vertex v = 0; v < g.num_vertices(); ++v)
    out += adjacency_line(g.graph(), v, static_cast<int>(g.turn(v)), 0);
  return out;
}

std::string dump_graph(const AuxGraph& g) {
  std::string out;
  for (Vertex v = 0; v < g.num_vertices(); ++v)
    out += adjacency_line(g.graph(), v, static_cast<int>(g.base().turn(g.base_vertex(v))), g.copy(v));
  return out;
}

std::string dump_bindings(const GameGraph& g) {
  std::string out;
  for (Vertex v = 0; v < g.num_vertices(); ++v) out += std::to_string(v) + " " + g.valuation(v).to_string() + "\n";
  return out;
}

std::string dump_bindings(const AuxGraph& g) {
  std::string out;
  for (Vertex v = 0; v < g.num_vertices(); ++v) out += std::to_string(v) + " " + g.valuation(v).to_string() + "\n";
  return out;
}

}  // namespace mut
