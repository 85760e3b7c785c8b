#include "mut/policy_search.hpp"

#include <algorithm>
#include <limits>

namespace mut {

namespace {

std::mt19937_64 stream(std::initializer_list<std::uint64_t> keys) {
  std::vector<std::uint32_t> words;
  for (std::uint64_t k : keys) {
    words.push_back(static_cast<std::uint32_t>(k));
    words.push_back(static_cast<std::uint32_t>(k >> 32));
  }
  std::seed_seq seq(words.begin(), words.end());
  return std::mt19937_64(seq);
}

template <class T>
const T& pick(const std::vector<T>& v, std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> d(0, v.size() - 1);
  return v[d(rng)];
}

constexpr int kFar = std::numeric_limits<int>::max();

}  // namespace

void SearchParams::validate() const {
  if (rollouts < 1) throw std::invalid_argument("rollouts must be at least 1");
  if (!(c > 0)) throw std::invalid_argument("exploration constant must be positive");
  if (t_max < 0) throw std::invalid_argument("t_max must be positive");
  if (k_ll < 0) throw std::invalid_argument("live-lock window must be positive");
  if (batch < 1) throw std::invalid_argument("batch must be at least 1");
}

double ucb1(double q_child, int n_child, int n_parent, double c) {
  if (n_child == 0) return std::numeric_limits<double>::infinity();
  return q_child / n_child + c * std::sqrt(std::log(static_cast<double>(n_parent)) / n_child);
}

// ---------------------------------------------------------------------------

GoalTracker::GoalTracker(std::size_t goals, int k_ll)
    : active_(goals, true), best_(goals, kFar), stall_(goals, 0), k_ll_(std::max(1, k_ll)) {}

std::size_t GoalTracker::num_active() const { return static_cast<std::size_t>(std::count(active_.begin(), active_.end(), true)); }

void GoalTracker::observe(const std::vector<int>& dist) {
  for (std::size_t g = 0; g < active_.size(); ++g) {
    if (dist[g] < best_[g]) {
      best_[g] = dist[g];
      stall_[g] = 0;
    } else if (++stall_[g] >= k_ll_) {
      active_[g] = false;
    }
  }
  if (num_active() == 0) reset();
}

void GoalTracker::reset() {
  std::fill(active_.begin(), active_.end(), true);
  std::fill(best_.begin(), best_.end(), kFar);
  std::fill(stall_.begin(), stall_.end(), 0);
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::running: return "running";
    case Verdict::completed: return "completed";
    case Verdict::timeout: return "timeout";
    case Verdict::vacuous: return "vacuous";
    case Verdict::breach: return "breach";
  }
  return "?";
}

// ---------------------------------------------------------------------------

Episode::Episode(const ScenarioSim& sim, const FilterW& filter, const SearchParams& p)
    : sim_(sim), filter_(filter), t_max_(p.t_max > 0 ? p.t_max : sim.t_max), k_ll_(p.k_ll) {
  if (k_ll_ == 0)
    for (const auto& g : filter.goals) k_ll_ = std::max(k_ll_, g.jmax());
  k_ll_ = std::max(k_ll_, 1);
}

EpisodeState Episode::initial() const {
  EpisodeState s;
  s.base = sim_.initial;
  s.aux = sim_.aux->lift(sim_.initial, 0);
  s.tracker = GoalTracker(filter_.num_progress_goals(), k_ll_);
  settle(s);
  return s;
}

bool Episode::tester_turn(const EpisodeState& s) const { return sim_.game->turn(s.base) == Player::tester; }

std::vector<int> Episode::goal_dists(Vertex aux) const {
  std::vector<int> d(filter_.num_progress_goals());
  for (std::size_t g = 0; g < d.size(); ++g) d[g] = filter_.progress_dist(g, aux);
  return d;
}

std::vector<std::size_t> Episode::tester_actions(EpisodeState& s) const {
  std::vector<std::size_t> out;
  if (s.goal_reached) {
    // After the merged goal only safety matters; keep the system able to finish when possible.
    const Digraph& g = sim_.game->graph();
    std::vector<std::size_t> fallback;
    for (std::size_t e = g.out_begin(s.base); e < g.out_end(s.base); ++e) {
      Vertex u = g.edge_dst(e);
      if (!sim_.base_arena.edge_ok[e] || !sim_.base_arena.safe.contains(u)) continue;
      fallback.push_back(e);
      if (sim_.system_region.contains(u)) out.push_back(e);
    }
    return out.empty() ? fallback : out;
  }
  if (!filter_.contains(s.aux)) return out;
  const AuxGraph& aux = *sim_.aux;
  const Arena& a = sim_.aux_arena;
  std::vector<std::size_t> acts = allowed_actions(filter_, a, s.aux, s.tracker.active());
  if (acts.empty()) {
    s.tracker.reset();
    acts = allowed_actions(filter_, a, s.aux, s.tracker.active());
  }
  if (acts.empty()) {
    const Digraph& g = aux.graph();
    for (std::size_t e = g.out_begin(s.aux); e < g.out_end(s.aux); ++e)
      if (a.edge_ok[e] && filter_.contains(g.edge_dst(e))) acts.push_back(e);
  }
  for (std::size_t e : acts) out.push_back(aux.base_edge(e));
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

void Episode::apply(EpisodeState& s, std::size_t base_edge) const {
  const Digraph& bg = sim_.game->graph();
  const bool tester = tester_turn(s);
  if (!s.goal_reached) {
    const AuxGraph& aux = *sim_.aux;
    const Digraph& g = aux.graph();
    bool found = false;
    for (std::size_t e = g.out_begin(s.aux); e < g.out_end(s.aux) && !found; ++e)
      if (aux.base_edge(e) == base_edge) {
        s.aux = g.edge_dst(e);
        found = true;
      }
    if (!found) throw std::logic_error("move has no counterpart in the auxiliary graph");
    if (tester) s.tracker.observe(goal_dists(s.aux));
  }
  s.base = bg.edge_dst(base_edge);
  ++s.ply;
  settle(s);
}

void Episode::settle(EpisodeState& s) const {
  if (s.verdict != Verdict::running) return;
  if (!s.goal_reached && sim_.aux->merged_goal().contains(s.aux)) s.goal_reached = true;
  const std::vector<int> values = sim_.game->values(s.base);
  if (s.goal_reached && sim_.complete(values)) {
    s.verdict = Verdict::completed;
    s.rho = sim_.robustness(values);
  } else if (s.ply >= t_max_) {
    s.verdict = Verdict::timeout;
  } else if (!tester_turn(s) && system_moves(sim_, s.base).empty()) {
    s.verdict = Verdict::vacuous;
  }
}

double Episode::value(const EpisodeState& s) const {
  return s.verdict == Verdict::completed ? sim_.reward(s.rho) : 0.0;
}

EpisodeState Episode::playout(EpisodeState s, std::mt19937_64& rng) const {
  while (s.verdict == Verdict::running) {
    if (tester_turn(s)) {
      auto acts = tester_actions(s);
      if (acts.empty()) {
        s.verdict = Verdict::breach;
        break;
      }
      apply(s, pick(acts, rng));
    } else {
      apply(s, *system_model_step(sim_, s.base, rng));
    }
  }
  return s;
}

// ---------------------------------------------------------------------------

namespace {

struct Node {
  EpisodeState st;
  std::vector<std::size_t> actions;  // tester nodes
  std::vector<int> child;            // aligned with actions
  std::vector<std::pair<std::size_t, int>> outcomes;  // system nodes: sampled edge -> child
  int n = 0;
  double q = 0.0;
};

}  // namespace

SearchResult select_action(const Episode& ep, const EpisodeState& root_state, const SearchParams& p, int decision) {
  std::vector<Node> tree;
  auto make = [&](EpisodeState st) {
    Node nd;
    nd.st = std::move(st);
    if (nd.st.verdict == Verdict::running && ep.tester_turn(nd.st)) {
      nd.actions = ep.tester_actions(nd.st);
      if (nd.actions.empty()) nd.st.verdict = Verdict::breach;
      nd.child.assign(nd.actions.size(), -1);
    }
    tree.push_back(std::move(nd));
    return static_cast<int>(tree.size()) - 1;
  };
  make(root_state);
  if (!ep.tester_turn(tree[0].st)) throw std::invalid_argument("select_action expects a tester turn");
  if (tree[0].actions.empty()) throw NoPolicy("filter empty: no allowed tester action");

  SearchResult res;
  res.log.step = root_state.ply;
  res.log.options = tree[0].actions.size();
  if (tree[0].actions.size() == 1) {
    res.edge = tree[0].actions[0];
    res.log.best_edge = res.edge;
    return res;
  }

  std::mt19937_64 tree_rng = stream({p.seed, static_cast<std::uint64_t>(decision), 0x7e11});
  int done = 0;
  for (int iter = 0; done < p.rollouts; ++iter) {
    std::vector<int> path{0};
    int cur = 0;
    while (tree[cur].st.verdict == Verdict::running) {
      if (ep.tester_turn(tree[cur].st)) {
        Node& nd = tree[cur];
        std::size_t best = 0;
        double best_score = -std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < nd.actions.size(); ++k) {
          const int c = nd.child[k];
          double sc = c < 0 ? std::numeric_limits<double>::infinity() : ucb1(tree[c].q, tree[c].n, nd.n, p.c);
          if (sc > best_score) {
            best_score = sc;
            best = k;
          }
        }
        if (nd.child[best] < 0) {
          EpisodeState st = nd.st;
          ep.apply(st, nd.actions[best]);
          const int id = make(std::move(st));
          tree[cur].child[best] = id;
          path.push_back(id);
          break;
        }
        cur = nd.child[best];
        path.push_back(cur);
      } else {
        std::size_t e = *system_model_step(ep.sim(), tree[cur].st.base, tree_rng);
        int next = -1;
        for (const auto& [edge, id] : tree[cur].outcomes)
          if (edge == e) next = id;
        if (next < 0) {
          EpisodeState st = tree[cur].st;
          ep.apply(st, e);
          next = make(std::move(st));
          tree[cur].outcomes.emplace_back(e, next);
          path.push_back(next);
          break;
        }
        cur = next;
        path.push_back(cur);
      }
    }

    const int leaf = path.back();
    const int b = std::min(p.batch, p.rollouts - done);
    std::vector<double> vals(b);
    const EpisodeState& ls = tree[leaf].st;
    auto run = [&](int k) {
      std::mt19937_64 rng = stream({p.seed, static_cast<std::uint64_t>(decision), static_cast<std::uint64_t>(iter),
                                    static_cast<std::uint64_t>(k), 0x7011});
      vals[k] = ep.rollout(ls, rng);
    };
    if (p.exec == Exec::parallel && b > 1) {
#pragma omp parallel for schedule(dynamic)
      for (int k = 0; k < b; ++k) run(k);
    } else {
      for (int k = 0; k < b; ++k) run(k);
    }
    double sum = 0;
    for (double v : vals) sum += v;
    for (int id : path) {
      tree[id].n += b;
      tree[id].q += sum;
    }
    done += b;
  }

  const Node& root = tree[0];
  int best_visits = -1;
  for (std::size_t k = 0; k < root.actions.size(); ++k) {
    const int c = root.child[k];
    const int v = c < 0 ? 0 : tree[c].n;
    if (v > best_visits) {
      best_visits = v;
      res.edge = root.actions[k];
      res.log.mean_value = c < 0 ? 0.0 : tree[c].q / tree[c].n;
    }
  }
  res.log.rollouts = done;
  res.log.best_edge = res.edge;
  res.log.visits = best_visits;
  return res;
}

// ---------------------------------------------------------------------------

EpisodeResult run_episode(const ScenarioSim& sim, const FilterW& filter, const SearchParams& p) {
  p.validate();
  if (filter.goals.empty() || filter.union_set.empty()) throw NoPolicy("the filter is empty");
  if (!filter.contains(sim.aux->lift(sim.initial, 0))) throw NoPolicy("the initial state lies outside the filter");

  Episode ep(sim, filter, p);
  EpisodeState s = ep.initial();
  EpisodeResult out;
  out.trace.push_back(s.base);
  std::mt19937_64 sys_rng = stream({p.seed, 0x5151});
  int decision = 0;
  while (s.verdict == Verdict::running) {
    if (ep.tester_turn(s)) {
      if (ep.tester_actions(s).empty()) {
        s.verdict = Verdict::breach;
        break;
      }
      SearchResult r = select_action(ep, s, p, decision++);
      out.rollouts += r.log.rollouts;
      out.decisions.push_back(r.log);
      ep.apply(s, r.edge);
    } else {
      ep.apply(s, *system_model_step(sim, s.base, sys_rng));
    }
    out.trace.push_back(s.base);
  }
  out.verdict = s.verdict;
  out.rho = s.rho;
  out.reward = ep.value(s);
  out.monitor = monitor(sim, to_trace(sim, out.trace));
  return out;
}

Trace to_trace(const ScenarioSim& sim, const std::vector<Vertex>& base) {
  Trace t;
  t.reserve(base.size());
  for (Vertex v : base) t.push_back(sim.game->valuation(v));
  return t;
}

}  // namespace mut
