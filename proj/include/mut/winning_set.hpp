// Safety-constrained game fixpoints and the receding-horizon tester filter.
#pragma once

#include "mut/game_graph.hpp"
#include "mut/spec.hpp"

#include <string>
#include <vector>

namespace mut {

enum class Exec { serial, parallel };

/// A game graph annotated with what each player is allowed to do.
struct Arena {
  const Digraph* graph = nullptr;
  VertexSet safe;                     // tester safety on states
  std::vector<std::uint8_t> edge_ok;  // tester edges: tester safety; system edges: system admissibility
  VertexSet progress;                 // system recurrence states
  VertexSet terminal;                 // test finished
};

/// Arena of the merged test over its auxiliary graph.
Arena build_arena(const AuxGraph& aux, const MergedSpec& m);
/// Arena of the base game graph; terminal states are left empty.
Arena build_arena(const GameGraph& g, const MergedSpec& m);

/// One step of the alternating attractor restricted to `safe`: a tester vertex needs some
/// permitted edge into `target`, a system vertex needs at least one admissible edge and
/// every admissible edge into `target`.
VertexSet controllable_predecessor(const Digraph& g, const VertexSet& target, const VertexSet& safe,
                                   const std::vector<std::uint8_t>* edge_ok = nullptr);

/// Least fixpoint Y = target ∪ (region ∩ CPre(Y)).
VertexSet attractor(const Arena& a, const VertexSet& target, const VertexSet& region);

/// Vertices from which the tester forces `target`, or keeps the play inside `region` while
/// the system stops visiting progress states. Both escapes are evaluated on the vertex list
/// of `region` only.
VertexSet solve_reach_or_persist(const Arena& a, const VertexSet& target, const VertexSet& region);

struct GoalClass {
  std::string name;
  int copy = 0;
  VertexSet vertices;
  PartialOrder order;  // over the arena, ignoring other classes' terminals
  int jmax() const { return order.depth(); }
};

struct FilterW {
  std::vector<GoalClass> goals;
  // win[g][j] lists the members of the short-horizon set of goal g at distance j (index 0 unused).
  std::vector<std::vector<std::vector<Vertex>>> win;
  VertexSet union_set;
  VertexSet safe;
  VertexSet terminal;
  int outer_iterations = 0;

  // Progress goals for allowed_actions: single goal vertices when their distance tables fit
  // the budget, otherwise the goal classes themselves.
  std::vector<Vertex> goal_vertices;
  std::vector<std::vector<std::uint16_t>> goal_dist;  // aligned with goal_vertices

  bool contains(Vertex v) const { return union_set.contains(v); }
  std::size_t size() const { return union_set.count(); }
  bool per_vertex_progress() const { return !goal_vertices.empty(); }
  std::size_t num_progress_goals() const { return per_vertex_progress() ? goal_vertices.size() : goals.size(); }
  /// Distance of v to progress goal i, kInfDist when unreachable.
  int progress_dist(std::size_t i, Vertex v) const;
};

struct FilterOptions {
  Exec exec = Exec::serial;
  std::size_t vertex_goal_budget = 50'000'000;  // |I| * |V| distance entries; 0 keeps classes
  bool incremental = true;  // false re-solves every window on every pass
};

/// Goal classes: merged goal vertices split by auxiliary copy, nonempty ones only.
std::vector<GoalClass> goal_classes(const AuxGraph& aux, const Arena& a);

/// Short-horizon winning set for goal `g` at distance j given the current filter `w`.
std::vector<Vertex> short_horizon_winset(const Arena& a, const GoalClass& g, int j, const VertexSet& w);

/// Full receding-horizon synthesis. Throws SpecError when the units cannot be merged.
FilterW synthesize_filter(const AuxGraph& aux, const MergedSpec& m, const FilterOptions& opt = {});
FilterW synthesize_filter(const Arena& a, std::vector<GoalClass> goals, const FilterOptions& opt = {});

enum class GoalGrain { vertex, goal_class };

/// Baseline: full-horizon region computed separately for every goal class (or every single
/// goal vertex), then unioned.
VertexSet monolithic_winning_region(const Arena& a, const std::vector<GoalClass>& goals, Exec exec = Exec::serial,
                                    GoalGrain grain = GoalGrain::goal_class);

class FilterBreach : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Permitted tester edges at `v`: safe, staying in the filter, and not moving away from
/// every active goal. `active` is indexed by progress goal; empty means all active.
std::vector<std::size_t> allowed_actions(const FilterW& f, const Arena& a, Vertex v,
                                         const std::vector<bool>& active = {});

std::string dump_filter(const FilterW& f);

}  // namespace mut
