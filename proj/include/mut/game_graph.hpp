// Transition systems, turn-based game graphs and the three-copy auxiliary graph.
#pragma once

#include "mut/formula.hpp"
#include "mut/spec.hpp"

#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace mut {

class GraphError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using Vertex = std::uint32_t;

/// Dense membership mask over vertex ids.
class VertexSet {
 public:
  VertexSet() = default;
  explicit VertexSet(std::size_t n, bool value = false) : bits_(n, value ? 1 : 0) {}

  std::size_t universe() const { return bits_.size(); }
  bool contains(Vertex v) const { return bits_[v] != 0; }
  void insert(Vertex v) { bits_[v] = 1; }
  void erase(Vertex v) { bits_[v] = 0; }
  void set(Vertex v, bool b) { bits_[v] = b ? 1 : 0; }
  std::size_t count() const;
  bool empty() const { return count() == 0; }
  std::vector<Vertex> members() const;
  bool subset_of(const VertexSet& o) const;

  VertexSet& operator|=(const VertexSet& o);
  VertexSet& operator&=(const VertexSet& o);
  VertexSet& operator-=(const VertexSet& o);
  friend VertexSet operator|(VertexSet a, const VertexSet& b) { return a |= b; }
  friend VertexSet operator&(VertexSet a, const VertexSet& b) { return a &= b; }
  friend VertexSet operator-(VertexSet a, const VertexSet& b) { return a -= b; }
  VertexSet complement() const;
  friend bool operator==(const VertexSet&, const VertexSet&) = default;

  std::uint8_t* data() { return bits_.data(); }
  const std::uint8_t* data() const { return bits_.data(); }

 private:
  std::vector<std::uint8_t> bits_;
};

enum class Player : std::uint8_t { system = 0, tester = 1 };

/// Compressed adjacency with reverse index. Edge ids follow out-adjacency order.
class Digraph {
 public:
  Digraph() = default;
  Digraph(std::vector<Player> owner, const std::vector<std::pair<Vertex, Vertex>>& edges);

  std::size_t num_vertices() const { return owner_.size(); }
  std::size_t num_edges() const { return out_dst_.size(); }
  Player owner(Vertex v) const { return owner_[v]; }

  std::size_t out_begin(Vertex v) const { return out_off_[v]; }
  std::size_t out_end(Vertex v) const { return out_off_[v + 1]; }
  std::size_t out_degree(Vertex v) const { return out_end(v) - out_begin(v); }
  Vertex edge_dst(std::size_t e) const { return out_dst_[e]; }
  Vertex edge_src(std::size_t e) const { return edge_src_[e]; }

  std::size_t in_begin(Vertex v) const { return in_off_[v]; }
  std::size_t in_end(Vertex v) const { return in_off_[v + 1]; }
  /// Edge id of the k-th incoming edge, k in [in_begin, in_end).
  std::size_t in_edge(std::size_t k) const { return in_edge_[k]; }

 private:
  std::vector<Player> owner_;
  std::vector<std::size_t> out_off_, in_off_;
  std::vector<Vertex> out_dst_, edge_src_;
  std::vector<std::size_t> in_edge_;
};

// ---------------------------------------------------------------------------

struct TransitionSystem {
  SchemaPtr schema;
  std::vector<std::vector<int>> states;
  std::vector<std::vector<std::uint32_t>> succ;

  std::size_t size() const { return states.size(); }
  std::size_t num_transitions() const;
  StateValuation valuation(std::uint32_t i) const { return StateValuation(schema, states[i]); }
  std::optional<std::uint32_t> find(const std::vector<int>& values) const;
  void check() const;  // every endpoint declared; throws GraphError

  /// All in-domain valuations satisfying `invariant`; s -> s' whenever `rule` holds on the pair.
  static TransitionSystem from_formulas(SchemaPtr schema, const PropFormula& invariant, const PropFormula& rule);
  using SuccessorFn = std::function<std::vector<std::vector<int>>(const std::vector<int>&)>;
  /// States satisfying `invariant`; successors from `next`, dropping any outside the state set.
  static TransitionSystem from_function(SchemaPtr schema, const PropFormula& invariant, const SuccessorFn& next);

 private:
  mutable std::map<std::vector<int>, std::uint32_t> index_;
};

/// Both players' systems plus the interleaved product.
struct ProductTS {
  TransitionSystem sys;
  TransitionSystem test;
  TransitionSystem joint;  // interleaving: exactly one component moves per transition
};

ProductTS product(const TransitionSystem& sys, const TransitionSystem& test);
/// Lock-step product used to assemble a merged tester environment from unit testers.
TransitionSystem synchronous_product(const TransitionSystem& a, const TransitionSystem& b);
/// Keeps states satisfying `keep` and transitions between kept states.
TransitionSystem restrict(const TransitionSystem& ts, const PropFormula& keep);

/// Vertex id = turn * (|Q_sys| * |Q_test|) + sys_index * |Q_test| + test_index; turn 0 is the system.
class GameGraph {
 public:
  GameGraph() = default;
  explicit GameGraph(std::shared_ptr<const ProductTS> prod);

  const ProductTS& product() const { return *prod_; }
  const Digraph& graph() const { return graph_; }
  const SchemaPtr& schema() const { return schema_; }
  std::size_t num_vertices() const { return graph_.num_vertices(); }
  std::size_t num_states() const { return nq_; }

  Player turn(Vertex v) const { return v < nq_ ? Player::system : Player::tester; }
  std::uint32_t sys_state(Vertex v) const { return static_cast<std::uint32_t>((v % nq_) / ntest_); }
  std::uint32_t test_state(Vertex v) const { return static_cast<std::uint32_t>((v % nq_) % ntest_); }
  Vertex vertex(Player turn, std::uint32_t s, std::uint32_t t) const {
    return static_cast<Vertex>((turn == Player::system ? 0 : nq_) + s * ntest_ + t);
  }
  std::vector<int> values(Vertex v) const;
  StateValuation valuation(Vertex v) const { return StateValuation(schema_, values(v)); }

  VertexSet satisfying(const PropFormula& f) const;
  /// Per-edge truth of a primed formula over (source state, target state).
  std::vector<std::uint8_t> edges_satisfying(const PropFormula& f) const;

 private:
  std::shared_ptr<const ProductTS> prod_;
  SchemaPtr schema_;
  std::size_t nsys_ = 0, ntest_ = 0, nq_ = 0;
  Digraph graph_;
};

GameGraph build_game_graph(std::shared_ptr<const ProductTS> prod);

inline constexpr int kInfDist = std::numeric_limits<int>::max();

struct PartialOrder {
  VertexSet goal;
  std::vector<int> dist;                  // kInfDist when the goal is unreachable
  std::vector<std::vector<Vertex>> layers;  // layers[k] = vertices at distance k

  int depth() const { return static_cast<int>(layers.size()) - 1; }
};

/// Backward breadth-first layering. Only edges with `edge_ok[e]` (when given) are used,
/// and vertices in `blocked` are never expanded through.
PartialOrder partial_order(const Digraph& g, const VertexSet& goal, const std::vector<std::uint8_t>* edge_ok = nullptr,
                           const VertexSet* blocked = nullptr);
PartialOrder partial_order(const GameGraph& g, const PropFormula& goal);

class AuxGraph {
 public:
  const GameGraph& base() const { return *base_; }
  const Digraph& graph() const { return graph_; }
  std::size_t num_vertices() const { return graph_.num_vertices(); }
  std::size_t base_size() const { return nb_; }
  int copy(Vertex v) const { return static_cast<int>(v / nb_); }
  Vertex base_vertex(Vertex v) const { return static_cast<Vertex>(v % nb_); }
  Vertex lift(Vertex base, int copy) const { return static_cast<Vertex>(copy * nb_ + base); }
  /// Base edge id each aux edge was derived from.
  std::size_t base_edge(std::size_t e) const { return base_edge_[e]; }

  const VertexSet& psi1() const { return psi1_; }  // over aux vertices, all copies
  const VertexSet& psi2() const { return psi2_; }
  const VertexSet& merged_goal() const { return merged_goal_; }

  StateValuation valuation(Vertex v) const;  // base valuation plus aux_copy
  VertexSet satisfying(const PropFormula& f) const;  // f may mention aux_copy
  std::vector<std::uint8_t> edges_satisfying(const PropFormula& f) const;

  friend AuxGraph build_aux_graph(std::shared_ptr<const GameGraph> g, const PropFormula& psi1,
                                  const PropFormula& psi2);

 private:
  std::shared_ptr<const GameGraph> base_;
  std::size_t nb_ = 0;
  Digraph graph_;
  std::vector<std::size_t> base_edge_;
  VertexSet psi1_, psi2_, merged_goal_;
  SchemaPtr schema_;
};

AuxGraph build_aux_graph(std::shared_ptr<const GameGraph> g, const PropFormula& psi1, const PropFormula& psi2);

/// Is there an edge from one goal set into the finite, non-goal part of the other's order?
bool check_assumption1(const AuxGraph& aux, const PartialOrder& p1, const PartialOrder& p2);

/// Whether the two unit tests look alike to the system: their goals, projected onto
/// system states, coincide, and no bounded safe execution from an initial vertex
/// separates the projected goal monitors.
bool needs_temporal_constraint(const TestContract& c1, const TestContract& c2, const GameGraph& g, int depth = 12);

std::string dump_graph(const GameGraph& g);
std::string dump_graph(const AuxGraph& g);
std::string dump_bindings(const GameGraph& g);
std::string dump_bindings(const AuxGraph& g);

}  // namespace mut
