// Filtered Monte-Carlo Tree Search over tester decisions.
#pragma once

#include "mut/scenarios.hpp"
#include "mut/winning_set.hpp"

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace mut {

struct SearchParams {
  int rollouts = 100;  // per tester decision
  double c = std::sqrt(2.0);
  int t_max = 0;  // plies; 0 takes the scenario default
  int k_ll = 0;   // live-lock window in tester turns; 0 takes the largest goal depth
  std::uint64_t seed = 1;
  int batch = 1;  // rollouts launched from each selected leaf
  Exec exec = Exec::serial;

  void validate() const;
};

/// Q/N + c sqrt(ln N_parent / N); +inf for an unvisited child.
double ucb1(double q_child, int n_child, int n_parent, double c);

/// Active and shelved goals for live-lock avoidance.
class GoalTracker {
 public:
  GoalTracker() = default;
  GoalTracker(std::size_t goals, int k_ll);

  const std::vector<bool>& active() const { return active_; }
  std::size_t num_active() const;
  int window() const { return k_ll_; }

  /// Records the per-goal distances seen at one tester turn.
  void observe(const std::vector<int>& dist);
  void reset();

 private:
  std::vector<bool> active_;
  std::vector<int> best_;
  std::vector<int> stall_;
  int k_ll_ = 1;
};

enum class Verdict { running, completed, timeout, vacuous, breach };
std::string to_string(Verdict v);

/// One point of a test execution.
struct EpisodeState {
  Vertex base = 0;
  Vertex aux = 0;
  bool goal_reached = false;
  int ply = 0;
  double rho = 0.0;  // robustness at completion
  Verdict verdict = Verdict::running;
  GoalTracker tracker;
};

struct DecisionLog {
  int step = 0;
  int rollouts = 0;
  std::size_t best_edge = 0;
  double mean_value = 0.0;
  int visits = 0;
  std::size_t options = 0;
};

class NoPolicy : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Simulation of tests on one scenario and filter.
class Episode {
 public:
  Episode(const ScenarioSim& sim, const FilterW& filter, const SearchParams& p);

  EpisodeState initial() const;
  int t_max() const { return t_max_; }

  /// Tester options at a tester-turn state, as base edges.
  std::vector<std::size_t> tester_actions(EpisodeState& s) const;
  /// Applies a base edge and settles the verdict.
  void apply(EpisodeState& s, std::size_t base_edge) const;
  /// Random playout to the end of the test.
  EpisodeState playout(EpisodeState s, std::mt19937_64& rng) const;
  /// Normalised reward of a random playout.
  double rollout(const EpisodeState& s, std::mt19937_64& rng) const { return value(playout(s, rng)); }
  double value(const EpisodeState& s) const;
  bool tester_turn(const EpisodeState& s) const;

  const ScenarioSim& sim() const { return sim_; }
  const FilterW& filter() const { return filter_; }

 private:
  void settle(EpisodeState& s) const;
  std::vector<int> goal_dists(Vertex aux) const;

  const ScenarioSim& sim_;
  const FilterW& filter_;
  int t_max_;
  int k_ll_;
};

struct SearchResult {
  std::size_t edge = 0;
  DecisionLog log;
};

/// Runs a fresh tree from a tester-turn state and returns the most visited action.
SearchResult select_action(const Episode& ep, const EpisodeState& root, const SearchParams& p, int decision);

struct EpisodeResult {
  Verdict verdict = Verdict::running;
  std::vector<Vertex> trace;  // base vertices, one per ply
  double rho = 0.0;
  double reward = 0.0;
  std::vector<DecisionLog> decisions;
  long rollouts = 0;
  Verdicts monitor;
};

/// Plays one test: MCTS for the tester, the scenario's system model for the system.
/// Throws NoPolicy before any rollout when the initial state is outside the filter.
EpisodeResult run_episode(const ScenarioSim& sim, const FilterW& filter, const SearchParams& p);

Trace to_trace(const ScenarioSim& sim, const std::vector<Vertex>& base);

}  // namespace mut
