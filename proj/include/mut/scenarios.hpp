// Gridworld benchmarks: lane change and unprotected left turn.
#pragma once

#include "mut/game_graph.hpp"
#include "mut/spec.hpp"
#include "mut/winning_set.hpp"

#include <functional>
#include <map>
#include <memory>
#include <random>
#include <string>
#include <vector>

namespace mut {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// `key = value` lines with `#` comments, keeping line numbers for diagnostics.
struct KeyValues {
  struct Entry {
    std::string value;
    int line = 0;
    bool used = false;
  };
  std::map<std::string, Entry> entries;

  static KeyValues parse(std::string_view text);
  bool has(const std::string& key) const { return entries.count(key) != 0; }
  std::string str(const std::string& key, const std::string& fallback);
  int integer(const std::string& key, int fallback);
  double real(const std::string& key, double fallback);
  std::vector<std::string> unused() const;
};

struct Cell {
  int y = 0;  // row, growing south
  int z = 0;  // column, growing east
  friend bool operator==(const Cell&, const Cell&) = default;
};

struct LaneChangeConfig {
  int length = 5;
  int sys_x = 1;  // lane 1
  int tester1_x = 2;  // lane 2
  int tester2_x = 4;  // lane 2
  int gap = 2;        // x2 - x1 at the merged goal
  int t_max = 0;      // plies; 0 picks 16 * length
};

struct LeftTurnConfig {
  Cell sys_start{7, 4};
  Cell car_start{0, 3};
  int ped_start = 0;
  Cell goal{0, 3};
  Cell wait{4, 4};
  std::vector<Cell> car_trigger{{0, 3}, {1, 3}, {2, 3}, {3, 3}};
  std::vector<int> ped_trigger{1, 2, 3, 4, 5};
  int green = 10;
  int yellow = 3;
  int red = 10;
  int t_max = 0;  // plies; 0 picks 80
};

LaneChangeConfig lane_change_config(KeyValues& kv);
LeftTurnConfig left_turn_config(KeyValues& kv);
std::string to_config_text(const LaneChangeConfig& c);
std::string to_config_text(const LeftTurnConfig& c);

struct ScenarioSim {
  std::string id;           // lane_change | left_turn
  std::string config_text;  // canonical config, part of the run report
  TestContract unit1, unit2;
  MergedSpec spec;
  std::shared_ptr<const GameGraph> game;
  std::shared_ptr<const AuxGraph> aux;
  Arena base_arena;
  Arena aux_arena;
  VertexSet system_region;  // base vertices from which the system can still reach its goal
  Vertex initial = 0;       // base system-turn vertex
  int t_max = 0;
  double best_rho = 1.0;
  bool maximize = true;
  std::map<std::string, double> build_ms;

  std::function<bool(const std::vector<int>&)> complete;
  std::function<double(const std::vector<int>&)> robustness;
  std::function<std::string(const std::vector<int>&)> render;
  std::function<std::optional<int>(const std::vector<int>&)> light;

  /// Normalised score in [0, 1] of a completed test, higher is harder for the system.
  double reward(double rho) const;
  const Schema& schema() const { return *game->schema(); }
};

ScenarioSim build_lane_change(const LaneChangeConfig& cfg);
ScenarioSim build_left_turn(const LeftTurnConfig& cfg);
/// Builds from a parsed config file; requires `version = 1` and `scenario = ...`.
ScenarioSim build_scenario(KeyValues& kv);

/// Replaces the merged test by unit `unit` (1 or 2) merged with itself, for baseline runs.
void focus_unit(ScenarioSim& sim, int unit);

/// Admissible system moves at a base system vertex, preferring those that keep the
/// system able to reach its goal. Empty when the system has no admissible move.
std::vector<std::size_t> system_moves(const ScenarioSim& sim, Vertex base_v);
std::optional<std::size_t> system_model_step(const ScenarioSim& sim, Vertex base_v, std::mt19937_64& rng);

struct Verdicts {
  MergedVerdicts spec;
  bool coverage = false;  // merged (refined where applicable) and the assumption
};

Verdicts monitor(const ScenarioSim& sim, const Trace& t);

}  // namespace mut
