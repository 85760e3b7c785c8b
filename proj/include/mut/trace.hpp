// Line-delimited JSON test traces: a header, one record per ply, and a verdict summary.
#pragma once

#include "mut/policy_search.hpp"
#include "mut/scenarios.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace mut {

struct TraceStep {
  int step = 0;
  Player turn = Player::system;           // player to move in this state
  std::vector<int> values;                // in header variable order
  std::optional<std::size_t> action;      // base edge that led here
  std::optional<int> light;
};

struct TraceFile {
  std::string scenario;
  std::string config_text;
  std::uint64_t seed = 0;
  int unit = 0;  // 0 for the merged test, else the single unit that was run
  std::vector<std::string> vars;
  std::vector<TraceStep> steps;
  nlohmann::json summary;
};

std::string write_trace(const ScenarioSim& sim, const EpisodeResult& r, std::uint64_t seed, int unit = 0);
/// Throws ParseError carrying the offending line.
TraceFile parse_trace(std::string_view text);
std::string print_trace(const TraceFile& t);

/// Rebuilds the scenario named in the header.
ScenarioSim scenario_of(const TraceFile& t);
Trace valuations(const ScenarioSim& sim, const TraceFile& t);
/// One ASCII frame per step.
std::string render_trace(const ScenarioSim& sim, const TraceFile& t);

}  // namespace mut
