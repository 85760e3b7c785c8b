// Experiment harness behind the command-line verbs.
#pragma once

#include "mut/policy_search.hpp"
#include "mut/scenarios.hpp"
#include "mut/trace.hpp"

#include <string>
#include <vector>

namespace mut {

enum ExitCode : int { kExitOk = 0, kExitVacuous = 10, kExitNoPolicy = 20, kExitConfig = 30 };

std::string config_hash(const std::string& text);  // FNV-1a, 16 hex digits

struct RunOptions {
  std::string config_text;
  SearchParams params;
  int unit = 0;               // run a single unit test instead of the merged one
  bool with_timings = false;  // wall-clock numbers make the report non-reproducible
};

struct RunOutcome {
  int exit_code = kExitOk;
  std::string message;
  std::string report;  // JSON, empty on config errors
  std::string trace;   // line-delimited JSON, empty when no policy was returned
  long rollouts = 0;
};

RunOutcome cmd_run(const RunOptions& opt);

struct FilterBenchRow {
  int length = 0;
  std::string mode;  // receding | monolithic | monolithic_vertex
  std::string exec;  // serial | parallel
  double ms = 0.0;
  std::size_t size = 0;
  bool dnf = false;
};

/// Times filter synthesis per track length; each cell runs in a child process that is
/// killed after `timeout_s` seconds and recorded as DNF.
std::vector<FilterBenchRow> bench_filter(const std::vector<int>& lengths, const std::vector<std::string>& modes,
                                         Exec exec, double timeout_s);
std::string to_csv(const std::vector<FilterBenchRow>& rows);

struct MctsBenchRow {
  int length = 0;
  int rollouts = 0;
  int runs = 0;
  double mean = 0, min = 0, max = 0, stddev = 0;
  std::vector<double> rewards;
};

std::vector<MctsBenchRow> bench_mcts(const std::vector<int>& lengths, const std::vector<int>& rollouts, int runs,
                                     std::uint64_t seed, Exec exec = Exec::serial);
std::string to_csv(const std::vector<MctsBenchRow>& rows);
/// One line per length, one glyph per rollout budget.
std::string sparklines(const std::vector<MctsBenchRow>& rows);

struct CoverageMatrix {
  std::vector<std::string> traces;
  std::vector<std::string> specs;
  std::vector<std::vector<bool>> covered;  // [trace][spec]
  int n = 0;           // number of specs
  int n_prime = 0;     // executions that cover at least one spec
  int min_cover = 0;   // fewest executions covering every coverable spec
  std::vector<std::string> uncovered;
  std::string to_text() const;
};

/// Coverage of each unit specification named by the traces' scenarios.
CoverageMatrix cmd_coverage(const std::vector<std::string>& names, const std::vector<std::string>& trace_texts);

std::string cmd_dump_graph(const std::string& config_text, bool aux);
std::string cmd_dump_filter(const std::string& config_text);

}  // namespace mut
