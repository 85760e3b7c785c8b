// Acceptance checks: one PASS/FAIL line per criterion.
#include "mut/harness.hpp"
#include "oracles.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>

using namespace mut;

namespace {

using Clock = std::chrono::steady_clock;

double secs_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

ScenarioSim lane(int length) {
  LaneChangeConfig c;
  c.length = length;
  return build_lane_change(c);
}

// 1 ------------------------------------------------------------------------

Outcome soundness() {
  const auto t0 = Clock::now();
  const ScenarioSim sim = lane(5);
  const FilterW f = synthesize_filter(*sim.aux, sim.spec);
  SearchParams p;
  Episode ep(sim, f, p);
  long leaves = 0, violations = 0, departures = 0;
  struct Monitors {
    GR1Monitor a, g1, g2;
    void step(const StateValuation& v) {
      a.step(v);
      g1.step(v);
      g2.step(v);
    }
    bool ok() const { return a.safety_ok() && g1.safety_ok() && g2.safety_ok(); }
  };
  std::vector<Vertex> path;
  std::function<void(EpisodeState, Monitors)> walk = [&](EpisodeState s, Monitors m) {
    if (!s.goal_reached && !f.contains(s.aux)) ++departures;
    if (!m.ok()) ++violations;
    if (s.verdict != Verdict::running || s.ply == 8) {
      ++leaves;
      if (s.verdict == Verdict::breach || s.verdict == Verdict::vacuous || s.verdict == Verdict::timeout) ++violations;
      // Completed prefixes must satisfy the whole merged monitor, recurrences included.
      if (s.verdict == Verdict::completed && !monitor(sim, to_trace(sim, path)).spec.merged) ++violations;
      return;
    }
    std::vector<std::size_t> moves = ep.tester_turn(s) ? ep.tester_actions(s) : system_moves(sim, s.base);
    if (moves.empty()) ++violations;
    for (std::size_t e : moves) {
      EpisodeState n = s;
      ep.apply(n, e);
      Monitors nm = m;
      nm.step(sim.game->valuation(n.base));
      path.push_back(n.base);
      walk(n, nm);
      path.pop_back();
    }
  };
  EpisodeState s0 = ep.initial();
  Monitors m0{GR1Monitor(&sim.spec.assumption), GR1Monitor(&sim.unit1.guarantee), GR1Monitor(&sim.unit2.guarantee)};
  m0.step(sim.game->valuation(s0.base));
  path.push_back(s0.base);
  walk(s0, m0);
  const double t = secs_since(t0);
  return {violations == 0 && departures == 0 && leaves > 0 && t < 120,
          fmt("%ld executions to depth 8, %ld monitor violations, %ld departures from W, %.1f s (limit 120 s)", leaves,
              violations, departures, t)};
}

// 2 ------------------------------------------------------------------------

Outcome oracle_equivalence() {
  long graphs = 0, attractor_diff = 0, persist_diff = 0;
  for (int n = 1; n <= 3; ++n) {
    const int ne = n * n;
    for (int owners = 0; owners < (1 << n); ++owners)
      for (int emask = 0; emask < (1 << ne); ++emask)
        for (int tmask = 0; tmask < (1 << n); ++tmask)
          for (int smask = 0; smask < (1 << n); ++smask) {
            std::vector<Player> owner(n);
            for (int i = 0; i < n; ++i) owner[i] = (owners >> i) & 1 ? Player::tester : Player::system;
            std::vector<std::pair<Vertex, Vertex>> edges;
            for (int k = 0; k < ne; ++k)
              if ((emask >> k) & 1) edges.emplace_back(k / n, k % n);
            oracle::SmallGame g = oracle::make_game(owner, edges);
            for (int i = 0; i < n; ++i) {
              g.target.set(i, (tmask >> i) & 1);
              g.safe.set(i, (smask >> i) & 1);
              g.progress.set(i, ((owners + emask + i) & 1) != 0);
            }
            const Arena a = g.arena();
            const VertexSet all(n, true);
            attractor_diff += attractor(a, g.target, all) != oracle::backward_induction(g);
            persist_diff += solve_reach_or_persist(a, g.target, all) != oracle::positional_brute_force(g, all);
            ++graphs;
          }
  }
  const long exhaustive = graphs;
  std::mt19937 rng(6);
  for (int trial = 0; trial < 20000; ++trial) {
    const int n = 4 + trial % 3;
    oracle::SmallGame g = oracle::random_game(rng, n, 0.35);
    const Arena a = g.arena();
    VertexSet region(n);
    for (int v = 0; v < n; ++v) region.set(v, rng() % 5 != 0);
    attractor_diff += attractor(a, g.target, VertexSet(n, true)) != oracle::backward_induction(g);
    persist_diff += solve_reach_or_persist(a, g.target, region) != oracle::positional_brute_force(g, region);
    ++graphs;
  }
  return {attractor_diff == 0 && persist_diff == 0 && graphs >= 1000,
          fmt("%ld graphs (%ld exhaustive up to 3 vertices, %ld random with 4 to 6), %ld attractor and %ld "
              "reach-or-persist mismatches",
              graphs, exhaustive, graphs - exhaustive, attractor_diff, persist_diff)};
}

// 3 ------------------------------------------------------------------------

// Filtered execution with a uniformly random tester.
std::vector<Vertex> random_execution(const Episode& ep, std::mt19937_64& rng) {
  EpisodeState s = ep.initial();
  std::vector<Vertex> path{s.base};
  while (s.verdict == Verdict::running) {
    if (ep.tester_turn(s)) {
      auto acts = ep.tester_actions(s);
      if (acts.empty()) break;
      ep.apply(s, acts[std::uniform_int_distribution<std::size_t>(0, acts.size() - 1)(rng)]);
    } else {
      auto e = system_model_step(ep.sim(), s.base, rng);
      if (!e) break;
      ep.apply(s, *e);
    }
    path.push_back(s.base);
  }
  return path;
}

Outcome merged_implies_units() {
  long runs = 0, premise = 0, counter = 0;
  std::vector<ScenarioSim> sims;
  sims.push_back(lane(5));
  sims.push_back(build_left_turn({}));
  for (const ScenarioSim& sim : sims) {
    const FilterW f = synthesize_filter(*sim.aux, sim.spec);
    SearchParams p;
    Episode ep(sim, f, p);
    for (std::uint64_t seed = 0; seed < 5000; ++seed) {
      std::mt19937_64 rng(seed * 2 + (sim.id == "left_turn"));
      const Verdicts v = monitor(sim, to_trace(sim, random_execution(ep, rng)));
      ++runs;
      if (!(v.spec.assumption && v.spec.merged)) continue;
      ++premise;
      counter += !(v.spec.unit1 && v.spec.unit2);
    }
  }
  return {counter == 0 && runs == 10000,
          fmt("%ld executions, %ld with assumption and merged monitors accepting, %ld counterexamples", runs, premise,
              counter)};
}

// 4 ------------------------------------------------------------------------

Outcome refinement() {
  const ScenarioSim sim = build_left_turn({});
  const FilterW f = synthesize_filter(*sim.aux, sim.spec);
  int both = 0, completed = 0;
  const int n = 50;
  for (int seed = 0; seed < n; ++seed) {
    SearchParams p;
    p.seed = static_cast<std::uint64_t>(seed);
    const EpisodeResult r = run_episode(sim, f, p);
    completed += r.verdict == Verdict::completed;
    both += r.monitor.spec.only_t1_step && r.monitor.spec.only_t2_step;
  }
  return {both == n, fmt("%d of %d left turn runs wait for the car alone and for the pedestrian alone (%d completed)",
                         both, n, completed)};
}

// 5 ------------------------------------------------------------------------

Outcome convergence() {
  const auto t0 = Clock::now();
  const std::vector<int> budgets{1, 10, 50, 200};
  const auto rows = bench_mcts({5, 10, 15}, budgets, 50, 1);
  bool pass = true;
  std::string detail;
  for (std::size_t k = 0; k < rows.size(); k += budgets.size()) {
    const auto& lo = rows[k];
    const auto& hi = rows[k + budgets.size() - 1];
    pass = pass && hi.mean >= 0.95 && hi.mean >= lo.mean;
    detail += fmt("L=%d mean", lo.length);
    for (std::size_t b = 0; b < budgets.size(); ++b) detail += fmt(" %.3f", rows[k + b].mean);
    detail += "; ";
  }
  const double t = secs_since(t0);
  pass = pass && t < 900;
  return {pass, detail + fmt("rollouts 1/10/50/200, 50 runs, %.0f s (limit 900 s)", t)};
}

// 6 ------------------------------------------------------------------------

Outcome scalability() {
  const double budget = 600;
  const std::vector<int> lengths{5, 10, 15};
  const auto rec = bench_filter(lengths, {"receding"}, Exec::serial, budget);
  const auto mono = bench_filter(lengths, {"monolithic", "monolithic_vertex"}, Exec::serial, budget);
  bool receding_ok = true, mono_dnf = false;
  std::string detail = "receding";
  for (const auto& r : rec) {
    receding_ok = receding_ok && !r.dnf;
    detail += r.dnf ? fmt(" L=%d DNF", r.length) : fmt(" L=%d %.1f ms", r.length, r.ms);
  }
  for (const auto& r : mono) {
    if (r.mode != "monolithic") continue;
    mono_dnf = mono_dnf || r.dnf;
  }
  for (const char* mode : {"monolithic", "monolithic_vertex"}) {
    detail += std::string("; ") + mode;
    for (const auto& r : mono)
      if (r.mode == mode) detail += r.dnf ? fmt(" L=%d DNF", r.length) : fmt(" L=%d %.1f ms", r.length, r.ms);
  }
  return {receding_ok && mono_dnf, detail + fmt("; budget %.0f s per cell", budget)};
}

// 7 ------------------------------------------------------------------------

Outcome coverage() {
  RunOptions o;
  o.config_text = to_config_text(LaneChangeConfig{});
  o.params.seed = 0;
  const RunOutcome merged = cmd_run(o);
  std::vector<std::string> units;
  for (int u = 1; u <= 2; ++u) {
    RunOptions ou = o;
    ou.unit = u;
    units.push_back(cmd_run(ou).trace);
  }
  const CoverageMatrix m = cmd_coverage({"merged"}, {merged.trace});
  const CoverageMatrix b = cmd_coverage({"unit1", "unit2"}, units);
  const bool merged_ok = m.n == 2 && m.n_prime == 1 && m.uncovered.empty();
  const bool base_ok = b.n == 2 && b.n_prime == 2 && b.uncovered.empty();
  return {merged_ok && base_ok,
          fmt("merged trace covers %d of %d unit specs with N' = %d; unit traces cover %d of %d with N' = %d",
              m.n - static_cast<int>(m.uncovered.size()), m.n, m.n_prime, b.n - static_cast<int>(b.uncovered.size()),
              b.n, b.n_prime)};
}

// 8 ------------------------------------------------------------------------

Outcome degenerate() {
  RunOptions o;
  o.config_text = "version = 1\nscenario = lane_change\nlength = 5\nsys_x = 1\ntester1_x = 1\ntester2_x = 4\ngap = 4\n";
  o.params.seed = 0;
  const RunOutcome outside = cmd_run(o);

  const ScenarioSim sim = lane(5);
  FilterW empty;
  empty.union_set = VertexSet(sim.aux->num_vertices());
  bool empty_no_policy = false;
  try {
    run_episode(sim, empty, {});
  } catch (const NoPolicy&) {
    empty_no_policy = true;  // thrown before any rollout
  }
  FilterW hollow = synthesize_filter(*sim.aux, sim.spec);
  hollow.union_set = VertexSet(sim.aux->num_vertices());
  bool hollow_no_policy = false;
  try {
    run_episode(sim, hollow, {});
  } catch (const NoPolicy&) {
    hollow_no_policy = true;
  }
  const bool pass = outside.exit_code == kExitNoPolicy && outside.rollouts == 0 && empty_no_policy && hollow_no_policy;
  return {pass, fmt("initial state outside W: exit %d with %ld rollouts; empty W: %s", outside.exit_code,
                    outside.rollouts, empty_no_policy && hollow_no_policy ? "no policy" : "a policy was returned")};
}

// 9 ------------------------------------------------------------------------

std::string capture(const std::string& cmd, int& status) {
  std::string out;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) {
    status = -1;
    return out;
  }
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, p)) > 0) out.append(buf, n);
  status = pclose(p);
  return out;
}

Outcome determinism(const std::string& cli, const std::string& config) {
  std::string outs[2];
  int status[2];
  for (int k = 0; k < 2; ++k) {
    const std::string trace = "acceptance_trace_" + std::to_string(k) + ".jsonl";
    const std::string report =
        capture(cli + " run " + config + " --seed 7 --rollouts 100 --trace " + trace + " 2>/dev/null", status[k]);
    int st = 0;
    outs[k] = report + capture("cat " + trace, st);
    std::remove(trace.c_str());
  }
  const bool same = outs[0] == outs[1] && !outs[0].empty();
  return {same && status[0] == 0 && status[1] == 0,
          fmt("two invocations of `run --seed 7`: %s (%zu bytes of report and trace)",
              same ? "byte-identical" : "outputs differ", outs[0].size())};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance checks"};
  bool strict = false;
  std::vector<int> only;
  std::string cli = MUT_CLI_PATH, config = MUT_CONFIG_DIR "/lane_change_L5.cfg";
  app.add_flag("--strict", strict, "exit non-zero when a criterion fails");
  app.add_option("--only", only, "criteria to run")->delimiter(',');
  app.add_option("--cli", cli, "path of the mut executable")->capture_default_str();
  app.add_option("--config", config, "config used by the determinism check")->capture_default_str();
  CLI11_PARSE(app, argc, argv);

  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> all{
      {1, "filter soundness", soundness},
      {2, "oracle equivalence", oracle_equivalence},
      {3, "merged acceptance implies unit acceptance", merged_implies_units},
      {4, "left turn waits separately", refinement},
      {5, "search convergence", convergence},
      {6, "filter scalability", scalability},
      {7, "coverage", coverage},
      {8, "no policy on degenerate input", degenerate},
      {9, "determinism", [&] { return determinism(cli, config); }},
  };
  const std::set<int> pick(only.begin(), only.end());
  int failed = 0;
  for (const auto& c : all) {
    if (!pick.empty() && !pick.count(c.id)) continue;
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS " : "FAIL ") << c.id << " " << c.name << ": " << o.detail << std::endl;
  }
  return strict && failed ? 1 : 0;
}
