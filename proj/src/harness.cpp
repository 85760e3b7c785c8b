#include "mut/harness.hpp"

#include <json.hpp>

#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <bit>
#include <cerrno>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

namespace mut {

using ojson = nlohmann::ordered_json;

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

const char* exec_name(Exec e) { return e == Exec::parallel ? "parallel" : "serial"; }

ScenarioSim build_from_text(const std::string& text, int unit) {
  KeyValues kv = KeyValues::parse(text);
  ScenarioSim sim = build_scenario(kv);
  auto left = kv.unused();
  if (!left.empty()) throw ConfigError("unknown key '" + left.front() + "'");
  if (unit != 0) focus_unit(sim, unit);
  return sim;
}

ojson params_json(const SearchParams& p, const Episode& ep) {
  ojson j;
  j["rollouts"] = p.rollouts;
  j["c"] = p.c;
  j["t_max"] = ep.t_max();
  j["k_ll"] = p.k_ll;
  j["batch"] = p.batch;
  j["exec"] = exec_name(p.exec);
  return j;
}

ojson filter_json(const FilterW& f, const ScenarioSim& sim) {
  ojson j;
  j["size"] = f.size();
  j["outer_iterations"] = f.outer_iterations;
  j["progress_goals"] = f.num_progress_goals();
  j["per_vertex_progress"] = f.per_vertex_progress();
  j["contains_initial"] = f.contains(sim.aux->lift(sim.initial, 0));
  ojson goals = ojson::array();
  for (std::size_t g = 0; g < f.goals.size(); ++g) {
    ojson gj;
    gj["name"] = f.goals[g].name;
    gj["vertices"] = f.goals[g].vertices.count();
    gj["depth"] = f.goals[g].jmax();
    ojson layers = ojson::array();
    for (std::size_t k = 1; k < f.win[g].size(); ++k) layers.push_back(f.win[g][k].size());
    gj["layers"] = layers;
    goals.push_back(gj);
  }
  j["goals"] = goals;
  return j;
}

ojson monitors_json(const ScenarioSim& sim, const Verdicts& v) {
  ojson j;
  j["assumption"] = v.spec.assumption;
  j["unit1"] = v.spec.unit1;
  j["unit2"] = v.spec.unit2;
  j["merged"] = v.spec.merged;
  if (sim.spec.temporal_refinement) j["refined"] = v.spec.refined;
  j["coverage"] = v.coverage;
  return j;
}

}  // namespace

std::string config_hash(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

RunOutcome cmd_run(const RunOptions& opt) {
  RunOutcome out;
  std::map<std::string, double> timings;
  auto t0 = Clock::now();
  std::optional<ScenarioSim> sim;
  try {
    opt.params.validate();
    if (opt.unit < 0 || opt.unit > 2) throw ConfigError("unit must be 0, 1 or 2");
    sim.emplace(build_from_text(opt.config_text, opt.unit));
  } catch (const ParseError& e) {
    out.exit_code = kExitConfig;
    out.message = std::string("config error: ") + e.what();
    return out;
  } catch (const ConfigError& e) {
    out.exit_code = kExitConfig;
    out.message = std::string("config error: ") + e.what();
    return out;
  } catch (const std::invalid_argument& e) {
    out.exit_code = kExitConfig;
    out.message = std::string("invalid parameter: ") + e.what();
    return out;
  }
  timings["build"] = ms_since(t0);
  for (const auto& [k, v] : sim->build_ms) timings["build." + k] = v;

  ojson rep;
  rep["scenario"] = sim->id;
  rep["config_hash"] = config_hash(sim->config_text);
  rep["config"] = sim->config_text;
  rep["seed"] = opt.params.seed;
  rep["unit"] = opt.unit;
  rep["graph"] = {{"base_vertices", sim->game->num_vertices()},
                  {"base_edges", sim->game->graph().num_edges()},
                  {"aux_vertices", sim->aux->num_vertices()},
                  {"temporal_refinement", sim->spec.temporal_refinement.has_value()}};

  auto finish = [&](int code, const std::string& status) {
    out.exit_code = code;
    rep["status"] = status;
    if (!out.message.empty()) rep["message"] = out.message;
    if (opt.with_timings) {
      ojson tj;
      for (const auto& [k, v] : timings) tj[k] = v;
      rep["timings_ms"] = tj;
    }
    out.report = rep.dump(2) + "\n";
    return out;
  };

  FilterW filter;
  t0 = Clock::now();
  try {
    FilterOptions fo;
    fo.exec = opt.params.exec;
    filter = synthesize_filter(*sim->aux, sim->spec, fo);
  } catch (const SpecError& e) {
    out.message = std::string("no policy: ") + e.what();
    return finish(kExitNoPolicy, "no_policy");
  }
  timings["filter"] = ms_since(t0);
  rep["filter"] = filter_json(filter, *sim);

  EpisodeResult r;
  t0 = Clock::now();
  try {
    r = run_episode(*sim, filter, opt.params);
  } catch (const NoPolicy& e) {
    out.message = std::string("no policy: ") + e.what();
    rep["rollouts"] = 0;
    return finish(kExitNoPolicy, "no_policy");
  }
  timings["search"] = ms_since(t0);
  out.rollouts = r.rollouts;
  Episode ep(*sim, filter, opt.params);
  rep["params"] = params_json(opt.params, ep);
  rep["verdict"] = to_string(r.verdict);
  rep["rho"] = r.rho;
  rep["reward"] = r.reward;
  rep["rollouts"] = r.rollouts;
  rep["plies"] = static_cast<int>(r.trace.size()) - 1;
  rep["monitors"] = monitors_json(*sim, r.monitor);
  ojson tel = ojson::array();
  for (const auto& d : r.decisions)
    tel.push_back({{"step", d.step},
                   {"rollouts", d.rollouts},
                   {"best_edge", d.best_edge},
                   {"mean_value", d.mean_value},
                   {"visits", d.visits},
                   {"options", d.options}});
  rep["telemetry"] = tel;
  ojson states = ojson::array();
  for (Vertex v : r.trace) states.push_back(sim->game->values(v));
  rep["vars"] = ojson::array();
  for (const auto& v : sim->schema().vars()) rep["vars"].push_back(v.name);
  rep["states"] = states;
  out.trace = write_trace(*sim, r, opt.params.seed, opt.unit);

  if (r.verdict == Verdict::breach) {
    out.message = "filter breach";
    return finish(kExitNoPolicy, "breach");
  }
  if (r.verdict == Verdict::completed && r.monitor.coverage) return finish(kExitOk, "ok");
  out.message = r.verdict == Verdict::completed ? "test completed without covering its specification"
                                                : "test ended as " + to_string(r.verdict);
  return finish(kExitVacuous, "not_covered");
}

// ---------------------------------------------------------------------------

namespace {

// Runs one benchmark cell in this process: writes "ms size" to fd.
void filter_cell(int length, const std::string& mode, Exec exec, int fd) {
  LaneChangeConfig c;
  c.length = length;
  ScenarioSim sim = build_lane_change(c);
  FilterOptions fo;
  fo.exec = exec;
  auto t0 = Clock::now();
  std::size_t size = 0;
  if (mode == "receding") {
    size = synthesize_filter(sim.aux_arena, goal_classes(*sim.aux, sim.aux_arena), fo).size();
  } else {
    const GoalGrain grain = mode == "monolithic" ? GoalGrain::goal_class : GoalGrain::vertex;
    size = monolithic_winning_region(sim.aux_arena, goal_classes(*sim.aux, sim.aux_arena), exec, grain).count();
  }
  const double ms = ms_since(t0);
  char buf[64];
  const int n = std::snprintf(buf, sizeof buf, "%.6f %zu\n", ms, size);
  if (write(fd, buf, n) != n) _exit(2);
}

}  // namespace

std::vector<FilterBenchRow> bench_filter(const std::vector<int>& lengths, const std::vector<std::string>& modes,
                                         Exec exec, double timeout_s) {
  for (const auto& m : modes)
    if (m != "receding" && m != "monolithic" && m != "monolithic_vertex") throw std::invalid_argument("unknown filter mode '" + m + "'");
  std::vector<FilterBenchRow> rows;
  for (int length : lengths) {
    for (const auto& mode : modes) {
      FilterBenchRow row{length, mode, exec_name(exec), 0.0, 0, true};
      int fds[2];
      if (pipe(fds) != 0) throw std::runtime_error("pipe failed");
      std::fflush(nullptr);
      const pid_t pid = fork();
      if (pid < 0) throw std::runtime_error("fork failed");
      if (pid == 0) {
        close(fds[0]);
        try {
          filter_cell(length, mode, exec, fds[1]);
        } catch (...) {
          _exit(1);
        }
        _exit(0);
      }
      close(fds[1]);
      std::string data;
      const auto deadline = Clock::now() + std::chrono::duration<double>(timeout_s);
      bool timed_out = false;
      for (;;) {
        const double left = std::chrono::duration<double, std::milli>(deadline - Clock::now()).count();
        if (left <= 0) {
          timed_out = true;
          break;
        }
        pollfd pfd{fds[0], POLLIN, 0};
        const int rc = poll(&pfd, 1, static_cast<int>(std::ceil(left)));
        if (rc == 0) continue;
        if (rc < 0) {
          if (errno == EINTR) continue;
          break;
        }
        char buf[128];
        const ssize_t n = read(fds[0], buf, sizeof buf);
        if (n <= 0) break;
        data.append(buf, static_cast<std::size_t>(n));
      }
      close(fds[0]);
      if (timed_out) kill(pid, SIGKILL);
      int status = 0;
      waitpid(pid, &status, 0);
      if (!timed_out && WIFEXITED(status) && WEXITSTATUS(status) == 0) {
        std::istringstream in(data);
        if (in >> row.ms >> row.size) row.dnf = false;
      }
      rows.push_back(row);
    }
  }
  return rows;
}

std::string to_csv(const std::vector<FilterBenchRow>& rows) {
  std::string out = "length,mode,exec,ms,size\n";
  char buf[128];
  for (const auto& r : rows) {
    if (r.dnf)
      std::snprintf(buf, sizeof buf, "%d,%s,%s,DNF,\n", r.length, r.mode.c_str(), r.exec.c_str());
    else
      std::snprintf(buf, sizeof buf, "%d,%s,%s,%.3f,%zu\n", r.length, r.mode.c_str(), r.exec.c_str(), r.ms, r.size);
    out += buf;
  }
  return out;
}

std::vector<MctsBenchRow> bench_mcts(const std::vector<int>& lengths, const std::vector<int>& rollouts, int runs,
                                     std::uint64_t seed, Exec exec) {
  if (runs <= 0) throw std::invalid_argument("runs must be positive");
  std::vector<MctsBenchRow> rows;
  for (int length : lengths) {
    LaneChangeConfig c;
    c.length = length;
    const ScenarioSim sim = build_lane_change(c);
    const FilterW filter = synthesize_filter(*sim.aux, sim.spec);
    for (int budget : rollouts) {
      MctsBenchRow row;
      row.length = length;
      row.rollouts = budget;
      row.runs = runs;
      row.rewards.assign(static_cast<std::size_t>(runs), 0.0);
      // Episodes are independent; run them side by side in parallel mode.
#pragma omp parallel for schedule(dynamic) if (exec == Exec::parallel)
      for (int k = 0; k < runs; ++k) {
        SearchParams p;
        p.rollouts = budget;
        p.seed = seed + static_cast<std::uint64_t>(k);
        EpisodeResult r = run_episode(sim, filter, p);
        row.rewards[static_cast<std::size_t>(k)] = r.verdict == Verdict::completed ? r.reward : 0.0;
      }
      double sum = 0;
      row.min = row.rewards.front();
      row.max = row.rewards.front();
      for (double v : row.rewards) {
        sum += v;
        row.min = std::min(row.min, v);
        row.max = std::max(row.max, v);
      }
      row.mean = sum / runs;
      double var = 0;
      for (double v : row.rewards) var += (v - row.mean) * (v - row.mean);
      row.stddev = std::sqrt(var / runs);
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

std::string to_csv(const std::vector<MctsBenchRow>& rows) {
  std::string out = "length,rollouts,runs,mean,min,max,stddev\n";
  char buf[160];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%d,%d,%d,%.4f,%.4f,%.4f,%.4f\n", r.length, r.rollouts, r.runs, r.mean, r.min,
                  r.max, r.stddev);
    out += buf;
  }
  return out;
}

std::string sparklines(const std::vector<MctsBenchRow>& rows) {
  static const char* glyphs[] = {" ", "▁", "▂", "▃", "▄", "▅", "▆", "▇", "█"};
  std::map<int, std::vector<const MctsBenchRow*>> by_length;
  for (const auto& r : rows) by_length[r.length].push_back(&r);
  std::string out;
  for (const auto& [length, rs] : by_length) {
    char head[32];
    std::snprintf(head, sizeof head, "L=%-3d ", length);
    out += head;
    for (const auto* r : rs) out += glyphs[std::clamp(static_cast<int>(std::lround(r->mean * 8)), 0, 8)];
    char tail[64];
    std::snprintf(tail, sizeof tail, "  %.3f -> %.3f\n", rs.front()->mean, rs.back()->mean);
    out += tail;
  }
  return out;
}

// ---------------------------------------------------------------------------

std::string CoverageMatrix::to_text() const {
  std::string out;
  if (traces.empty()) return "no traces: every specification is uncovered\nN = 0, N' = 0, minimal cover 0\n";
  std::size_t w = 5;
  for (const auto& t : traces) w = std::max(w, t.size());
  auto pad = [](std::string s, std::size_t n) {
    s.resize(std::max(n, s.size()), ' ');
    return s;
  };
  out += pad("trace", w);
  for (const auto& s : specs) out += "  " + s;
  out += "\n";
  for (std::size_t i = 0; i < traces.size(); ++i) {
    out += pad(traces[i], w);
    for (std::size_t k = 0; k < specs.size(); ++k) out += "  " + pad(covered[i][k] ? "yes" : "no", specs[k].size());
    out += "\n";
  }
  out += "N = " + std::to_string(n) + ", N' = " + std::to_string(n_prime) + ", minimal cover " +
         std::to_string(min_cover) + "\n";
  if (!uncovered.empty()) {
    out += "uncovered:";
    for (const auto& u : uncovered) out += " " + u;
    out += "\n";
  }
  return out;
}

CoverageMatrix cmd_coverage(const std::vector<std::string>& names, const std::vector<std::string>& trace_texts) {
  if (names.size() != trace_texts.size()) throw std::invalid_argument("one name per trace");
  CoverageMatrix m;
  m.traces = names;
  std::vector<TraceFile> files;
  for (const auto& t : trace_texts) files.push_back(parse_trace(t));

  // Spec names carry the config hash when one scenario appears with several configs.
  std::map<std::string, std::vector<std::string>> configs;
  for (const auto& f : files) {
    auto& v = configs[f.scenario];
    const std::string h = config_hash(f.config_text);
    if (std::find(v.begin(), v.end(), h) == v.end()) v.push_back(h);
  }
  auto prefix = [&](const TraceFile& f) {
    return configs[f.scenario].size() == 1 ? f.scenario : f.scenario + "@" + config_hash(f.config_text).substr(0, 8);
  };
  for (const auto& f : files)
    for (int u = 1; u <= 2; ++u) {
      const std::string s = prefix(f) + ":unit" + std::to_string(u);
      if (std::find(m.specs.begin(), m.specs.end(), s) == m.specs.end()) m.specs.push_back(s);
    }
  m.n = static_cast<int>(m.specs.size());

  std::map<std::string, ScenarioSim> sims;  // by config hash, merged variant
  for (const auto& f : files) {
    std::vector<bool> row(m.specs.size(), false);
    const std::string h = config_hash(f.config_text);
    if (!sims.count(h)) {
      TraceFile base = f;
      base.unit = 0;
      sims.emplace(h, scenario_of(base));
    }
    const ScenarioSim& sim = sims.at(h);
    const Trace tr = valuations(sim, f);
    for (int u = 1; u <= 2; ++u) {
      const TestContract& c = u == 1 ? sim.unit1 : sim.unit2;
      const bool ok = !tr.empty() && monitor(c.assumption, tr) && monitor(c.guarantee, tr);
      const std::string s = prefix(f) + ":unit" + std::to_string(u);
      row[static_cast<std::size_t>(std::find(m.specs.begin(), m.specs.end(), s) - m.specs.begin())] = ok;
    }
    m.covered.push_back(std::move(row));
  }

  std::vector<bool> coverable(m.specs.size(), false);
  for (const auto& row : m.covered)
    for (std::size_t k = 0; k < row.size(); ++k) coverable[k] = coverable[k] || row[k];
  for (std::size_t k = 0; k < m.specs.size(); ++k)
    if (!coverable[k]) m.uncovered.push_back(m.specs[k]);

  auto covers = [&](const std::vector<std::size_t>& pick) {
    for (std::size_t k = 0; k < m.specs.size(); ++k) {
      if (!coverable[k]) continue;
      bool hit = false;
      for (std::size_t i : pick) hit = hit || m.covered[i][k];
      if (!hit) return false;
    }
    return true;
  };
  const std::size_t nt = files.size();
  if (nt <= 20) {
    m.min_cover = static_cast<int>(nt);
    for (unsigned mask = 0; mask < (1u << nt); ++mask) {
      const int bits = std::popcount(mask);
      if (bits >= m.min_cover) continue;
      std::vector<std::size_t> pick;
      for (std::size_t i = 0; i < nt; ++i)
        if (mask >> i & 1u) pick.push_back(i);
      if (covers(pick)) m.min_cover = bits;
    }
  } else {
    // Greedy set cover beyond exhaustive reach.
    std::vector<bool> done(m.specs.size(), false);
    for (std::size_t k = 0; k < m.specs.size(); ++k) done[k] = !coverable[k];
    while (std::find(done.begin(), done.end(), false) != done.end()) {
      std::size_t best = 0;
      int gain = -1;
      for (std::size_t i = 0; i < nt; ++i) {
        int g = 0;
        for (std::size_t k = 0; k < m.specs.size(); ++k) g += !done[k] && m.covered[i][k];
        if (g > gain) gain = g, best = i;
      }
      for (std::size_t k = 0; k < m.specs.size(); ++k) done[k] = done[k] || m.covered[best][k];
      ++m.min_cover;
    }
  }
  for (const auto& row : m.covered) m.n_prime += std::find(row.begin(), row.end(), true) != row.end();
  return m;
}

std::string cmd_dump_graph(const std::string& config_text, bool aux) {
  const ScenarioSim sim = build_from_text(config_text, 0);
  if (aux) return dump_graph(*sim.aux) + dump_bindings(*sim.aux);
  return dump_graph(*sim.game) + dump_bindings(*sim.game);
}

std::string cmd_dump_filter(const std::string& config_text) {
  const ScenarioSim sim = build_from_text(config_text, 0);
  return dump_filter(synthesize_filter(*sim.aux, sim.spec));
}

}  // namespace mut
