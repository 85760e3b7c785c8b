#include "mut/trace.hpp"

#include <sstream>

namespace mut {

using ojson = nlohmann::ordered_json;

namespace {

const char* turn_name(Player p) { return p == Player::system ? "system" : "tester"; }

std::optional<std::size_t> edge_between(const Digraph& g, Vertex a, Vertex b) {
  for (std::size_t e = g.out_begin(a); e < g.out_end(a); ++e)
    if (g.edge_dst(e) == b) return e;
  return std::nullopt;
}

}  // namespace

std::string write_trace(const ScenarioSim& sim, const EpisodeResult& r, std::uint64_t seed, int unit) {
  TraceFile t;
  t.scenario = sim.id;
  t.config_text = sim.config_text;
  t.seed = seed;
  t.unit = unit;
  for (const auto& v : sim.schema().vars()) t.vars.push_back(v.name);
  const Digraph& g = sim.game->graph();
  for (std::size_t k = 0; k < r.trace.size(); ++k) {
    TraceStep s;
    s.step = static_cast<int>(k);
    s.turn = sim.game->turn(r.trace[k]);
    s.values = sim.game->values(r.trace[k]);
    if (k > 0) s.action = edge_between(g, r.trace[k - 1], r.trace[k]);
    s.light = sim.light(s.values);
    t.steps.push_back(std::move(s));
  }
  ojson mon;
  mon["assumption"] = r.monitor.spec.assumption;
  mon["unit1"] = r.monitor.spec.unit1;
  mon["unit2"] = r.monitor.spec.unit2;
  mon["merged"] = r.monitor.spec.merged;
  if (sim.spec.temporal_refinement) mon["refined"] = r.monitor.spec.refined;
  mon["coverage"] = r.monitor.coverage;
  ojson sum;
  sum["type"] = "summary";
  sum["verdict"] = to_string(r.verdict);
  sum["rho"] = r.rho;
  sum["reward"] = r.reward;
  sum["rollouts"] = r.rollouts;
  sum["plies"] = static_cast<int>(r.trace.size()) - 1;
  sum["monitors"] = mon;
  t.summary = nlohmann::json::parse(sum.dump());
  return print_trace(t);
}

std::string print_trace(const TraceFile& t) {
  std::string out;
  ojson h;
  h["type"] = "header";
  h["version"] = 1;
  h["scenario"] = t.scenario;
  h["seed"] = t.seed;
  h["unit"] = t.unit;
  h["vars"] = t.vars;
  h["config"] = t.config_text;
  out += h.dump() + "\n";
  for (const auto& s : t.steps) {
    ojson j;
    j["type"] = "step";
    j["step"] = s.step;
    j["turn"] = turn_name(s.turn);
    ojson state = ojson::object();
    for (std::size_t i = 0; i < t.vars.size(); ++i) state[t.vars[i]] = s.values[i];
    j["state"] = state;
    j["action"] = s.action ? ojson(*s.action) : ojson(nullptr);
    if (s.light) j["light"] = *s.light;
    out += j.dump() + "\n";
  }
  if (!t.summary.is_null()) {
    // Keep the summary's field order stable: type first, then the rest as parsed.
    ojson sum;
    sum["type"] = "summary";
    for (const char* k : {"verdict", "rho", "reward", "rollouts", "plies"})
      if (t.summary.contains(k)) sum[k] = t.summary[k];
    if (t.summary.contains("monitors")) {
      ojson mon;
      for (const char* k : {"assumption", "unit1", "unit2", "merged", "refined", "coverage"})
        if (t.summary["monitors"].contains(k)) mon[k] = t.summary["monitors"][k];
      sum["monitors"] = mon;
    }
    out += sum.dump() + "\n";
  }
  return out;
}

TraceFile parse_trace(std::string_view text) {
  TraceFile t;
  std::istringstream in{std::string(text)};
  std::string line;
  int no = 0;
  bool header = false, summary = false;
  while (std::getline(in, line)) {
    ++no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(std::string("malformed record: ") + e.what(), no);
    }
    try {
      const std::string type = j.at("type").get<std::string>();
      if (summary) throw ParseError("record after the summary", no);
      if (type == "header") {
        if (header) throw ParseError("second header", no);
        header = true;
        if (j.at("version").get<int>() != 1) throw ParseError("unsupported trace version", no);
        t.scenario = j.at("scenario").get<std::string>();
        t.seed = j.at("seed").get<std::uint64_t>();
        t.unit = j.value("unit", 0);
        t.vars = j.at("vars").get<std::vector<std::string>>();
        t.config_text = j.at("config").get<std::string>();
      } else if (!header) {
        throw ParseError("trace must start with a header", no);
      } else if (type == "step") {
        TraceStep s;
        s.step = j.at("step").get<int>();
        if (s.step != static_cast<int>(t.steps.size())) throw ParseError("steps out of order", no);
        const std::string turn = j.at("turn").get<std::string>();
        if (turn != "system" && turn != "tester") throw ParseError("unknown turn '" + turn + "'", no);
        s.turn = turn == "system" ? Player::system : Player::tester;
        const auto& state = j.at("state");
        if (state.size() != t.vars.size()) throw ParseError("state does not match the header variables", no);
        for (const auto& v : t.vars) s.values.push_back(state.at(v).get<int>());
        if (!j.at("action").is_null()) s.action = j.at("action").get<std::size_t>();
        if (j.contains("light")) s.light = j.at("light").get<int>();
        t.steps.push_back(std::move(s));
      } else if (type == "summary") {
        summary = true;
        t.summary = j;
      } else {
        throw ParseError("unknown record type '" + type + "'", no);
      }
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("bad record: ") + e.what(), no);
    }
  }
  if (!header) throw ParseError("empty trace", no);
  return t;
}

ScenarioSim scenario_of(const TraceFile& t) {
  KeyValues kv = KeyValues::parse(t.config_text);
  ScenarioSim sim = build_scenario(kv);
  if (sim.id != t.scenario) throw ConfigError("trace header names '" + t.scenario + "' but its config builds '" + sim.id + "'");
  if (t.unit != 0) focus_unit(sim, t.unit);
  return sim;
}

Trace valuations(const ScenarioSim& sim, const TraceFile& t) {
  Trace out;
  for (const auto& s : t.steps) out.emplace_back(sim.game->schema(), s.values);
  return out;
}

std::string render_trace(const ScenarioSim& sim, const TraceFile& t) {
  std::string out;
  for (const auto& s : t.steps) {
    out += "step " + std::to_string(s.step) + ", " + turn_name(s.turn) + " to move\n";
    out += sim.render(s.values);
    out += "\n";
  }
  return out;
}

}  // namespace mut
