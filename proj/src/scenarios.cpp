#include "mut/scenarios.hpp"

#include <algorithm>
#include <chrono>
#include <sstream>

namespace mut {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) {
    cur = trim(cur);
    if (!cur.empty()) out.push_back(cur);
  }
  return out;
}

int to_int(const std::string& s, const std::string& what) {
  try {
    std::size_t pos = 0;
    int v = std::stoi(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("expected an integer for " + what + ", got '" + s + "'");
  }
}

Cell to_cell(const std::string& s, const std::string& what) {
  auto parts = split(s, ',');
  if (parts.size() != 2) throw ConfigError("expected 'row,column' for " + what + ", got '" + s + "'");
  return {to_int(parts[0], what), to_int(parts[1], what)};
}

std::string cell_text(Cell c) { return std::to_string(c.y) + "," + std::to_string(c.z); }

SchemaPtr schema(std::vector<VarDecl> v) { return std::make_shared<const Schema>(std::move(v)); }

using Moves = std::vector<std::vector<int>>;

// Auxiliary graph, arenas and the system's own reachable region for the current sim.spec.
void rebuild_aux(ScenarioSim& sim) {
  auto t0 = Clock::now();
  sim.aux = std::make_shared<const AuxGraph>(build_aux_graph(sim.game, sim.spec.aux_psi1(), sim.spec.aux_psi2()));
  sim.build_ms["aux_graph"] = ms_since(t0);

  t0 = Clock::now();
  sim.base_arena = build_arena(*sim.game, sim.spec);
  sim.aux_arena = build_arena(*sim.aux, sim.spec);
  PartialOrder sys_po = partial_order(sim.game->graph(), sim.base_arena.progress, &sim.base_arena.edge_ok);
  sim.system_region = VertexSet(sim.game->num_vertices());
  for (Vertex v = 0; v < sim.game->num_vertices(); ++v)
    if (sys_po.dist[v] != kInfDist) sim.system_region.insert(v);
  sim.build_ms["arena"] = ms_since(t0);
}

// Everything after the component systems: product, game graph, merge, auxiliary graph.
void assemble(ScenarioSim& sim, const TransitionSystem& sys, const TransitionSystem& test,
              const std::vector<int>& init_values, bool allow_refinement,
              const std::optional<std::pair<PropFormula, PropFormula>>& waits) {
  auto t0 = Clock::now();
  auto prod = std::make_shared<const ProductTS>(product(sys, test));
  sim.build_ms["product"] = ms_since(t0);

  t0 = Clock::now();
  sim.game = std::make_shared<const GameGraph>(build_game_graph(prod));
  sim.build_ms["game_graph"] = ms_since(t0);

  t0 = Clock::now();
  sim.spec = strong_merge(sim.unit1, sim.unit2);
  if (allow_refinement && waits && needs_temporal_constraint(sim.unit1, sim.unit2, *sim.game))
    sim.spec = refine_temporal(sim.spec, waits->first, waits->second);
  sim.build_ms["merge"] = ms_since(t0);

  rebuild_aux(sim);

  const std::size_t nsv = sys.schema->size();
  std::vector<int> sv(init_values.begin(), init_values.begin() + static_cast<std::ptrdiff_t>(nsv));
  std::vector<int> tv(init_values.begin() + static_cast<std::ptrdiff_t>(nsv), init_values.end());
  auto si = prod->sys.find(sv);
  auto ti = prod->test.find(tv);
  if (!si || !ti) throw ConfigError("initial configuration is not a state of the scenario");
  sim.initial = sim.game->vertex(Player::system, *si, *ti);
}

}  // namespace

// ---------------------------------------------------------------------------

KeyValues KeyValues::parse(std::string_view text) {
  KeyValues kv;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    if (auto h = raw.find('#'); h != std::string::npos) raw.resize(h);
    std::string l = trim(raw);
    if (l.empty()) continue;
    auto eq = l.find('=');
    if (eq == std::string::npos) throw ParseError("expected 'key = value'", line);
    std::string key = trim(std::string_view(l).substr(0, eq));
    std::string value = trim(std::string_view(l).substr(eq + 1));
    if (key.empty()) throw ParseError("empty key", line);
    if (kv.entries.count(key)) throw ParseError("duplicate key '" + key + "'", line);
    kv.entries[key] = {value, line, false};
  }
  return kv;
}

std::string KeyValues::str(const std::string& key, const std::string& fallback) {
  auto it = entries.find(key);
  if (it == entries.end()) return fallback;
  it->second.used = true;
  return it->second.value;
}

int KeyValues::integer(const std::string& key, int fallback) {
  auto it = entries.find(key);
  if (it == entries.end()) return fallback;
  it->second.used = true;
  try {
    return to_int(it->second.value, key);
  } catch (const ConfigError& e) {
    throw ConfigError("line " + std::to_string(it->second.line) + ": " + e.what());
  }
}

double KeyValues::real(const std::string& key, double fallback) {
  auto it = entries.find(key);
  if (it == entries.end()) return fallback;
  it->second.used = true;
  try {
    std::size_t pos = 0;
    double v = std::stod(it->second.value, &pos);
    if (pos != it->second.value.size()) throw std::invalid_argument(key);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("line " + std::to_string(it->second.line) + ": expected a number for " + key);
  }
}

std::vector<std::string> KeyValues::unused() const {
  std::vector<std::string> out;
  for (const auto& [k, e] : entries)
    if (!e.used) out.push_back(k);
  return out;
}

LaneChangeConfig lane_change_config(KeyValues& kv) {
  LaneChangeConfig c;
  c.length = kv.integer("length", c.length);
  c.sys_x = kv.integer("sys_x", c.sys_x);
  c.tester1_x = kv.integer("tester1_x", c.tester1_x);
  c.tester2_x = kv.integer("tester2_x", c.tester2_x);
  c.gap = kv.integer("gap", c.gap);
  c.t_max = kv.integer("t_max", c.t_max);
  return c;
}

LeftTurnConfig left_turn_config(KeyValues& kv) {
  LeftTurnConfig c;
  if (kv.has("sys_start")) c.sys_start = to_cell(kv.str("sys_start", ""), "sys_start");
  if (kv.has("car_start")) c.car_start = to_cell(kv.str("car_start", ""), "car_start");
  c.ped_start = kv.integer("ped_start", c.ped_start);
  if (kv.has("goal")) c.goal = to_cell(kv.str("goal", ""), "goal");
  if (kv.has("wait")) c.wait = to_cell(kv.str("wait", ""), "wait");
  if (kv.has("car_trigger")) {
    c.car_trigger.clear();
    for (const auto& s : split(kv.str("car_trigger", ""), ';')) c.car_trigger.push_back(to_cell(s, "car_trigger"));
  }
  if (kv.has("ped_trigger")) {
    c.ped_trigger.clear();
    for (const auto& s : split(kv.str("ped_trigger", ""), ',')) c.ped_trigger.push_back(to_int(s, "ped_trigger"));
  }
  c.green = kv.integer("green", c.green);
  c.yellow = kv.integer("yellow", c.yellow);
  c.red = kv.integer("red", c.red);
  c.t_max = kv.integer("t_max", c.t_max);
  return c;
}

std::string to_config_text(const LaneChangeConfig& c) {
  std::ostringstream o;
  o << "version = 1\nscenario = lane_change\n"
    << "length = " << c.length << "\nsys_x = " << c.sys_x << "\ntester1_x = " << c.tester1_x
    << "\ntester2_x = " << c.tester2_x << "\ngap = " << c.gap << "\nt_max = " << c.t_max << "\n";
  return o.str();
}

std::string to_config_text(const LeftTurnConfig& c) {
  std::ostringstream o;
  o << "version = 1\nscenario = left_turn\n"
    << "sys_start = " << cell_text(c.sys_start) << "\ncar_start = " << cell_text(c.car_start)
    << "\nped_start = " << c.ped_start << "\ngoal = " << cell_text(c.goal) << "\nwait = " << cell_text(c.wait)
    << "\ncar_trigger = ";
  for (std::size_t i = 0; i < c.car_trigger.size(); ++i) o << (i ? ";" : "") << cell_text(c.car_trigger[i]);
  o << "\nped_trigger = ";
  for (std::size_t i = 0; i < c.ped_trigger.size(); ++i) o << (i ? "," : "") << c.ped_trigger[i];
  o << "\ngreen = " << c.green << "\nyellow = " << c.yellow << "\nred = " << c.red << "\nt_max = " << c.t_max << "\n";
  return o.str();
}

double ScenarioSim::reward(double rho) const {
  double r = maximize ? rho / best_rho : 1.0 - rho / best_rho;
  return std::clamp(r, 0.0, 1.0);
}

// ---------------------------------------------------------------------------
// Lane change

ScenarioSim build_lane_change(const LaneChangeConfig& cfg) {
  const int L = cfg.length;
  if (L < 4) throw ConfigError("lane change needs a track of at least 4 cells");
  auto in_track = [&](int x) { return x >= 1 && x <= L; };
  if (!in_track(cfg.sys_x) || !in_track(cfg.tester1_x) || !in_track(cfg.tester2_x))
    throw ConfigError("initial positions must lie on the track");
  if (cfg.tester1_x >= cfg.tester2_x) throw ConfigError("tester 1 must start behind tester 2");
  if (cfg.gap < 2 || cfg.gap >= L) throw ConfigError("gap must leave room for the system between the testers");

  ScenarioSim sim;
  sim.id = "lane_change";
  sim.config_text = to_config_text(cfg);
  sim.t_max = cfg.t_max > 0 ? cfg.t_max : 16 * L;
  sim.best_rho = L - 1;
  sim.maximize = true;

  auto t0 = Clock::now();
  auto sys_schema = schema({{"x", {1, L}}, {"y", {1, 2}}});
  TransitionSystem sys = TransitionSystem::from_function(sys_schema, PropFormula(), [L](const std::vector<int>& s) {
    Moves m{s};
    if (s[0] < L) {
      m.push_back({s[0] + 1, s[1]});
      if (s[1] == 1) m.push_back({s[0] + 1, 2});
    }
    return m;
  });
  auto tester = [L](const std::string& xn, const std::string& yn) {
    return TransitionSystem::from_function(schema({{xn, {1, L}}, {yn, {2, 2}}}), PropFormula(),
                                           [L](const std::vector<int>& s) {
                                             Moves m{s};
                                             if (s[0] < L) m.push_back({s[0] + 1, s[1]});
                                             return m;
                                           });
  };
  TransitionSystem test = restrict(synchronous_product(tester("x1", "y1"), tester("x2", "y2")), V("x1") < V("x2"));
  sim.build_ms["components"] = ms_since(t0);

  t0 = Clock::now();
  PropFormula no_hit1 = !(V("x") == V("x1") && V("y") == V("y1"));
  PropFormula no_hit2 = !(V("x") == V("x2") && V("y") == V("y2"));
  GR1Spec sys_spec;
  sys_spec.init = V("x") == cfg.sys_x && V("y") == 1;
  sys_spec.safety = {any_of({Next("x") == V("x") && Next("y") == V("y"), Next("x") == V("x") + 1 && Next("y") == V("y"),
                             Next("x") == V("x") + 1 && V("y") == 1 && Next("y") == 2}),
                     no_hit1, no_hit2};
  sys_spec.recurrence = {V("y") == 2};

  GR1Spec tester_spec;
  tester_spec.init = all_of({V("x1") == cfg.tester1_x, V("y1") == 2, V("x2") == cfg.tester2_x, V("y2") == 2});
  tester_spec.safety = {(Next("x1") == V("x1") || Next("x1") == V("x1") + 1) && Next("y1") == V("y1"),
                        (Next("x2") == V("x2") || Next("x2") == V("x2") + 1) && Next("y2") == V("y2"),
                        V("x1") < V("x2"), no_hit1, no_hit2};
  PropFormula psi1 = V("y") == 2 && V("y1") == 2 && V("x") == V("x1") + 1;
  PropFormula psi2 = V("y") == 2 && V("y2") == 2 && V("x") == V("x2") - (cfg.gap - 1);
  auto joint = std::make_shared<const Schema>(Schema::concat(*sys.schema, *test.schema));
  GR1Spec g1 = tester_spec, g2 = tester_spec;
  g1.recurrence = {psi1};
  g2.recurrence = {psi2};
  sim.unit1 = saturate({joint, sys_spec, g1, false});
  sim.unit2 = saturate({joint, sys_spec, g2, false});
  sim.build_ms["contracts"] = ms_since(t0);

  assemble(sim, sys, test, {cfg.sys_x, 1, cfg.tester1_x, 2, cfg.tester2_x, 2}, false, std::nullopt);

  sim.complete = [](const std::vector<int>&) { return true; };
  sim.robustness = [](const std::vector<int>& v) { return static_cast<double>(v[0]); };
  sim.light = [](const std::vector<int>&) { return std::optional<int>(); };
  sim.render = [L](const std::vector<int>& v) {
    std::string out;
    for (int lane = 1; lane <= 2; ++lane) {
      out += "lane " + std::to_string(lane) + " |";
      for (int x = 1; x <= L; ++x) {
        char c = '.';
        if (v[0] == x && v[1] == lane) c = 'S';
        else if (v[2] == x && v[3] == lane) c = '1';
        else if (v[4] == x && v[5] == lane) c = '2';
        out += ' ';
        out += c;
      }
      out += " |\n";
    }
    return out;
  };
  return sim;
}

// ---------------------------------------------------------------------------
// Left turn

namespace {

// Fixed intersection layout: the system drives north up column 4, turns at row 4 and
// leaves north along column 3; the tester car drives south along column 3.
const std::vector<Cell> kRoute{{7, 4}, {6, 4}, {5, 4}, {4, 4}, {3, 3}, {2, 3}, {1, 3}, {0, 3}};
constexpr int kCarColumn = 3;
constexpr int kCarGone = 8;
constexpr int kCrosswalk = 6;  // pedestrian cells 0..5, 6 once across

int route_index(Cell c) {
  for (std::size_t i = 0; i < kRoute.size(); ++i)
    if (kRoute[i] == c) return static_cast<int>(i);
  return -1;
}

}  // namespace

ScenarioSim build_left_turn(const LeftTurnConfig& cfg) {
  if (route_index(cfg.sys_start) != 0) throw ConfigError("system start must be the route entry " + cell_text(kRoute.front()));
  if (route_index(cfg.goal) != static_cast<int>(kRoute.size()) - 1)
    throw ConfigError("goal must be the route exit " + cell_text(kRoute.back()));
  int wi = route_index(cfg.wait);
  if (wi <= 0 || wi >= static_cast<int>(kRoute.size()) - 1) throw ConfigError("wait cell must be an interior route cell");
  if (cfg.car_start.z != kCarColumn || cfg.car_start.y < 0 || cfg.car_start.y > 7)
    throw ConfigError("tester car must start on column 3");
  for (const auto& c : cfg.car_trigger)
    if (c.z != kCarColumn || c.y < 0 || c.y > 7) throw ConfigError("car trigger cells must lie on column 3");
  if (cfg.car_trigger.empty() || cfg.ped_trigger.empty()) throw ConfigError("trigger sets must be nonempty");
  if (cfg.ped_start < 0 || cfg.ped_start >= kCrosswalk) throw ConfigError("pedestrian must start on the crosswalk");
  for (int p : cfg.ped_trigger)
    if (p < 0 || p >= kCrosswalk) throw ConfigError("pedestrian trigger cells must lie on the crosswalk");
  if (cfg.green < 1 || cfg.yellow < 1 || cfg.red < 1) throw ConfigError("light phases must last at least one step");

  ScenarioSim sim;
  sim.id = "left_turn";
  sim.config_text = to_config_text(cfg);
  sim.t_max = cfg.t_max > 0 ? cfg.t_max : 80;
  sim.best_rho = cfg.green + cfg.yellow;
  sim.maximize = false;
  const int cycle = cfg.green + cfg.yellow + cfg.red;
  const int go_until = cfg.green + cfg.yellow;

  auto t0 = Clock::now();
  std::vector<PropFormula> on_route;
  for (const auto& c : kRoute) on_route.push_back(V("sy") == c.y && V("sz") == c.z);
  TransitionSystem sys = TransitionSystem::from_function(
      schema({{"sy", {0, 7}}, {"sz", {0, 4}}}), any_of(on_route), [](const std::vector<int>& s) {
        Moves m{s};
        int i = route_index({s[0], s[1]});
        if (i + 1 < static_cast<int>(kRoute.size())) m.push_back({kRoute[i + 1].y, kRoute[i + 1].z});
        return m;
      });
  auto advance = [](int hi) {
    return [hi](const std::vector<int>& s) {
      Moves m{s};
      if (s[0] < hi) m.push_back({s[0] + 1});
      return m;
    };
  };
  TransitionSystem car = TransitionSystem::from_function(schema({{"cy", {0, kCarGone}}}), PropFormula(), advance(kCarGone));
  TransitionSystem ped = TransitionSystem::from_function(schema({{"ped", {0, kCrosswalk}}}), PropFormula(), advance(kCrosswalk));
  TransitionSystem light = TransitionSystem::from_function(
      schema({{"light", {0, cycle - 1}}}), PropFormula(),
      [cycle](const std::vector<int>& s) { return Moves{{(s[0] + 1) % cycle}}; });
  TransitionSystem test = synchronous_product(synchronous_product(car, ped), light);
  sim.build_ms["components"] = ms_since(t0);

  t0 = Clock::now();
  const Cell w = cfg.wait;
  PropFormula at_wait = V("sy") == w.y && V("sz") == w.z;
  std::vector<PropFormula> car_in, ped_in;
  for (const auto& c : cfg.car_trigger) car_in.push_back(V("cy") == c.y);
  for (int p : cfg.ped_trigger) ped_in.push_back(V("ped") == p);
  PropFormula car_close = any_of(car_in), ped_close = any_of(ped_in);
  PropFormula no_hit = !(V("sz") == kCarColumn && V("sy") == V("cy"));

  std::vector<PropFormula> steps{Next("sy") == V("sy") && Next("sz") == V("sz")};
  for (std::size_t i = 0; i + 1 < kRoute.size(); ++i)
    steps.push_back(all_of({V("sy") == kRoute[i].y, V("sz") == kRoute[i].z, Next("sy") == kRoute[i + 1].y,
                            Next("sz") == kRoute[i + 1].z}));
  GR1Spec sys_spec;
  sys_spec.init = V("sy") == cfg.sys_start.y && V("sz") == cfg.sys_start.z;
  sys_spec.safety = {any_of(steps), no_hit,
                     implies(at_wait && !(Next("sy") == w.y && Next("sz") == w.z),
                             !car_close && !ped_close && V("light") < go_until)};
  sys_spec.recurrence = {V("sy") == cfg.goal.y && V("sz") == cfg.goal.z};

  GR1Spec tester_spec;
  tester_spec.init = all_of({V("cy") == cfg.car_start.y, V("ped") == cfg.ped_start, V("light") == 0});
  tester_spec.safety = {Next("cy") == V("cy") || Next("cy") == V("cy") + 1,
                        Next("ped") == V("ped") || Next("ped") == V("ped") + 1,
                        any_of({Next("light") == V("light"), Next("light") == V("light") + 1,
                                V("light") == cycle - 1 && Next("light") == 0}),
                        no_hit};
  PropFormula wait_car = at_wait && car_close;
  PropFormula wait_ped = at_wait && ped_close;
  auto joint = std::make_shared<const Schema>(Schema::concat(*sys.schema, *test.schema));
  GR1Spec g1 = tester_spec, g2 = tester_spec;
  g1.recurrence = {wait_car};
  g2.recurrence = {wait_ped};
  sim.unit1 = saturate({joint, sys_spec, g1, false});
  sim.unit2 = saturate({joint, sys_spec, g2, false});
  sim.build_ms["contracts"] = ms_since(t0);

  assemble(sim, sys, test, {cfg.sys_start.y, cfg.sys_start.z, cfg.car_start.y, cfg.ped_start, 0}, true,
           std::make_pair(wait_car, wait_ped));

  const Cell goal = cfg.goal;
  sim.complete = [goal](const std::vector<int>& v) { return v[0] == goal.y && v[1] == goal.z; };
  sim.robustness = [go_until](const std::vector<int>& v) {
    return v[4] < go_until ? static_cast<double>(go_until - v[4]) : 0.0;
  };
  sim.light = [](const std::vector<int>& v) { return std::optional<int>(v[4]); };
  const int green = cfg.green, yellow = cfg.yellow;
  sim.render = [=](const std::vector<int>& v) {
    std::string out;
    for (int y = 0; y < 8; ++y) {
      for (int z = 0; z < 5; ++z) {
        char c = '#';
        if (z == kCarColumn || route_index({y, z}) >= 0) c = '.';
        if (Cell{y, z} == w) c = 'w';
        if (Cell{y, z} == goal) c = 'g';
        if (z == kCarColumn && v[2] == y) c = 'C';
        if (v[0] == y && v[1] == z) c = 'S';
        out += c;
      }
      out += '\n';
    }
    out += "crosswalk |";
    for (int p = 0; p < kCrosswalk; ++p) out += v[3] == p ? 'P' : '.';
    out += "|\n";
    int l = v[4];
    if (l < green) out += "light green, " + std::to_string(green - l) + " left\n";
    else if (l < green + yellow) out += "light yellow, " + std::to_string(green + yellow - l) + " left\n";
    else out += "light red\n";
    return out;
  };
  return sim;
}

void focus_unit(ScenarioSim& sim, int unit) {
  if (unit != 1 && unit != 2) throw ConfigError("unit must be 1 or 2");
  const TestContract& c = unit == 1 ? sim.unit1 : sim.unit2;
  sim.spec = strong_merge(c, c);
  rebuild_aux(sim);
}

ScenarioSim build_scenario(KeyValues& kv) {
  if (!kv.has("version")) throw ConfigError("config lacks 'version'");
  if (kv.integer("version", 0) != 1) throw ConfigError("unsupported config version");
  std::string id = kv.str("scenario", "");
  if (id == "lane_change") return build_lane_change(lane_change_config(kv));
  if (id == "left_turn") return build_left_turn(left_turn_config(kv));
  throw ConfigError("unknown scenario '" + id + "'");
}

// ---------------------------------------------------------------------------

std::vector<std::size_t> system_moves(const ScenarioSim& sim, Vertex base_v) {
  const Digraph& g = sim.game->graph();
  std::vector<std::size_t> keep, any;
  for (std::size_t e = g.out_begin(base_v); e < g.out_end(base_v); ++e) {
    if (!sim.base_arena.edge_ok[e]) continue;
    any.push_back(e);
    if (sim.system_region.contains(g.edge_dst(e))) keep.push_back(e);
  }
  return keep.empty() ? any : keep;
}

std::optional<std::size_t> system_model_step(const ScenarioSim& sim, Vertex base_v, std::mt19937_64& rng) {
  auto moves = system_moves(sim, base_v);
  if (moves.empty()) return std::nullopt;
  std::uniform_int_distribution<std::size_t> pick(0, moves.size() - 1);
  return moves[pick(rng)];
}

Verdicts monitor(const ScenarioSim& sim, const Trace& t) {
  Verdicts v;
  v.spec = monitor(sim.spec, t);
  bool merged = sim.spec.temporal_refinement ? v.spec.refined : v.spec.merged;
  v.coverage = merged && v.spec.assumption;
  return v;
}

}  // namespace mut
