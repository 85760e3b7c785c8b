#include "mut/spec.hpp"

#include <algorithm>
#include <sstream>

namespace mut {

namespace {

bool is_true(const PropFormula& f) {
  return f.kind() == PropFormula::Kind::constant && f.constant_value();
}

PropFormula conj2(const PropFormula& a, const PropFormula& b) {
  if (is_true(a)) return b;
  if (is_true(b)) return a;
  if (a == b) return a;
  return a && b;
}

void append_unique(std::vector<PropFormula>& dst, const std::vector<PropFormula>& src) {
  for (const auto& f : src)
    if (std::none_of(dst.begin(), dst.end(), [&](const PropFormula& g) { return g == f; })) dst.push_back(f);
}

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

SchemaPtr merge_schemas(const SchemaPtr& a, const SchemaPtr& b) {
  if (!a || !b) throw SpecError("contract without a variable schema");
  std::vector<VarDecl> vars = a->vars();
  for (const auto& v : b->vars()) {
    if (auto i = a->index(v.name)) {
      if (!((*a)[*i].domain == v.domain))
        throw SpecError("variable '" + v.name + "' declared with different domains");
      continue;
    }
    vars.push_back(v);
  }
  return std::make_shared<const Schema>(std::move(vars));
}

PropFormula recurrence_case_split(const PropFormula& p1, const PropFormula& p2) {
  return any_of({V(kAuxCopyVar) == 0 && p1 && p2, V(kAuxCopyVar) == 1 && p1, V(kAuxCopyVar) == 2 && p2});
}

}  // namespace

GR1Spec conjoin(const GR1Spec& a, const GR1Spec& b) {
  GR1Spec out;
  out.init = conj2(a.init, b.init);
  out.safety = a.safety;
  append_unique(out.safety, b.safety);
  out.recurrence = a.recurrence;
  append_unique(out.recurrence, b.recurrence);
  return out;
}

GR1Spec parse_gr1(std::string_view text) {
  GR1Spec out;
  std::vector<PropFormula> inits;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    if (auto h = raw.find('#'); h != std::string::npos) raw.resize(h);
    std::string l = trim(raw);
    if (l.empty()) continue;
    auto sp = l.find_first_of(" \t");
    if (sp == std::string::npos) throw ParseError("missing expression after '" + l + "'", line);
    std::string key = l.substr(0, sp);
    PropFormula f = parse_formula(trim(std::string_view(l).substr(sp)), line);
    if (key == "INIT") {
      if (f.mentions_primed()) throw ParseError("INIT may not mention primed variables", line);
      inits.push_back(f);
    } else if (key == "SAFE") {
      out.safety.push_back(f);
    } else if (key == "GOAL") {
      if (f.mentions_primed()) throw ParseError("GOAL may not mention primed variables", line);
      out.recurrence.push_back(f);
    } else {
      throw ParseError("unknown keyword '" + key + "'", line);
    }
  }
  out.init = all_of(std::move(inits));
  return out;
}

std::string print_gr1(const GR1Spec& s) {
  std::string out;
  if (!is_true(s.init)) out += "INIT " + to_string(s.init) + "\n";
  for (const auto& f : s.safety) out += "SAFE " + to_string(f) + "\n";
  for (const auto& f : s.recurrence) out += "GOAL " + to_string(f) + "\n";
  return out;
}

TestContract saturate(TestContract c) {
  c.saturated = true;
  return c;
}

PropFormula MergedSpec::aux_psi1() const {
  if (!temporal_refinement) return psi1;
  return psi1 && !temporal_refinement->g_t2;
}

PropFormula MergedSpec::aux_psi2() const {
  if (!temporal_refinement) return psi2;
  return psi2 && !temporal_refinement->g_t1;
}

MergedSpec strong_merge(const TestContract& c1, const TestContract& c2) {
  if (!c1.saturated || !c2.saturated) throw SpecError("strong merge expects saturated contracts");
  if (c1.guarantee.recurrence.size() != 1 || c2.guarantee.recurrence.size() != 1)
    throw SpecError("each unit guarantee must carry exactly one recurrence goal");
  MergedSpec m;
  m.schema = merge_schemas(c1.schema, c2.schema);
  m.unit1 = c1;
  m.unit2 = c2;
  m.assumption = conjoin(c1.assumption, c2.assumption);
  m.psi1 = c1.guarantee.recurrence.front();
  m.psi2 = c2.guarantee.recurrence.front();
  m.merged_recurrence = recurrence_case_split(m.aux_psi1(), m.aux_psi2());
  return m;
}

MergedSpec refine_temporal(const MergedSpec& m, const PropFormula& g_t1, const PropFormula& g_t2) {
  if (g_t1 == g_t2) throw SpecError("temporal refinement with identical conditions is unsatisfiable");
  MergedSpec out = m;
  out.temporal_refinement = TemporalRefinement{g_t1, g_t2};
  out.merged_recurrence = recurrence_case_split(out.aux_psi1(), out.aux_psi2());
  return out;
}

// ---------------------------------------------------------------------------

GR1Monitor::GR1Monitor(const GR1Spec* spec) : spec_(spec), seen_(spec->recurrence.size(), false) {}

void GR1Monitor::step(const StateValuation& s) {
  if (length_ == 0) init_ok_ = eval(spec_->init, s);
  for (const auto& f : spec_->safety) {
    if (!safe_ok_) break;
    if (f.mentions_primed()) {
      if (prev_ && !eval(f, *prev_, s)) safe_ok_ = false;
    } else if (!eval(f, s)) {
      safe_ok_ = false;
    }
  }
  for (std::size_t i = 0; i < seen_.size(); ++i)
    if (!seen_[i] && eval(spec_->recurrence[i], s)) seen_[i] = true;
  prev_ = s;
  ++length_;
}

bool GR1Monitor::accepted() const {
  if (length_ == 0) return false;
  return init_ok_ && safe_ok_ && std::all_of(seen_.begin(), seen_.end(), [](bool b) { return b; });
}

bool monitor(const GR1Spec& s, const Trace& t) {
  GR1Monitor m(&s);
  for (const auto& st : t) m.step(st);
  return m.accepted();
}

bool monitor(const TestContract& c, const Trace& t) {
  bool g = monitor(c.guarantee, t);
  if (!c.saturated) return g;
  return !monitor(c.assumption, t) || g;
}

MergedVerdicts monitor(const MergedSpec& m, const Trace& t) {
  MergedVerdicts v;
  bool a1 = monitor(m.unit1.assumption, t);
  bool a2 = monitor(m.unit2.assumption, t);
  bool g1 = monitor(m.unit1.guarantee, t);
  bool g2 = monitor(m.unit2.guarantee, t);
  v.assumption = monitor(m.assumption, t);
  v.unit1 = !a1 || g1;
  v.unit2 = !a2 || g2;
  v.merged = !a1 || !a2 || (g1 && g2);
  if (m.temporal_refinement) {
    for (const auto& s : t) {
      bool t1 = eval(m.temporal_refinement->g_t1, s);
      bool t2 = eval(m.temporal_refinement->g_t2, s);
      v.only_t1_step = v.only_t1_step || (t1 && !t2);
      v.only_t2_step = v.only_t2_step || (!t1 && t2);
    }
    v.refined = !a1 || !a2 || (v.only_t1_step && v.only_t2_step && g1 && g2);
  } else {
    v.refined = v.merged;
  }
  return v;
}

}  // namespace mut
