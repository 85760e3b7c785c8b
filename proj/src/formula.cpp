#include "mut/formula.hpp"

#include <cctype>
#include <sstream>

namespace mut {

Schema::Schema(std::vector<VarDecl> vars) : vars_(std::move(vars)) {
  for (std::size_t i = 0; i < vars_.size(); ++i) {
    if (vars_[i].domain.lo > vars_[i].domain.hi)
      throw std::invalid_argument("empty domain for variable " + vars_[i].name);
    if (!index_.emplace(vars_[i].name, i).second)
      throw std::invalid_argument("duplicate variable " + vars_[i].name);
  }
}

std::optional<std::size_t> Schema::index(std::string_view name) const {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

Schema Schema::concat(const Schema& a, const Schema& b) {
  std::vector<VarDecl> vars = a.vars_;
  vars.insert(vars.end(), b.vars_.begin(), b.vars_.end());
  return Schema(std::move(vars));
}

bool operator==(const Schema& a, const Schema& b) {
  if (a.vars_.size() != b.vars_.size()) return false;
  for (std::size_t i = 0; i < a.vars_.size(); ++i)
    if (a.vars_[i].name != b.vars_[i].name || !(a.vars_[i].domain == b.vars_[i].domain)) return false;
  return true;
}

StateValuation::StateValuation(SchemaPtr schema, std::vector<int> values)
    : schema_(std::move(schema)), values_(std::move(values)) {
  if (!schema_ || schema_->size() != values_.size())
    throw std::invalid_argument("valuation does not match its schema");
}

std::optional<int> StateValuation::get(std::string_view name) const {
  if (!schema_) return std::nullopt;
  auto i = schema_->index(name);
  if (!i) return std::nullopt;
  return values_[*i];
}

int StateValuation::at(std::string_view name) const {
  auto v = get(name);
  if (!v) throw EvalError("variable '" + std::string(name) + "' missing from valuation");
  return *v;
}

bool StateValuation::in_domain() const {
  for (std::size_t i = 0; i < values_.size(); ++i)
    if (!(*schema_)[i].domain.contains(values_[i])) return false;
  return true;
}

StateValuation StateValuation::join(const StateValuation& a, const StateValuation& b, SchemaPtr joint) {
  std::vector<int> values = a.values_;
  values.insert(values.end(), b.values_.begin(), b.values_.end());
  return StateValuation(std::move(joint), std::move(values));
}

std::string StateValuation::to_string() const {
  std::string out;
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (i) out += ' ';
    out += (*schema_)[i].name + "=" + std::to_string(values_[i]);
  }
  return out;
}

bool operator==(const StateValuation& a, const StateValuation& b) {
  if (a.values_ != b.values_) return false;
  if (a.schema_ == b.schema_) return true;
  if (!a.schema_ || !b.schema_) return false;
  return *a.schema_ == *b.schema_;
}

// ---------------------------------------------------------------------------

PropFormula::PropFormula() : node_(std::make_shared<Node>()) {}

PropFormula PropFormula::truth(bool value) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::constant;
  n->value = value;
  return PropFormula(std::move(n));
}

PropFormula PropFormula::atom(Atom a) {
  if (a.lhs.is_const() && a.rhs.is_const())
    throw std::invalid_argument("atom compares two constants");
  auto n = std::make_shared<Node>();
  n->kind = Kind::atom;
  n->atom = std::move(a);
  return PropFormula(std::move(n));
}

PropFormula PropFormula::negation(PropFormula f) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::negation;
  n->children.push_back(std::move(f));
  return PropFormula(std::move(n));
}

PropFormula PropFormula::conjunction(std::vector<PropFormula> fs) {
  if (fs.size() < 2) throw std::invalid_argument("conjunction needs two operands");
  auto n = std::make_shared<Node>();
  n->kind = Kind::conjunction;
  n->children = std::move(fs);
  return PropFormula(std::move(n));
}

PropFormula PropFormula::disjunction(std::vector<PropFormula> fs) {
  if (fs.size() < 2) throw std::invalid_argument("disjunction needs two operands");
  auto n = std::make_shared<Node>();
  n->kind = Kind::disjunction;
  n->children = std::move(fs);
  return PropFormula(std::move(n));
}

bool operator==(const PropFormula& a, const PropFormula& b) {
  if (a.node_ == b.node_) return true;
  if (a.kind() != b.kind()) return false;
  switch (a.kind()) {
    case PropFormula::Kind::constant: return a.constant_value() == b.constant_value();
    case PropFormula::Kind::atom: return a.atom_value().same(b.atom_value());
    default: break;
  }
  const auto& ca = a.children();
  const auto& cb = b.children();
  if (ca.size() != cb.size()) return false;
  for (std::size_t i = 0; i < ca.size(); ++i)
    if (!(ca[i] == cb[i])) return false;
  return true;
}

namespace {

void collect(const PropFormula& f, std::set<std::string>& out) {
  if (f.kind() == PropFormula::Kind::atom) {
    for (const Operand* o : {&f.atom_value().lhs, &f.atom_value().rhs})
      if (!o->is_const()) out.insert(o->primed ? o->var + "'" : o->var);
    return;
  }
  for (const auto& c : f.children()) collect(c, out);
}

int operand_value(const Operand& o, const StateValuation& s, const StateValuation* next) {
  if (o.is_const()) return o.offset;
  if (o.primed) {
    if (!next) throw EvalError("primed variable '" + o.var + "' evaluated without a successor state");
    return next->at(o.var) + o.offset;
  }
  return s.at(o.var) + o.offset;
}

bool eval_impl(const PropFormula& f, const StateValuation& s, const StateValuation* next) {
  switch (f.kind()) {
    case PropFormula::Kind::constant: return f.constant_value();
    case PropFormula::Kind::atom: {
      const Atom& a = f.atom_value();
      int l = operand_value(a.lhs, s, next);
      int r = operand_value(a.rhs, s, next);
      switch (a.op) {
        case CmpOp::eq: return l == r;
        case CmpOp::ne: return l != r;
        case CmpOp::lt: return l < r;
        case CmpOp::le: return l <= r;
        case CmpOp::gt: return l > r;
        case CmpOp::ge: return l >= r;
      }
      return false;
    }
    case PropFormula::Kind::negation: return !eval_impl(f.children()[0], s, next);
    case PropFormula::Kind::conjunction:
      for (const auto& c : f.children())
        if (!eval_impl(c, s, next)) return false;
      return true;
    case PropFormula::Kind::disjunction:
      for (const auto& c : f.children())
        if (eval_impl(c, s, next)) return true;
      return false;
  }
  return false;
}

}  // namespace

std::set<std::string> PropFormula::variables() const {
  std::set<std::string> out;
  collect(*this, out);
  return out;
}

bool PropFormula::mentions_primed() const {
  for (const auto& v : variables())
    if (v.back() == '\'') return true;
  return false;
}

PropFormula cmp(Operand lhs, CmpOp op, Operand rhs) {
  return PropFormula::atom(Atom{std::move(lhs), op, std::move(rhs)});
}

PropFormula operator!(const PropFormula& f) { return PropFormula::negation(f); }
PropFormula operator&&(const PropFormula& a, const PropFormula& b) { return PropFormula::conjunction({a, b}); }
PropFormula operator||(const PropFormula& a, const PropFormula& b) { return PropFormula::disjunction({a, b}); }

PropFormula all_of(std::vector<PropFormula> fs) {
  if (fs.empty()) return PropFormula::truth(true);
  if (fs.size() == 1) return fs.front();
  return PropFormula::conjunction(std::move(fs));
}

PropFormula any_of(std::vector<PropFormula> fs) {
  if (fs.empty()) return PropFormula::truth(false);
  if (fs.size() == 1) return fs.front();
  return PropFormula::disjunction(std::move(fs));
}

PropFormula implies(const PropFormula& a, const PropFormula& b) { return !a || b; }

bool eval(const PropFormula& f, const StateValuation& s) { return eval_impl(f, s, nullptr); }
bool eval(const PropFormula& f, const StateValuation& s, const StateValuation& next) {
  return eval_impl(f, s, &next);
}

// ---------------------------------------------------------------------------
// Printing

std::string to_string(CmpOp op) {
  switch (op) {
    case CmpOp::eq: return "=";
    case CmpOp::ne: return "!=";
    case CmpOp::lt: return "<";
    case CmpOp::le: return "<=";
    case CmpOp::gt: return ">";
    case CmpOp::ge: return ">=";
  }
  return "?";
}

namespace {

std::string operand_string(const Operand& o) {
  if (o.is_const()) return std::to_string(o.offset);
  std::string s = o.var;
  if (o.primed) s += '\'';
  if (o.offset > 0) s += " + " + std::to_string(o.offset);
  if (o.offset < 0) s += " - " + std::to_string(-o.offset);
  return s;
}

void print(const PropFormula& f, std::string& out) {
  using K = PropFormula::Kind;
  switch (f.kind()) {
    case K::constant: out += f.constant_value() ? "true" : "false"; return;
    case K::atom: {
      const Atom& a = f.atom_value();
      out += operand_string(a.lhs) + " " + to_string(a.op) + " " + operand_string(a.rhs);
      return;
    }
    case K::negation: {
      const auto& c = f.children()[0];
      out += '!';
      if (c.kind() == K::constant) {
        print(c, out);
      } else {
        out += '(';
        print(c, out);
        out += ')';
      }
      return;
    }
    case K::conjunction:
    case K::disjunction: {
      const bool conj = f.kind() == K::conjunction;
      bool first = true;
      for (const auto& c : f.children()) {
        if (!first) out += conj ? " & " : " | ";
        first = false;
        bool paren = c.kind() == K::disjunction || (conj && c.kind() == K::conjunction);
        if (paren) out += '(';
        print(c, out);
        if (paren) out += ')';
      }
      return;
    }
  }
}

// ---------------------------------------------------------------------------
// Parsing

class Parser {
 public:
  Parser(std::string_view text, int line) : text_(text), line_(line) {}

  PropFormula parse() {
    PropFormula f = disjunction();
    skip_ws();
    if (pos_ != text_.size()) fail("unexpected '" + std::string(1, text_[pos_]) + "'");
    return f;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError(msg + " at column " + std::to_string(pos_ + 1), line_);
  }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(std::string_view tok) {
    skip_ws();
    if (text_.substr(pos_, tok.size()) == tok) {
      pos_ += tok.size();
      return true;
    }
    return false;
  }

  bool peek_ident() {
    skip_ws();
    return pos_ < text_.size() && (std::isalpha(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_');
  }

  std::string ident() {
    skip_ws();
    std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
      ++pos_;
    if (start == pos_) fail("expected identifier");
    return std::string(text_.substr(start, pos_ - start));
  }

  int integer() {
    skip_ws();
    bool neg = false;
    if (pos_ < text_.size() && text_[pos_] == '-') {
      neg = true;
      ++pos_;
      skip_ws();
    }
    std::size_t start = pos_;
    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    if (start == pos_) fail("expected integer");
    int v = std::stoi(std::string(text_.substr(start, pos_ - start)));
    return neg ? -v : v;
  }

  PropFormula disjunction() {
    std::vector<PropFormula> parts{conjunction()};
    while (true) {
      skip_ws();
      if (accept("||") || accept("|")) {
        parts.push_back(conjunction());
      } else {
        break;
      }
    }
    return parts.size() == 1 ? parts.front() : PropFormula::disjunction(std::move(parts));
  }

  PropFormula conjunction() {
    std::vector<PropFormula> parts{unary()};
    while (true) {
      skip_ws();
      if (accept("&&") || accept("&")) {
        parts.push_back(unary());
      } else {
        break;
      }
    }
    return parts.size() == 1 ? parts.front() : PropFormula::conjunction(std::move(parts));
  }

  PropFormula unary() {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == '!' && text_.substr(pos_, 2) != "!=") {
      ++pos_;
      return PropFormula::negation(unary());
    }
    if (accept("(")) {
      PropFormula f = disjunction();
      if (!accept(")")) fail("expected ')'");
      return f;
    }
    if (peek_ident()) {
      std::size_t save = pos_;
      std::string id = ident();
      if (id == "true" || id == "false") return PropFormula::truth(id == "true");
      pos_ = save;
    }
    Operand lhs = operand();
    CmpOp op = comparison();
    Operand rhs = operand();
    if (lhs.is_const() && rhs.is_const()) fail("comparison between two constants");
    return PropFormula::atom(Atom{std::move(lhs), op, std::move(rhs)});
  }

  CmpOp comparison() {
    if (accept("==")) return CmpOp::eq;
    if (accept("!=")) return CmpOp::ne;
    if (accept("<=")) return CmpOp::le;
    if (accept(">=")) return CmpOp::ge;
    if (accept("=")) return CmpOp::eq;
    if (accept("<")) return CmpOp::lt;
    if (accept(">")) return CmpOp::gt;
    fail("expected comparison operator");
  }

  Operand operand() {
    if (!peek_ident()) return C(integer());
    Operand o = V(ident());
    if (pos_ < text_.size() && text_[pos_] == '\'') {
      o.primed = true;
      ++pos_;
    }
    skip_ws();
    if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) {
      bool minus = text_[pos_] == '-';
      ++pos_;
      int k = integer();
      o.offset = minus ? -k : k;
    }
    return o;
  }

  std::string_view text_;
  int line_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string to_string(const PropFormula& f) {
  std::string out;
  print(f, out);
  return out;
}

PropFormula parse_formula(std::string_view text, int line) { return Parser(text, line).parse(); }

}  // namespace mut
