// Propositional formulas over discrete state valuations.
#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace mut {

class EvalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, int line)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

struct Domain {
  int lo = 0;
  int hi = 0;
  bool contains(int v) const { return v >= lo && v <= hi; }
  int size() const { return hi - lo + 1; }
  friend bool operator==(const Domain&, const Domain&) = default;
};

struct VarDecl {
  std::string name;
  Domain domain;
};

/// Ordered set of declared variables with finite integer domains.
class Schema {
 public:
  Schema() = default;
  explicit Schema(std::vector<VarDecl> vars);

  std::size_t size() const { return vars_.size(); }
  const VarDecl& operator[](std::size_t i) const { return vars_[i]; }
  const std::vector<VarDecl>& vars() const { return vars_; }
  std::optional<std::size_t> index(std::string_view name) const;

  /// Concatenation of two schemas with disjoint names; throws otherwise.
  static Schema concat(const Schema& a, const Schema& b);

  friend bool operator==(const Schema& a, const Schema& b);

 private:
  std::vector<VarDecl> vars_;
  std::unordered_map<std::string, std::size_t> index_;
};

using SchemaPtr = std::shared_ptr<const Schema>;

class StateValuation {
 public:
  StateValuation() = default;
  StateValuation(SchemaPtr schema, std::vector<int> values);

  const SchemaPtr& schema() const { return schema_; }
  const std::vector<int>& values() const { return values_; }
  std::optional<int> get(std::string_view name) const;
  int at(std::string_view name) const;  // throws EvalError when absent
  bool in_domain() const;

  /// Joins two valuations over disjoint schemas.
  static StateValuation join(const StateValuation& a, const StateValuation& b, SchemaPtr joint);

  std::string to_string() const;

  friend bool operator==(const StateValuation& a, const StateValuation& b);

 private:
  SchemaPtr schema_;
  std::vector<int> values_;
};

enum class CmpOp : std::uint8_t { eq, ne, lt, le, gt, ge };

/// Either an integer constant or `var[']` plus a constant offset.
struct Operand {
  std::string var;  // empty for a constant
  bool primed = false;
  int offset = 0;   // the value itself for a constant

  bool is_const() const { return var.empty(); }
  // operator== builds formulas (see below); structural comparison is same().
  bool same(const Operand& o) const { return var == o.var && primed == o.primed && offset == o.offset; }
};

struct Atom {
  Operand lhs;
  CmpOp op = CmpOp::eq;
  Operand rhs;
  bool same(const Atom& o) const { return op == o.op && lhs.same(o.lhs) && rhs.same(o.rhs); }
};

class PropFormula {
 public:
  enum class Kind : std::uint8_t { constant, atom, negation, conjunction, disjunction };

  PropFormula();  // true
  static PropFormula truth(bool value);
  static PropFormula atom(Atom a);
  static PropFormula negation(PropFormula f);
  static PropFormula conjunction(std::vector<PropFormula> fs);
  static PropFormula disjunction(std::vector<PropFormula> fs);

  Kind kind() const { return node_->kind; }
  bool constant_value() const { return node_->value; }
  const Atom& atom_value() const { return node_->atom; }
  const std::vector<PropFormula>& children() const { return node_->children; }

  /// Structural equality.
  friend bool operator==(const PropFormula& a, const PropFormula& b);

  /// Variable names referenced; primed references are reported with a trailing '.
  std::set<std::string> variables() const;
  bool mentions_primed() const;

 private:
  struct Node {
    Kind kind = Kind::constant;
    bool value = true;
    Atom atom;
    std::vector<PropFormula> children;
  };
  explicit PropFormula(std::shared_ptr<const Node> n) : node_(std::move(n)) {}
  std::shared_ptr<const Node> node_;
};

// Builders: V("x") == V("x1") + 1 && !(V("y") == 2)
inline Operand V(std::string name) { return Operand{std::move(name), false, 0}; }
inline Operand Next(std::string name) { return Operand{std::move(name), true, 0}; }
inline Operand C(int value) { return Operand{{}, false, value}; }
inline Operand operator+(Operand o, int k) { o.offset += k; return o; }
inline Operand operator-(Operand o, int k) { o.offset -= k; return o; }

PropFormula cmp(Operand lhs, CmpOp op, Operand rhs);
inline PropFormula operator==(Operand a, Operand b) { return cmp(std::move(a), CmpOp::eq, std::move(b)); }
inline PropFormula operator!=(Operand a, Operand b) { return cmp(std::move(a), CmpOp::ne, std::move(b)); }
inline PropFormula operator<(Operand a, Operand b) { return cmp(std::move(a), CmpOp::lt, std::move(b)); }
inline PropFormula operator<=(Operand a, Operand b) { return cmp(std::move(a), CmpOp::le, std::move(b)); }
inline PropFormula operator>(Operand a, Operand b) { return cmp(std::move(a), CmpOp::gt, std::move(b)); }
inline PropFormula operator>=(Operand a, Operand b) { return cmp(std::move(a), CmpOp::ge, std::move(b)); }
inline PropFormula operator==(Operand a, int b) { return std::move(a) == C(b); }
inline PropFormula operator!=(Operand a, int b) { return std::move(a) != C(b); }
inline PropFormula operator<(Operand a, int b) { return std::move(a) < C(b); }
inline PropFormula operator<=(Operand a, int b) { return std::move(a) <= C(b); }
inline PropFormula operator>(Operand a, int b) { return std::move(a) > C(b); }
inline PropFormula operator>=(Operand a, int b) { return std::move(a) >= C(b); }

PropFormula operator!(const PropFormula& f);
PropFormula operator&&(const PropFormula& a, const PropFormula& b);
PropFormula operator||(const PropFormula& a, const PropFormula& b);
PropFormula all_of(std::vector<PropFormula> fs);
PropFormula any_of(std::vector<PropFormula> fs);
PropFormula implies(const PropFormula& a, const PropFormula& b);

/// Evaluates over a single state; primed references raise EvalError.
bool eval(const PropFormula& f, const StateValuation& s);
/// Evaluates over a transition; primed references read `next`.
bool eval(const PropFormula& f, const StateValuation& s, const StateValuation& next);

std::string to_string(const PropFormula& f);
std::string to_string(CmpOp op);

/// Parses the infix expression syntax produced by to_string().
PropFormula parse_formula(std::string_view text, int line = 1);

}  // namespace mut
