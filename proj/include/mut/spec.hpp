// GR(1)-shaped specifications, assume-guarantee test contracts and their merge.
#pragma once

#include "mut/formula.hpp"

#include <optional>
#include <string>
#include <vector>

namespace mut {

class SpecError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// init ∧ □safety ∧ □◊recurrence. Safety conjuncts may mention primed variables,
/// in which case they constrain consecutive pairs of states.
struct GR1Spec {
  PropFormula init;
  std::vector<PropFormula> safety;
  std::vector<PropFormula> recurrence;

  friend bool operator==(const GR1Spec&, const GR1Spec&) = default;
};

GR1Spec conjoin(const GR1Spec& a, const GR1Spec& b);

/// Parses `INIT`, `SAFE` and `GOAL` lines; `#` starts a comment.
GR1Spec parse_gr1(std::string_view text);
std::string print_gr1(const GR1Spec& s);

struct TestContract {
  SchemaPtr schema;  // variables the contract talks about
  GR1Spec assumption;
  GR1Spec guarantee;
  bool saturated = false;
};

TestContract saturate(TestContract c);

struct TemporalRefinement {
  PropFormula g_t1;
  PropFormula g_t2;
};

struct MergedSpec {
  SchemaPtr schema;
  TestContract unit1;
  TestContract unit2;
  GR1Spec assumption;  // a1 ∧ a2
  std::optional<TemporalRefinement> temporal_refinement;
  // Unit test goals, i.e. the single guarantee recurrence of each unit.
  PropFormula psi1;
  PropFormula psi2;
  // Case split over the auxiliary copy index (variable aux_copy).
  PropFormula merged_recurrence;

  // Goals as seen by the auxiliary graph. With a temporal refinement each goal
  // must be reached while the other unit's waiting condition is false.
  PropFormula aux_psi1() const;
  PropFormula aux_psi2() const;
};

inline constexpr const char* kAuxCopyVar = "aux_copy";

MergedSpec strong_merge(const TestContract& c1, const TestContract& c2);
MergedSpec refine_temporal(const MergedSpec& m, const PropFormula& g_t1, const PropFormula& g_t2);

// ---------------------------------------------------------------------------
// Finite-trace monitors

using Trace = std::vector<StateValuation>;

/// Incremental monitor: feed states one by one.
class GR1Monitor {
 public:
  GR1Monitor() = default;
  explicit GR1Monitor(const GR1Spec* spec);

  void step(const StateValuation& s);
  std::size_t length() const { return length_; }
  bool safety_ok() const { return init_ok_ && safe_ok_; }
  bool accepted() const;
  bool recurrence_seen(std::size_t i) const { return seen_[i]; }

 private:
  const GR1Spec* spec_ = nullptr;
  std::size_t length_ = 0;
  bool init_ok_ = true;
  bool safe_ok_ = true;
  std::vector<bool> seen_;
  std::optional<StateValuation> prev_;
};

bool monitor(const GR1Spec& s, const Trace& t);
/// Contract verdict: a saturated contract accepts ¬a ∨ g, an unsaturated one just g.
bool monitor(const TestContract& c, const Trace& t);

struct MergedVerdicts {
  bool assumption = false;  // a_m
  bool unit1 = false;       // a1 → g1
  bool unit2 = false;       // a2 → g2
  bool merged = false;      // ¬a1 ∨ ¬a2 ∨ (g1 ∧ g2)
  bool refined = false;     // merged plus the two exclusivity witnesses (equals merged without refinement)
  bool only_t1_step = false;  // some step with g_t1 ∧ ¬g_t2
  bool only_t2_step = false;  // some step with ¬g_t1 ∧ g_t2
};

MergedVerdicts monitor(const MergedSpec& m, const Trace& t);

}  // namespace mut
