#pragma once

#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "ptss/term.hpp"

namespace ptss {

enum class Cmp { Gt, Ge, Lt, Le };

inline const char* cmp_text(Cmp c) {
  switch (c) {
    case Cmp::Gt: return ">";
    case Cmp::Ge: return ">=";
    case Cmp::Lt: return "<";
    case Cmp::Le: return "<=";
  }
  return "?";
}

struct PositivePremise {
  TermPtr source;
  std::string action;
  std::string target;  // a distribution variable, or a combine family variable
};

struct NegativePremise {
  TermPtr source;
  std::string action;
};

// Measured set of a quantitative premise: either an explicit finite set of
// state terms (possibly containing variables) or a set variable standing for
// a schematically infinite set of state variables.
struct MeasureSet {
  bool is_set_var = false;
  std::string set_var;
  std::vector<TermPtr> elements;

  std::string text() const;
};

struct QuantPremise {
  TermPtr dist;
  MeasureSet set;
  Cmp cmp = Cmp::Ge;
  Rational bound;
};

// One per-element premise template, quantified over a set variable:
//   forall y in Y: y -b-> mu_y      or      forall y in Y: y -/b->
struct ForallBlock {
  std::string binder;
  std::string set_var;
  bool positive = true;
  TermPtr source;           // template source, mentions the binder
  std::string action;
  std::string target;       // bound per element; empty for negative bodies
};

// A symbolic convex combination over the transition family of one positive
// premise.  "combine M as m" makes M the family variable (it must be the
// target of exactly one positive premise) and m a distribution-term symbol
// whose weights stay existential; they are resolved by LP feasibility when
// the rule is instantiated.
struct CombineBlock {
  std::string family_var;
  std::string sym;
};

// A binder-distinctness defect detected while parsing, kept on the rule so
// the format checker can report it under the matching format condition.
struct BinderViolation {
  int condition;        // 2, 3, or 4
  std::string witness;  // the offending variable
};

struct RuleSchema {
  std::string name;
  std::vector<PositivePremise> positives;
  std::vector<NegativePremise> negatives;
  std::vector<QuantPremise> quants;
  std::vector<ForallBlock> foralls;
  std::vector<CombineBlock> combines;
  TermPtr conc_source;
  std::string conc_action;
  TermPtr conc_target;
  std::vector<BinderViolation> binder_violations;

  /// Names of all positive-premise target variables, including per-element
  /// targets of forall blocks and combine family variables.
  std::set<std::string> premise_targets() const;
  /// Variables of the conclusion source.
  std::set<std::string> source_binders() const;
};

struct SpecAst {
  std::string name;
  std::vector<std::string> actions;
  Signature sig;
  std::vector<RuleSchema> rules;
  std::map<std::string, TermPtr> defs;
  std::vector<std::string> def_order;

  bool is_action(const std::string& a) const;
  /// Resolves a named term, or returns null.
  TermPtr lookup_def(const std::string& name) const;
};

}  // namespace ptss
