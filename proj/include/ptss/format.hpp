#pragma once

#include <string>
#include <utility>
#include <vector>

#include "ptss/spec.hpp"

namespace ptss {

enum class FormatKind { NtMuFXTheta, Convex, Abstracted, Obliterated };

const char* format_kind_name(FormatKind k);
FormatKind format_kind_from(const std::string& name);

struct RuleVerdict {
  std::string rule;
  FormatKind format = FormatKind::NtMuFXTheta;
  bool conforms = true;
  std::string condition;  // violated condition: a number, "form", "comparator", or "p=0"
  std::string witness;    // offending variable or subterm
};

struct FormatReport {
  FormatKind format = FormatKind::NtMuFXTheta;
  std::vector<RuleVerdict> rules;
  bool well_founded = true;
  bool convex_closed = true;  // symbolic weight families keep rule sets closed

  bool all_conform() const;
  std::string text() const;
  std::string json() const;
};

/// Acyclicity of the rule's variable dependency graph (finite graphs have no
/// infinite backward chain exactly when they have no cycle).  On failure the
/// witness spells out one cycle.
std::pair<bool, std::string> check_well_founded(const RuleSchema& rule);

/// Linearity of a distribution term for a set of distribution variables: no
/// variable of the set may reach two different arguments of one lifted
/// operator.  On failure the witness names the shared variable or the
/// offending subterm.
std::pair<bool, std::string> check_linear(const TermPtr& theta,
                                          const std::set<std::string>& vars);

RuleVerdict check_ntmufxtheta(const RuleSchema& rule);
RuleVerdict check_convex_rule(const RuleSchema& rule, const Signature& sig);
RuleVerdict check_abstracted_rule(const RuleSchema& rule);
RuleVerdict check_obliterated_rule(const RuleSchema& rule, const Signature& sig);

FormatReport check_format(const SpecAst& spec, FormatKind kind);
FormatReport check_convex_format(const SpecAst& spec);
FormatReport check_abstracted_format(const SpecAst& spec);
FormatReport check_obliterated_format(const SpecAst& spec);

}  // namespace ptss
