#pragma once

#include <string>

#include "ptss/formula.hpp"
#include "ptss/spec.hpp"

namespace ptss {

/// Parses a .ptss specification.  Name resolution, sort checking, and
/// binder-distinctness run at parse time; any defect raises an Error whose
/// diagnostics carry line/column.
SpecAst parse_spec(const std::string& text);

/// Like parse_spec, but rules that only violate binder distinctness are kept
/// with the defect recorded on the rule, so the format checker can report
/// them under the matching format condition.
SpecAst parse_spec_lenient(const std::string& text);

/// Parses a state or distribution term against a spec's signature and named
/// terms.  Variables are allowed; their sorts are inferred from position.
TermPtr parse_term(const std::string& text, const SpecAst& spec);

FormulaPtr parse_formula(const std::string& text);

std::string render(const SpecAst& spec);
std::string render(const RuleSchema& rule);
inline std::string render(const TermPtr& t) { return t->text(); }
inline std::string render(const FormulaPtr& f) { return f->text(); }

}  // namespace ptss
