#include "ptss/format.hpp"

#include <algorithm>
#include <map>
#include <sstream>

#include <json.hpp>

#include "ptss/error.hpp"

namespace ptss {

const char* format_kind_name(FormatKind k) {
  switch (k) {
    case FormatKind::NtMuFXTheta: return "ntmufxtheta";
    case FormatKind::Convex: return "convex";
    case FormatKind::Abstracted: return "abstracted";
    case FormatKind::Obliterated: return "obliterated";
  }
  return "?";
}

FormatKind format_kind_from(const std::string& name) {
  if (name == "ntmufxtheta") return FormatKind::NtMuFXTheta;
  if (name == "convex") return FormatKind::Convex;
  if (name == "abstracted") return FormatKind::Abstracted;
  if (name == "obliterated") return FormatKind::Obliterated;
  throw Error(ErrorCode::FragmentMismatch, "unknown format '" + name + "'");
}

namespace {

// Variable content of a quantitative premise's measured term; combine
// symbols contribute their family variable.
std::set<std::string> dist_term_vars(const TermPtr& t,
                                     const RuleSchema& rule) {
  std::set<std::string> out = t->all_vars();
  std::function<void(const TermPtr&)> scan = [&](const TermPtr& x) {
    if (x->kind() == TermKind::CombineRef) {
      for (const auto& cb : rule.combines) {
        if (cb.sym == x->name()) out.insert(cb.family_var);
      }
    }
    for (const auto& a : x->args()) scan(a);
  };
  scan(t);
  return out;
}

std::set<std::string> measured_vars(const QuantPremise& q,
                                    const RuleSchema& rule) {
  std::set<std::string> out;
  if (q.set.is_set_var) {
    for (const auto& fa : rule.foralls) {
      if (fa.set_var == q.set.set_var) out.insert(fa.binder);
    }
  } else {
    for (const auto& e : q.set.elements) {
      auto vs = e->all_vars();
      out.insert(vs.begin(), vs.end());
    }
  }
  return out;
}

bool contains_combine(const TermPtr& t) {
  if (t->kind() == TermKind::CombineRef) return true;
  return std::any_of(t->args().begin(), t->args().end(), contains_combine);
}

}  // namespace

std::pair<bool, std::string> check_well_founded(const RuleSchema& rule) {
  std::map<std::string, std::set<std::string>> edges;
  auto add_edges = [&](const std::set<std::string>& from, const std::string& to) {
    for (const auto& v : from) edges[v].insert(to);
  };
  for (const auto& p : rule.positives) add_edges(p.source->all_vars(), p.target);
  for (const auto& fa : rule.foralls) {
    if (fa.positive) add_edges(fa.source->all_vars(), fa.target);
  }
  for (const auto& q : rule.quants) {
    std::set<std::string> theta_vars = dist_term_vars(q.dist, rule);
    for (const auto& y : measured_vars(q, rule)) add_edges(theta_vars, y);
  }

  // Cycle search by coloring; a back edge yields the witness chain.
  std::map<std::string, int> color;  // 0 fresh, 1 on stack, 2 done
  std::vector<std::string> stack;
  std::string witness;
  std::function<bool(const std::string&)> dfs = [&](const std::string& v) {
    color[v] = 1;
    stack.push_back(v);
    for (const auto& w : edges[v]) {
      if (color[w] == 1) {
        std::ostringstream out;
        auto it = std::find(stack.begin(), stack.end(), w);
        for (; it != stack.end(); ++it) out << *it << " -> ";
        out << w;
        witness = out.str();
        return false;
      }
      if (color[w] == 0 && !dfs(w)) return false;
    }
    stack.pop_back();
    color[v] = 2;
    return true;
  };
  for (const auto& [v, _] : edges) {
    if (color[v] == 0 && !dfs(v)) return {false, witness};
  }
  return {true, ""};
}

std::pair<bool, std::string> check_linear(const TermPtr& theta,
                                          const std::set<std::string>& vars) {
  switch (theta->kind()) {
    case TermKind::DistVar:
    case TermKind::CombineRef:
      return {true, ""};
    case TermKind::Dirac:
      if (theta->args()[0]->kind() == TermKind::StateVar) return {true, ""};
      if (theta->closed()) return {true, ""};
      return {false, theta->text()};
    case TermKind::ConvexSum: {
      for (const auto& a : theta->args()) {
        auto r = check_linear(a, vars);
        if (!r.first) return r;
      }
      return {true, ""};
    }
    case TermKind::LiftedApp: {
      if (theta->closed()) return {true, ""};
      for (const auto& a : theta->args()) {
        auto r = check_linear(a, vars);
        if (!r.first) return r;
      }
      for (size_t i = 0; i < theta->args().size(); ++i) {
        for (size_t j = i + 1; j < theta->args().size(); ++j) {
          std::set<std::string> vi = theta->args()[i]->all_vars();
          for (const auto& v : theta->args()[j]->all_vars()) {
            if (vi.count(v) && vars.count(v)) return {false, v};
          }
        }
      }
      return {true, ""};
    }
    default:
      return {theta->closed(), theta->closed() ? "" : theta->text()};
  }
}

namespace {

RuleVerdict conforms(const RuleSchema& rule, FormatKind fmt) {
  return {rule.name, fmt, true, "", ""};
}

RuleVerdict violates(const RuleSchema& rule, FormatKind fmt,
                     const std::string& condition, const std::string& witness) {
  return {rule.name, fmt, false, condition, witness};
}

// Does any variable of the set occur inside a dist-sorted argument position
// somewhere in the term?  Positions are judged by the original operator's
// argument sorts: a lifted operator multiplies state-sorted positions but
// must match dist-sorted ones syntactically.
bool in_dist_position(const TermPtr& t, const std::set<std::string>& vars,
                      const Signature& sig, std::string* witness) {
  if (t->kind() == TermKind::StateApp || t->kind() == TermKind::LiftedApp) {
    const OpDecl& decl = sig.op(t->name());
    for (size_t i = 0; i < t->args().size() && i < decl.arg_sorts.size(); ++i) {
      if (decl.arg_sorts[i] == Sort::Dist) {
        for (const auto& v : t->args()[i]->all_vars()) {
          if (vars.count(v)) {
            *witness = v;
            return true;
          }
        }
      }
    }
  }
  for (const auto& a : t->args()) {
    if (in_dist_position(a, vars, sig, witness)) return true;
  }
  return false;
}

std::optional<RuleVerdict> binder_verdict(const RuleSchema& rule,
                                          FormatKind fmt, bool numbered) {
  if (rule.binder_violations.empty()) return std::nullopt;
  BinderViolation best = rule.binder_violations.front();
  for (const auto& v : rule.binder_violations) {
    if (v.condition < best.condition) best = v;
  }
  if (numbered) {
    return violates(rule, fmt, std::to_string(best.condition), best.witness);
  }
  return violates(rule, fmt, "form", best.witness);
}

bool plain_shape_source(const TermPtr& source) {
  if (source->kind() == TermKind::StateVar) return true;  // ntmuxtheta
  if (source->kind() != TermKind::StateApp) return false;
  for (const auto& a : source->args()) {
    if (a->kind() != TermKind::StateVar && a->kind() != TermKind::DistVar) {
      return false;
    }
  }
  return true;
}

}  // namespace

RuleVerdict check_ntmufxtheta(const RuleSchema& rule) {
  const FormatKind fmt = FormatKind::NtMuFXTheta;
  if (auto v = binder_verdict(rule, fmt, /*numbered=*/true)) return *v;
  if (!plain_shape_source(rule.conc_source)) {
    return violates(rule, fmt, "form", rule.conc_source->text());
  }
  for (const auto& q : rule.quants) {
    if (q.cmp == Cmp::Lt || q.cmp == Cmp::Le) {
      return violates(rule, fmt, "comparator",
                      std::string(cmp_text(q.cmp)) + " " + rational_text(q.bound));
    }
  }
  // Conditions 1, 5, 6 bound cardinalities of the schematic sets; in the
  // finitary schema they reduce to scope checks: per-element variables of a
  // block may not escape into other premises or the conclusion.
  std::set<std::string> block_targets;
  std::set<std::string> block_binders;
  for (const auto& fa : rule.foralls) {
    if (fa.positive) block_targets.insert(fa.target);
    block_binders.insert(fa.binder);
  }
  auto escapes = [&](const std::set<std::string>& names, const TermPtr& t) ->
      std::optional<std::string> {
    for (const auto& v : t->all_vars()) {
      if (names.count(v)) return v;
    }
    return std::nullopt;
  };
  for (const auto& p : rule.positives) {
    if (auto v = escapes(block_targets, p.source)) return violates(rule, fmt, "5", *v);
  }
  for (const auto& n : rule.negatives) {
    if (auto v = escapes(block_targets, n.source)) return violates(rule, fmt, "5", *v);
  }
  for (const auto& q : rule.quants) {
    if (auto v = escapes(block_targets, q.dist)) return violates(rule, fmt, "5", *v);
    if (auto v = escapes(block_binders, q.dist)) return violates(rule, fmt, "6", *v);
  }
  if (auto v = escapes(block_targets, rule.conc_target)) {
    return violates(rule, fmt, "5", *v);
  }
  if (auto v = escapes(block_binders, rule.conc_target)) {
    return violates(rule, fmt, "6", *v);
  }
  return conforms(rule, fmt);
}

RuleVerdict check_convex_rule(const RuleSchema& rule, const Signature& sig) {
  const FormatKind fmt = FormatKind::Convex;
  RuleVerdict plain = check_ntmufxtheta(rule);
  if (!plain.conforms) {
    plain.format = fmt;
    return plain;
  }
  // Condition 7: quantitative premises measure convex-combination families
  // with symbolic weights, never a single premise target.
  for (const auto& q : rule.quants) {
    if (q.dist->kind() != TermKind::CombineRef) {
      return violates(rule, fmt, "7",
                      q.dist->text() + "(" + q.set.text() + ") " +
                          cmp_text(q.cmp) + " " + rational_text(q.bound));
    }
  }
  // Condition 8: each combine block is linked to exactly one positive
  // premise through its family variable, and the symbol is used only in
  // quantitative premises.
  for (const auto& cb : rule.combines) {
    int linked = 0;
    for (const auto& p : rule.positives) {
      if (p.target == cb.family_var) ++linked;
    }
    if (linked != 1) return violates(rule, fmt, "8", cb.sym);
    if (contains_combine(rule.conc_target)) {
      std::function<bool(const TermPtr&)> uses = [&](const TermPtr& t) {
        if (t->kind() == TermKind::CombineRef && t->name() == cb.sym) return true;
        return std::any_of(t->args().begin(), t->args().end(), uses);
      };
      if (uses(rule.conc_target)) return violates(rule, fmt, "8", cb.sym);
    }
  }
  // Condition 9: no premise target in a premise source or in a dist-sorted
  // position of the conclusion target.
  std::set<std::string> targets = rule.premise_targets();
  auto source_uses = [&](const TermPtr& src) -> std::optional<std::string> {
    for (const auto& v : src->all_vars()) {
      if (targets.count(v)) return v;
    }
    return std::nullopt;
  };
  for (const auto& p : rule.positives) {
    if (auto v = source_uses(p.source)) return violates(rule, fmt, "9", *v);
  }
  for (const auto& n : rule.negatives) {
    if (auto v = source_uses(n.source)) return violates(rule, fmt, "9", *v);
  }
  for (const auto& fa : rule.foralls) {
    std::set<std::string> vars = fa.source->all_vars();
    vars.erase(fa.binder);
    for (const auto& v : vars) {
      if (targets.count(v)) return violates(rule, fmt, "9", v);
    }
  }
  std::string witness;
  if (in_dist_position(rule.conc_target, targets, sig, &witness)) {
    return violates(rule, fmt, "9", witness);
  }
  // Condition 10: the conclusion target is linear for the premise targets.
  auto lin = check_linear(rule.conc_target, targets);
  if (!lin.first) return violates(rule, fmt, "10", lin.second);
  return conforms(rule, fmt);
}

RuleVerdict check_abstracted_rule(const RuleSchema& rule) {
  const FormatKind fmt = FormatKind::Abstracted;
  RuleVerdict plain = check_ntmufxtheta(rule);
  if (!plain.conforms) {
    plain.format = fmt;
    return plain;
  }
  for (const auto& q : rule.quants) {
    if (q.bound != 0) {
      return violates(rule, fmt, "p=0", "bound " + rational_text(q.bound));
    }
  }
  return conforms(rule, fmt);
}

RuleVerdict check_obliterated_rule(const RuleSchema& rule, const Signature& sig) {
  const FormatKind fmt = FormatKind::Obliterated;
  if (auto v = binder_verdict(rule, fmt, /*numbered=*/false)) return *v;
  if (!plain_shape_source(rule.conc_source)) {
    return violates(rule, fmt, "form", rule.conc_source->text());
  }
  if (!rule.foralls.empty()) {
    return violates(rule, fmt, "form", "set-quantified premise block");
  }
  if (!rule.combines.empty()) {
    return violates(rule, fmt, "form", "convex-combination block");
  }
  for (const auto& q : rule.quants) {
    bool singleton_var = !q.set.is_set_var && q.set.elements.size() == 1 &&
                         q.set.elements[0]->kind() == TermKind::StateVar;
    if (!singleton_var || q.cmp != Cmp::Gt || q.bound != 0) {
      return violates(rule, fmt, "form",
                      q.dist->text() + "(" + q.set.text() + ") " +
                          cmp_text(q.cmp) + " " + rational_text(q.bound));
    }
  }
  std::set<std::string> targets = rule.premise_targets();
  // Condition 1: premise sources avoid premise targets.
  for (const auto& p : rule.positives) {
    for (const auto& v : p.source->all_vars()) {
      if (targets.count(v)) return violates(rule, fmt, "1", v);
    }
  }
  for (const auto& n : rule.negatives) {
    for (const auto& v : n.source->all_vars()) {
      if (targets.count(v)) return violates(rule, fmt, "1", v);
    }
  }
  // Condition 2: measured terms are linear and pairwise share no premise
  // target.
  for (const auto& q : rule.quants) {
    auto lin = check_linear(q.dist, targets);
    if (!lin.first) return violates(rule, fmt, "2", lin.second);
  }
  for (size_t i = 0; i < rule.quants.size(); ++i) {
    for (size_t j = i + 1; j < rule.quants.size(); ++j) {
      for (const auto& v : rule.quants[i].dist->all_vars()) {
        if (targets.count(v) && rule.quants[j].dist->all_vars().count(v)) {
          return violates(rule, fmt, "2", v);
        }
      }
    }
  }
  // Condition 3: conclusion target linear, disjoint from measured premise
  // targets, no target in a dist-sorted position.
  auto lin = check_linear(rule.conc_target, targets);
  if (!lin.first) return violates(rule, fmt, "3", lin.second);
  for (const auto& q : rule.quants) {
    for (const auto& v : q.dist->all_vars()) {
      if (targets.count(v) && rule.conc_target->all_vars().count(v)) {
        return violates(rule, fmt, "3", v);
      }
    }
  }
  std::string witness;
  if (in_dist_position(rule.conc_target, targets, sig, &witness)) {
    return violates(rule, fmt, "3", witness);
  }
  return conforms(rule, fmt);
}

FormatReport check_format(const SpecAst& spec, FormatKind kind) {
  FormatReport report;
  report.format = kind;
  for (const auto& rule : spec.rules) {
    switch (kind) {
      case FormatKind::NtMuFXTheta:
        report.rules.push_back(check_ntmufxtheta(rule));
        break;
      case FormatKind::Convex:
        report.rules.push_back(check_convex_rule(rule, spec.sig));
        break;
      case FormatKind::Abstracted:
        report.rules.push_back(check_abstracted_rule(rule));
        break;
      case FormatKind::Obliterated:
        report.rules.push_back(check_obliterated_rule(rule, spec.sig));
        break;
    }
    auto wf = check_well_founded(rule);
    report.well_founded = report.well_founded && wf.first;
  }
  if (kind == FormatKind::Convex) {
    report.convex_closed = report.all_conform();
  }
  return report;
}

FormatReport check_convex_format(const SpecAst& spec) {
  return check_format(spec, FormatKind::Convex);
}
FormatReport check_abstracted_format(const SpecAst& spec) {
  return check_format(spec, FormatKind::Abstracted);
}
FormatReport check_obliterated_format(const SpecAst& spec) {
  return check_format(spec, FormatKind::Obliterated);
}

bool FormatReport::all_conform() const {
  return std::all_of(rules.begin(), rules.end(),
                     [](const RuleVerdict& v) { return v.conforms; });
}

std::string FormatReport::text() const {
  std::ostringstream out;
  for (const auto& v : rules) {
    out << v.rule << " [" << format_kind_name(v.format) << "] ";
    if (v.conforms) {
      out << "conforms\n";
    } else {
      out << "violates condition " << v.condition << " (witness: " << v.witness
          << ")\n";
    }
  }
  out << "well-founded: " << (well_founded ? "yes" : "no") << "\n";
  if (format == FormatKind::Convex) {
    out << "convex-closed: " << (convex_closed ? "yes" : "no") << "\n";
  }
  return out.str();
}

std::string FormatReport::json() const {
  nlohmann::json doc;
  doc["rules"] = nlohmann::json::array();
  for (const auto& v : rules) {
    nlohmann::json entry;
    entry["rule"] = v.rule;
    entry["format"] = format_kind_name(v.format);
    entry["verdict"] = v.conforms ? "conforms" : "violates";
    if (!v.conforms) {
      entry["condition"] = v.condition;
      entry["witness"] = v.witness;
    }
    doc["rules"].push_back(entry);
  }
  doc["well_founded"] = well_founded;
  if (format == FormatKind::Convex) doc["convex_closed"] = convex_closed;
  return doc.dump(2);
}

}  // namespace ptss
