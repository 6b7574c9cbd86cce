#include "ptss/term.hpp"

#include <algorithm>
#include <sstream>

namespace ptss {

void Signature::declare(const std::string& name, std::vector<Sort> arg_sorts) {
  if (ops_.count(name)) {
    throw Error(ErrorCode::RebindingError, "operator '" + name + "' declared twice");
  }
  ops_[name] = OpDecl{name, std::move(arg_sorts)};
}

const OpDecl& Signature::op(const std::string& name) const {
  auto it = ops_.find(name);
  if (it == ops_.end()) {
    throw Error(ErrorCode::UnknownOperator, "operator '" + name + "' not declared");
  }
  return it->second;
}

Term::Term(TermKind k, std::string name, std::vector<TermPtr> args,
           std::vector<Rational> weights)
    : kind_(k), name_(std::move(name)), args_(std::move(args)),
      weights_(std::move(weights)) {}

TermPtr Term::state_var(const std::string& name) {
  return TermPtr(new Term(TermKind::StateVar, name, {}, {}));
}

TermPtr Term::dist_var(const std::string& name) {
  return TermPtr(new Term(TermKind::DistVar, name, {}, {}));
}

TermPtr Term::state_app(const std::string& op, std::vector<TermPtr> args) {
  return TermPtr(new Term(TermKind::StateApp, op, std::move(args), {}));
}

TermPtr Term::lifted_app(const std::string& op, std::vector<TermPtr> args) {
  return TermPtr(new Term(TermKind::LiftedApp, op, std::move(args), {}));
}

TermPtr Term::dirac(TermPtr state_term) {
  return TermPtr(new Term(TermKind::Dirac, "dirac", {std::move(state_term)}, {}));
}

TermPtr Term::convex_sum(std::vector<Rational> weights,
                         std::vector<TermPtr> args) {
  if (weights.size() != args.size() || args.empty()) {
    throw Error(ErrorCode::BadWeights, "weight/argument count mismatch");
  }
  Rational total = 0;
  for (const auto& w : weights) {
    if (w <= 0) throw Error(ErrorCode::BadWeights, "weights must be positive");
    total += w;
  }
  if (total != 1) throw Error(ErrorCode::BadWeights, "weights must sum to 1");
  if (args.size() == 1) return args[0];
  if (args.size() == 2) {
    return TermPtr(new Term(TermKind::ConvexSum, "", std::move(args),
                            std::move(weights)));
  }
  // Canonical form is a right-nested chain of binary sums.
  std::vector<Rational> rest_w(weights.begin() + 1, weights.end());
  Rational rest_total = 1 - weights[0];
  for (auto& w : rest_w) w /= rest_total;
  TermPtr rest =
      convex_sum(rest_w, std::vector<TermPtr>(args.begin() + 1, args.end()));
  return TermPtr(new Term(TermKind::ConvexSum, "", {args[0], rest},
                          {weights[0], rest_total}));
}

TermPtr Term::combine_ref(const std::string& sym) {
  return TermPtr(new Term(TermKind::CombineRef, sym, {}, {}));
}

bool Term::is_state_sorted() const {
  return kind_ == TermKind::StateVar || kind_ == TermKind::StateApp;
}

const std::string& Term::text() const {
  if (!text_.empty()) return text_;
  std::ostringstream out;
  switch (kind_) {
    case TermKind::StateVar:
    case TermKind::DistVar:
    case TermKind::CombineRef:
      out << name_;
      break;
    case TermKind::StateApp:
      if (args_.empty()) {
        out << name_;
      } else if (args_.size() == 2 && name_ == "+") {
        out << "(" << args_[0]->text() << " + " << args_[1]->text() << ")";
      } else if (args_.size() == 1 && !args_[0]->is_state_sorted()) {
        // Action prefix: unary operator over a distribution term.
        out << name_ << "." << args_[0]->text();
      } else {
        out << name_ << "(";
        for (size_t i = 0; i < args_.size(); ++i) {
          if (i) out << ", ";
          out << args_[i]->text();
        }
        out << ")";
      }
      break;
    case TermKind::LiftedApp:
      out << "$" << name_ << "(";
      for (size_t i = 0; i < args_.size(); ++i) {
        if (i) out << ", ";
        out << args_[i]->text();
      }
      out << ")";
      break;
    case TermKind::Dirac:
      out << "dirac(" << args_[0]->text() << ")";
      break;
    case TermKind::ConvexSum:
      out << "(" << args_[0]->text() << " (+) " << rational_text(weights_[0])
          << " " << args_[1]->text() << ")";
      break;
  }
  text_ = out.str();
  return text_;
}

bool Term::closed() const {
  switch (kind_) {
    case TermKind::StateVar:
    case TermKind::DistVar:
    case TermKind::CombineRef:
      return false;
    default:
      return std::all_of(args_.begin(), args_.end(),
                         [](const TermPtr& a) { return a->closed(); });
  }
}

void Term::collect_vars(std::set<std::string>& state_vars,
                        std::set<std::string>& dist_vars) const {
  switch (kind_) {
    case TermKind::StateVar:
      state_vars.insert(name_);
      return;
    case TermKind::DistVar:
      dist_vars.insert(name_);
      return;
    case TermKind::CombineRef:
      return;
    default:
      for (const auto& a : args_) a->collect_vars(state_vars, dist_vars);
  }
}

std::set<std::string> Term::dist_vars() const {
  std::set<std::string> sv, dv;
  collect_vars(sv, dv);
  return dv;
}

std::set<std::string> Term::all_vars() const {
  std::set<std::string> sv, dv;
  collect_vars(sv, dv);
  sv.insert(dv.begin(), dv.end());
  return sv;
}

FiniteDistribution FiniteDistribution::dirac(const TermPtr& t) {
  FiniteDistribution d;
  d.entries_[t] = 1;
  return d;
}

FiniteDistribution FiniteDistribution::from_entries(
    std::vector<std::pair<TermPtr, Rational>> entries) {
  FiniteDistribution d;
  Rational total = 0;
  for (auto& [t, p] : entries) {
    if (p < 0) throw Error(ErrorCode::BadWeights, "negative mass");
    if (p == 0) continue;
    d.entries_[t] += p;
    total += p;
  }
  if (total != 1) {
    throw Error(ErrorCode::BadWeights,
                "distribution mass is " + rational_text(total) + ", not 1");
  }
  return d;
}

Rational FiniteDistribution::mass(const TermPtr& t) const {
  auto it = entries_.find(t);
  return it == entries_.end() ? Rational(0) : it->second;
}

Rational FiniteDistribution::total_mass() const {
  Rational total = 0;
  for (const auto& [t, p] : entries_) total += p;
  return total;
}

std::string FiniteDistribution::text() const {
  std::ostringstream out;
  out << "{";
  bool first = true;
  for (const auto& [t, p] : entries_) {
    if (!first) out << ", ";
    first = false;
    out << t->text() << ": " << rational_text(p);
  }
  out << "}";
  return out.str();
}

void Substitution::bind_state(const std::string& var, TermPtr t) {
  state_[var] = std::move(t);
}

void Substitution::bind_dist(const std::string& var, TermPtr t) {
  dist_[var] = std::move(t);
}

const TermPtr* Substitution::state_binding(const std::string& var) const {
  auto it = state_.find(var);
  return it == state_.end() ? nullptr : &it->second;
}

const TermPtr* Substitution::dist_binding(const std::string& var) const {
  auto it = dist_.find(var);
  return it == dist_.end() ? nullptr : &it->second;
}

bool Substitution::has(const std::string& var) const {
  return state_.count(var) || dist_.count(var);
}

Substitution Substitution::then(const Substitution& later) const {
  Substitution out = later;
  for (const auto& [v, t] : state_) out.state_[v] = apply_subst(later, t);
  for (const auto& [v, t] : dist_) out.dist_[v] = apply_subst(later, t);
  return out;
}

Sort check_sort(const TermPtr& term, const Signature& sig) {
  switch (term->kind()) {
    case TermKind::StateVar:
      return Sort::State;
    case TermKind::DistVar:
    case TermKind::CombineRef:
      return Sort::Dist;
    case TermKind::StateApp: {
      const OpDecl& decl = sig.op(term->name());
      if (decl.arg_sorts.size() != term->args().size()) {
        throw Error(ErrorCode::ArityMismatch,
                    "operator '" + term->name() + "' expects " +
                        std::to_string(decl.arg_sorts.size()) + " arguments");
      }
      for (size_t i = 0; i < term->args().size(); ++i) {
        Sort got = check_sort(term->args()[i], sig);
        if (got != decl.arg_sorts[i]) {
          throw Error(ErrorCode::SortMismatch,
                      "argument " + std::to_string(i + 1) + " of '" +
                          term->name() + "' has sort " + sort_name(got) +
                          ", expected " + sort_name(decl.arg_sorts[i]));
        }
      }
      return Sort::State;
    }
    case TermKind::LiftedApp: {
      const OpDecl& decl = sig.op(term->name());
      if (decl.arg_sorts.size() != term->args().size()) {
        throw Error(ErrorCode::ArityMismatch,
                    "lifted operator '$" + term->name() + "' expects " +
                        std::to_string(decl.arg_sorts.size()) + " arguments");
      }
      for (const auto& a : term->args()) {
        if (check_sort(a, sig) != Sort::Dist) {
          throw Error(ErrorCode::SortMismatch,
                      "arguments of lifted '$" + term->name() +
                          "' must be distribution terms");
        }
      }
      return Sort::Dist;
    }
    case TermKind::Dirac:
      if (check_sort(term->args()[0], sig) != Sort::State) {
        throw Error(ErrorCode::SortMismatch, "dirac expects a state term");
      }
      return Sort::Dist;
    case TermKind::ConvexSum:
      for (const auto& a : term->args()) {
        if (check_sort(a, sig) != Sort::Dist) {
          throw Error(ErrorCode::SortMismatch,
                      "convex sum arguments must be distribution terms");
        }
      }
      return Sort::Dist;
  }
  throw Error(ErrorCode::SortMismatch, "unreachable");
}

TermPtr apply_subst(const Substitution& rho, const TermPtr& term) {
  switch (term->kind()) {
    case TermKind::StateVar: {
      const TermPtr* b = rho.state_binding(term->name());
      return b ? *b : term;
    }
    case TermKind::DistVar: {
      const TermPtr* b = rho.dist_binding(term->name());
      return b ? *b : term;
    }
    case TermKind::CombineRef:
      return term;
    default: {
      std::vector<TermPtr> args;
      args.reserve(term->args().size());
      bool changed = false;
      for (const auto& a : term->args()) {
        args.push_back(apply_subst(rho, a));
        changed = changed || args.back() != a;
      }
      if (!changed) return term;
      switch (term->kind()) {
        case TermKind::StateApp:
          return Term::state_app(term->name(), std::move(args));
        case TermKind::LiftedApp:
          return Term::lifted_app(term->name(), std::move(args));
        case TermKind::Dirac:
          return Term::dirac(args[0]);
        case TermKind::ConvexSum:
          return Term::convex_sum(term->weights(), std::move(args));
        default:
          break;
      }
      throw Error(ErrorCode::SortMismatch, "unreachable");
    }
  }
}

FiniteDistribution eval_dist(const TermPtr& theta, const Signature& sig) {
  switch (theta->kind()) {
    case TermKind::Dirac: {
      const TermPtr& t = theta->args()[0];
      if (!t->closed()) {
        throw Error(ErrorCode::OpenTerm, "cannot evaluate " + theta->text());
      }
      return FiniteDistribution::dirac(t);
    }
    case TermKind::ConvexSum: {
      std::vector<FiniteDistribution> parts;
      parts.reserve(theta->args().size());
      for (const auto& a : theta->args()) parts.push_back(eval_dist(a, sig));
      return convex_combine(theta->weights(), parts);
    }
    case TermKind::LiftedApp: {
      const OpDecl& decl = sig.op(theta->name());
      if (decl.arg_sorts.size() != theta->args().size()) {
        throw Error(ErrorCode::ArityMismatch,
                    "lifted '$" + theta->name() + "' applied to wrong arity");
      }
      if (!theta->closed()) {
        throw Error(ErrorCode::OpenTerm, "cannot evaluate " + theta->text());
      }
      // Enumerate support tuples over the state-sorted positions; positions
      // that are dist-sorted in f keep the parameter term itself.
      std::vector<std::vector<std::pair<TermPtr, Rational>>> choices;
      for (size_t i = 0; i < theta->args().size(); ++i) {
        std::vector<std::pair<TermPtr, Rational>> pos;
        if (decl.arg_sorts[i] == Sort::State) {
          FiniteDistribution pi = eval_dist(theta->args()[i], sig);
          for (const auto& [t, p] : pi.support()) pos.emplace_back(t, p);
        } else {
          pos.emplace_back(theta->args()[i], Rational(1));
        }
        choices.push_back(std::move(pos));
      }
      std::vector<std::pair<TermPtr, Rational>> entries;
      std::vector<size_t> idx(choices.size(), 0);
      while (true) {
        std::vector<TermPtr> args;
        Rational p = 1;
        for (size_t i = 0; i < choices.size(); ++i) {
          args.push_back(choices[i][idx[i]].first);
          p *= choices[i][idx[i]].second;
        }
        entries.emplace_back(Term::state_app(theta->name(), std::move(args)), p);
        size_t k = 0;
        for (; k < choices.size(); ++k) {
          if (++idx[k] < choices[k].size()) break;
          idx[k] = 0;
        }
        if (k == choices.size()) break;
      }
      return FiniteDistribution::from_entries(std::move(entries));
    }
    case TermKind::DistVar:
    case TermKind::CombineRef:
      throw Error(ErrorCode::OpenTerm, "cannot evaluate open term " + theta->text());
    default:
      throw Error(ErrorCode::SortMismatch,
                  theta->text() + " is not a distribution term");
  }
}

Rational measure(const FiniteDistribution& pi, const TermSet& xs) {
  Rational total = 0;
  for (const auto& [t, p] : pi.support()) {
    if (xs.count(t)) total += p;
  }
  return total;
}

FiniteDistribution convex_combine(const std::vector<Rational>& weights,
                                  const std::vector<FiniteDistribution>& ds) {
  if (weights.size() != ds.size() || ds.empty()) {
    throw Error(ErrorCode::BadWeights, "weight/distribution count mismatch");
  }
  Rational total = 0;
  for (const auto& w : weights) {
    if (w <= 0) throw Error(ErrorCode::BadWeights, "weights must be positive");
    total += w;
  }
  if (total != 1) throw Error(ErrorCode::BadWeights, "weights must sum to 1");
  std::vector<std::pair<TermPtr, Rational>> entries;
  for (size_t i = 0; i < ds.size(); ++i) {
    for (const auto& [t, p] : ds[i].support()) {
      entries.emplace_back(t, weights[i] * p);
    }
  }
  return FiniteDistribution::from_entries(std::move(entries));
}

bool distributivity_check(const std::string& f, size_t j,
                          const std::vector<TermPtr>& args,
                          const std::vector<Rational>& weights,
                          const std::vector<TermPtr>& mixed,
                          const Signature& sig) {
  std::vector<TermPtr> lhs_args = args;
  lhs_args[j] = Term::convex_sum(weights, mixed);
  FiniteDistribution lhs = eval_dist(Term::lifted_app(f, lhs_args), sig);

  std::vector<FiniteDistribution> parts;
  for (const auto& m : mixed) {
    std::vector<TermPtr> inner = args;
    inner[j] = m;
    parts.push_back(eval_dist(Term::lifted_app(f, inner), sig));
  }
  FiniteDistribution rhs = convex_combine(weights, parts);
  return lhs == rhs;
}

}  // namespace ptss
