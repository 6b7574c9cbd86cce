#include "ptss/derivation.hpp"

#include <algorithm>
#include <functional>
#include <random>

#include "ptss/error.hpp"
#include "ptss/format.hpp"
#include "ptss/lp.hpp"

namespace ptss {

namespace {

// Symbolic transition store indexed by source and action.
class Store {
 public:
  bool add(const TermPtr& s, const std::string& a, const TermPtr& target) {
    return by_source_[s][a].insert(target).second;
  }
  const TermSet& targets(const TermPtr& s, const std::string& a) const {
    static const TermSet empty;
    auto it = by_source_.find(s);
    if (it == by_source_.end()) return empty;
    auto jt = it->second.find(a);
    return jt == it->second.end() ? empty : jt->second;
  }
  bool has_any(const TermPtr& s, const std::string& a) const {
    return !targets(s, a).empty();
  }
  std::set<Transition> flatten() const {
    std::set<Transition> out;
    for (const auto& [s, by_action] : by_source_) {
      for (const auto& [a, tgts] : by_action) {
        for (const auto& t : tgts) out.insert({s, a, t});
      }
    }
    return out;
  }

 private:
  std::map<TermPtr, std::map<std::string, TermSet>, TermLess> by_source_;
};

// Negative literals are evaluated against the other component of the
// 3-valued pair.  AllTransitions stands for the initial "possibly
// everything" table, under which no negative literal holds.
struct NegOracle {
  enum Mode { AllTransitions, Table } mode = AllTransitions;
  const Store* table = nullptr;

  bool negative_holds(const TermPtr& s, const std::string& a) const {
    if (mode == AllTransitions) return false;
    return !table->has_any(s, a);
  }
};

bool satisfies(const Rational& value, Cmp cmp, const Rational& bound) {
  switch (cmp) {
    case Cmp::Gt: return value > bound;
    case Cmp::Ge: return value >= bound;
    case Cmp::Lt: return value < bound;
    case Cmp::Le: return value <= bound;
  }
  return false;
}

bool contains_combine_ref(const TermPtr& t) {
  if (t->kind() == TermKind::CombineRef) return true;
  for (const auto& a : t->args()) {
    if (contains_combine_ref(a)) return true;
  }
  return false;
}

bool match(const TermPtr& pattern, const TermPtr& value, Substitution& rho) {
  switch (pattern->kind()) {
    case TermKind::StateVar: {
      if (const TermPtr* b = rho.state_binding(pattern->name())) {
        return term_eq(*b, value);
      }
      rho.bind_state(pattern->name(), value);
      return true;
    }
    case TermKind::DistVar: {
      if (const TermPtr* b = rho.dist_binding(pattern->name())) {
        return term_eq(*b, value);
      }
      rho.bind_dist(pattern->name(), value);
      return true;
    }
    case TermKind::CombineRef:
      return false;
    default: {
      if (pattern->kind() != value->kind() || pattern->name() != value->name() ||
          pattern->args().size() != value->args().size() ||
          pattern->weights() != value->weights()) {
        return false;
      }
      for (size_t i = 0; i < pattern->args().size(); ++i) {
        if (!match(pattern->args()[i], value->args()[i], rho)) return false;
      }
      return true;
    }
  }
}

struct Branch {
  Substitution rho;
  std::vector<size_t> pos;     // pending positive premise indices
  std::vector<size_t> neg;     // pending negative premise indices
  std::vector<size_t> quant;   // pending explicit-set quantitative premises
  std::vector<std::string> groups;  // pending measured set variables
};

class Engine {
 public:
  Engine(const SpecAst& spec, const Store& tr, NegOracle oracle,
         std::function<void(const TermPtr&)> register_state)
      : spec_(spec), tr_(tr), oracle_(std::move(oracle)),
        register_(std::move(register_state)) {}

  std::vector<Transition> instantiate(const RuleSchema& rule,
                                      const TermPtr& goal) {
    Substitution rho0;
    if (!match(rule.conc_source, goal, rho0)) return {};

    Branch root;
    root.rho = std::move(rho0);
    std::set<std::string> group_names;
    for (size_t i = 0; i < rule.positives.size(); ++i) root.pos.push_back(i);
    for (size_t i = 0; i < rule.negatives.size(); ++i) root.neg.push_back(i);
    for (size_t i = 0; i < rule.quants.size(); ++i) {
      const QuantPremise& q = rule.quants[i];
      if (contains_combine_ref(q.dist)) continue;  // resolved by LP at the end
      if (q.set.is_set_var) {
        group_names.insert(q.set.set_var);
      } else {
        root.quant.push_back(i);
      }
    }
    root.groups.assign(group_names.begin(), group_names.end());

    std::vector<Transition> result;
    std::vector<Branch> work{std::move(root)};
    while (!work.empty()) {
      Branch br = std::move(work.back());
      work.pop_back();
      if (br.pos.empty() && br.neg.empty() && br.quant.empty() &&
          br.groups.empty()) {
        finalize(rule, goal, br, result);
        continue;
      }
      if (!step(rule, br, work)) {
        throw Error(ErrorCode::NonWellFounded,
                    "rule '" + rule.name +
                        "' cannot be instantiated: unbound premise variables");
      }
    }
    return result;
  }

 private:
  // Processes one ready premise of the branch, pushing successor branches.
  // Returns false when nothing is ready.
  bool step(const RuleSchema& rule, Branch& br, std::vector<Branch>& work) {
    for (size_t k = 0; k < br.pos.size(); ++k) {
      size_t i = br.pos[k];
      const PositivePremise& p = rule.positives[i];
      TermPtr src = apply_subst(br.rho, p.source);
      if (!src->closed()) continue;
      register_(src);
      br.pos.erase(br.pos.begin() + k);
      for (const TermPtr& target : tr_.targets(src, p.action)) {
        Branch next = br;
        if (const TermPtr* b = next.rho.dist_binding(p.target)) {
          if (!term_eq(*b, target)) continue;
        } else {
          next.rho.bind_dist(p.target, target);
        }
        work.push_back(std::move(next));
      }
      return true;
    }
    for (size_t k = 0; k < br.neg.size(); ++k) {
      size_t i = br.neg[k];
      const NegativePremise& n = rule.negatives[i];
      TermPtr src = apply_subst(br.rho, n.source);
      if (!src->closed()) continue;
      register_(src);
      br.neg.erase(br.neg.begin() + k);
      if (oracle_.negative_holds(src, n.action)) work.push_back(std::move(br));
      return true;
    }
    for (size_t k = 0; k < br.quant.size(); ++k) {
      size_t i = br.quant[k];
      const QuantPremise& q = rule.quants[i];
      TermPtr theta = apply_subst(br.rho, q.dist);
      if (!theta->closed()) continue;
      br.quant.erase(br.quant.begin() + k);
      process_explicit(q, theta, br, work);
      return true;
    }
    for (size_t k = 0; k < br.groups.size(); ++k) {
      std::string set_var = br.groups[k];
      if (!group_ready(rule, br, set_var)) continue;
      br.groups.erase(br.groups.begin() + k);
      if (process_group(rule, br, set_var)) work.push_back(std::move(br));
      return true;
    }
    return br.pos.empty() && br.neg.empty() && br.quant.empty() &&
           br.groups.empty();
  }

  // Explicit measured set: unbound element variables range over the support
  // of the measured distribution (a proper substitution puts every element
  // inside the support), then the measure is tested against the bound.
  void process_explicit(const QuantPremise& q, const TermPtr& theta, Branch& br,
                        std::vector<Branch>& work) {
    FiniteDistribution pi = eval_dist(theta, spec_.sig);
    std::vector<Branch> partial{br};
    for (const TermPtr& element : q.set.elements) {
      std::vector<Branch> grown;
      for (Branch& b : partial) {
        TermPtr e = apply_subst(b.rho, element);
        if (e->closed()) {
          if (pi.mass(e) > 0) grown.push_back(std::move(b));
          continue;
        }
        for (const auto& [u, mass] : pi.support()) {
          Branch next = b;
          Substitution ext;
          if (match(e, u, ext)) {
            for (const auto& v : e->all_vars()) {
              if (const TermPtr* sb = ext.state_binding(v)) {
                next.rho.bind_state(v, *sb);
              }
              if (const TermPtr* db = ext.dist_binding(v)) {
                next.rho.bind_dist(v, *db);
              }
            }
            grown.push_back(std::move(next));
          }
        }
      }
      partial = std::move(grown);
    }
    for (Branch& b : partial) {
      TermSet elements;
      for (const TermPtr& element : q.set.elements) {
        elements.insert(apply_subst(b.rho, element));
      }
      for (const auto& u : elements) register_(u);
      if (satisfies(measure(pi, elements), q.cmp, q.bound)) {
        work.push_back(std::move(b));
      }
    }
  }

  bool group_ready(const RuleSchema& rule, const Branch& br,
                   const std::string& set_var) const {
    for (const QuantPremise& q : rule.quants) {
      if (!q.set.is_set_var || q.set.set_var != set_var) continue;
      if (contains_combine_ref(q.dist)) continue;
      if (!apply_subst(br.rho, q.dist)->closed()) return false;
    }
    for (const ForallBlock& fa : rule.foralls) {
      if (fa.set_var != set_var) continue;
      std::set<std::string> vars = fa.source->all_vars();
      vars.erase(fa.binder);
      for (const auto& v : vars) {
        if (!br.rho.has(v)) return false;
      }
    }
    return true;
  }

  // Set-variable premise: the set ranges over subsets of the measured
  // distribution's support whose elements satisfy every forall block over
  // the variable.  The measure is monotone in the set, so for > and >= the
  // maximal satisfying subset decides; for < and <= the empty set does.
  bool process_group(const RuleSchema& rule, Branch& br,
                     const std::string& set_var) {
    std::vector<const QuantPremise*> quants;
    for (const QuantPremise& q : rule.quants) {
      if (q.set.is_set_var && q.set.set_var == set_var &&
          !contains_combine_ref(q.dist)) {
        quants.push_back(&q);
      }
    }
    if (quants.empty()) return true;  // unmeasured set: vacuous blocks

    std::vector<FiniteDistribution> dists;
    TermSet pool;
    for (size_t i = 0; i < quants.size(); ++i) {
      FiniteDistribution pi = eval_dist(apply_subst(br.rho, quants[i]->dist), spec_.sig);
      if (i == 0) {
        for (const auto& [u, p] : pi.support()) pool.insert(u);
      } else {
        TermSet narrowed;
        for (const auto& [u, p] : pi.support()) {
          if (pool.count(u)) narrowed.insert(u);
        }
        pool = std::move(narrowed);
      }
      dists.push_back(std::move(pi));
    }
    TermSet max_set = filter_by_blocks(rule, br.rho, set_var, pool);

    bool all_upper = true, all_lower = true;
    for (const QuantPremise* q : quants) {
      (q->cmp == Cmp::Gt || q->cmp == Cmp::Ge ? all_lower : all_upper) = false;
    }
    auto holds_with = [&](const TermSet& chosen) {
      for (size_t i = 0; i < quants.size(); ++i) {
        if (!satisfies(measure(dists[i], chosen), quants[i]->cmp,
                       quants[i]->bound)) {
          return false;
        }
      }
      return true;
    };
    if (all_upper) return holds_with(max_set);
    if (all_lower) return holds_with(TermSet{});
    return holds_with(max_set) || holds_with(TermSet{});
  }

  TermSet filter_by_blocks(const RuleSchema& rule, const Substitution& rho,
                           const std::string& set_var, const TermSet& pool) {
    TermSet out;
    for (const TermPtr& u : pool) {
      bool ok = true;
      for (const ForallBlock& fa : rule.foralls) {
        if (fa.set_var != set_var) continue;
        Substitution local = rho;
        local.bind_state(fa.binder, u);
        TermPtr src = apply_subst(local, fa.source);
        register_(src);
        if (fa.positive) {
          ok = tr_.has_any(src, fa.action);
        } else {
          ok = oracle_.negative_holds(src, fa.action);
        }
        if (!ok) break;
      }
      if (ok) out.insert(u);
    }
    return out;
  }

  // Combine blocks: the family of a block ranges over all transitions of the
  // linked premise's source under its action; the weights stay existential
  // and are resolved by LP feasibility against the quantitative premises
  // that measure the combine symbol.
  void finalize(const RuleSchema& rule, const TermPtr& goal, const Branch& br,
                std::vector<Transition>& result) {
    std::map<std::string, std::vector<FiniteDistribution>> families;
    std::map<std::string, size_t> family_offset;
    size_t total_vars = 0;
    for (const CombineBlock& cb : rule.combines) {
      const PositivePremise* linked = nullptr;
      for (const PositivePremise& p : rule.positives) {
        if (p.target == cb.family_var) {
          linked = &p;
          break;
        }
      }
      if (!linked) {
        throw Error(ErrorCode::NonWellFounded,
                    "combine block '" + cb.sym +
                        "' is not linked to a positive premise");
      }
      TermPtr src = apply_subst(br.rho, linked->source);
      std::vector<FiniteDistribution> steps;
      for (const TermPtr& target : tr_.targets(src, linked->action)) {
        steps.push_back(eval_dist(target, spec_.sig));
      }
      std::sort(steps.begin(), steps.end());
      steps.erase(std::unique(steps.begin(), steps.end()), steps.end());
      if (steps.empty()) return;  // no transition family, no combined term
      family_offset[cb.sym] = total_vars;
      total_vars += steps.size();
      families[cb.sym] = std::move(steps);
    }

    if (!families.empty()) {
      LpProblem lp;
      lp.num_vars = total_vars;
      lp.unit_simplex = false;
      for (const auto& [sym, steps] : families) {
        LpConstraint sum;
        sum.coef.assign(total_vars, Rational(0));
        for (size_t i = 0; i < steps.size(); ++i) {
          sum.coef[family_offset[sym] + i] = 1;
        }
        sum.cmp = LpCmp::Eq;
        sum.rhs = 1;
        lp.constraints.push_back(std::move(sum));
      }
      for (const QuantPremise& q : rule.quants) {
        if (!contains_combine_ref(q.dist)) continue;
        if (q.dist->kind() != TermKind::CombineRef) {
          throw Error(ErrorCode::NonWellFounded,
                      "combine symbols must be measured directly");
        }
        const std::string& sym = q.dist->name();
        auto fit = families.find(sym);
        if (fit == families.end()) {
          throw Error(ErrorCode::NonWellFounded,
                      "measured combine symbol '" + sym + "' has no block");
        }
        const auto& steps = fit->second;
        size_t off = family_offset[sym];

        TermSet chosen;
        if (q.set.is_set_var) {
          TermSet pool;
          for (const auto& pi : steps) {
            for (const auto& [u, p] : pi.support()) pool.insert(u);
          }
          chosen = filter_by_blocks(rule, br.rho, q.set.set_var, pool);
          if ((q.cmp == Cmp::Lt || q.cmp == Cmp::Le)) {
            // The empty subset realizes any satisfiable upper bound.
            if (q.bound > 0 || q.cmp == Cmp::Le) continue;
            return;
          }
        } else {
          for (const TermPtr& element : q.set.elements) {
            TermPtr e = apply_subst(br.rho, element);
            if (!e->closed()) {
              throw Error(ErrorCode::NonWellFounded,
                          "unbound variable in measured set of '" + sym + "'");
            }
            chosen.insert(e);
          }
          // Properness: every element must get positive combined mass.
          for (const TermPtr& e : chosen) {
            LpConstraint proper;
            proper.coef.assign(total_vars, Rational(0));
            for (size_t i = 0; i < steps.size(); ++i) {
              proper.coef[off + i] = steps[i].mass(e);
            }
            proper.cmp = LpCmp::Gt;
            proper.rhs = 0;
            lp.constraints.push_back(std::move(proper));
          }
        }
        for (const auto& u : chosen) register_(u);

        LpConstraint row;
        row.coef.assign(total_vars, Rational(0));
        for (size_t i = 0; i < steps.size(); ++i) {
          row.coef[off + i] = measure(steps[i], chosen);
        }
        switch (q.cmp) {
          case Cmp::Ge: row.cmp = LpCmp::Ge; row.rhs = q.bound; break;
          case Cmp::Gt: row.cmp = LpCmp::Gt; row.rhs = q.bound; break;
          case Cmp::Le:
            for (auto& c : row.coef) c = -c;
            row.cmp = LpCmp::Ge;
            row.rhs = -q.bound;
            break;
          case Cmp::Lt:
            for (auto& c : row.coef) c = -c;
            row.cmp = LpCmp::Gt;
            row.rhs = -q.bound;
            break;
        }
        lp.constraints.push_back(std::move(row));
      }
      if (!lp_feasible(lp)) return;
    }

    TermPtr target = apply_subst(br.rho, rule.conc_target);
    if (!target->closed()) {
      throw Error(ErrorCode::NonWellFounded,
                  "rule '" + rule.name + "' leaves its conclusion target open");
    }
    result.push_back({goal, rule.conc_action, target});
  }

  const SpecAst& spec_;
  const Store& tr_;
  NegOracle oracle_;
  std::function<void(const TermPtr&)> register_;
};

// One forward-chaining closure: least transition set over the explored
// fragment with negative literals fixed by the oracle.  The explored set is
// shared across closures and only grows.
Store derive(const SpecAst& spec, NegOracle oracle, TermSet& explored,
             std::vector<TermPtr>& order, size_t fuel, bool& exhausted) {
  Store tr;
  bool changed = true;
  auto register_state = [&](const TermPtr& t) {
    if (explored.count(t)) return;
    if (explored.size() >= fuel) {
      exhausted = true;
      return;
    }
    explored.insert(t);
    order.push_back(t);
    changed = true;
  };
  Engine engine(spec, tr, oracle, register_state);
  while (changed) {
    changed = false;
    for (size_t i = 0; i < order.size(); ++i) {
      TermPtr goal = order[i];
      for (const RuleSchema& rule : spec.rules) {
        for (const Transition& inst : engine.instantiate(rule, goal)) {
          if (tr.add(inst.source, inst.action, inst.target)) {
            changed = true;
            FiniteDistribution pi = eval_dist(inst.target, spec.sig);
            for (const auto& [u, p] : pi.support()) register_state(u);
          }
        }
      }
    }
  }
  return tr;
}

void validate_rules(const SpecAst& spec) {
  for (const RuleSchema& rule : spec.rules) {
    auto wf = check_well_founded(rule);
    if (!wf.first) {
      throw Error(ErrorCode::NonWellFounded,
                  "rule '" + rule.name + "' has a variable dependency cycle: " +
                      wf.second);
    }
    std::set<std::string> boundable = rule.conc_source->all_vars();
    for (const auto& p : rule.positives) boundable.insert(p.target);
    for (const auto& q : rule.quants) {
      if (!q.set.is_set_var) {
        for (const auto& e : q.set.elements) {
          for (const auto& v : e->all_vars()) boundable.insert(v);
        }
      }
    }
    auto check_covered = [&](const TermPtr& t, const std::string& where) {
      for (const auto& v : t->all_vars()) {
        if (!boundable.count(v)) {
          throw Error(ErrorCode::NonWellFounded,
                      "rule '" + rule.name + "': variable '" + v + "' in " +
                          where + " is never bound");
        }
      }
    };
    for (const auto& p : rule.positives) check_covered(p.source, "a premise source");
    for (const auto& n : rule.negatives) check_covered(n.source, "a premise source");
    for (const auto& q : rule.quants) {
      if (!contains_combine_ref(q.dist)) {
        check_covered(q.dist, "a quantitative premise");
      }
    }
    for (const auto& fa : rule.foralls) {
      std::set<std::string> vars = fa.source->all_vars();
      vars.erase(fa.binder);
      for (const auto& v : vars) {
        if (!boundable.count(v)) {
          throw Error(ErrorCode::NonWellFounded,
                      "rule '" + rule.name + "': variable '" + v +
                          "' in a forall block is never bound");
        }
      }
    }
    check_covered(rule.conc_target, "the conclusion target");
  }
}

}  // namespace

TransitionTable stable_model(const SpecAst& spec,
                             const std::vector<TermPtr>& roots, size_t fuel) {
  if (fuel < 1) throw Error(ErrorCode::BadWeights, "fuel must be at least 1");
  validate_rules(spec);

  TermSet explored;
  std::vector<TermPtr> order;
  bool exhausted = false;
  for (const TermPtr& r : roots) {
    if (!r->closed()) {
      throw Error(ErrorCode::OpenTerm, "root " + r->text() + " is open");
    }
    if (explored.insert(r).second) order.push_back(r);
    if (explored.size() > fuel) exhausted = true;
  }

  NegOracle all{NegOracle::AllTransitions, nullptr};
  NegOracle none{NegOracle::Table, nullptr};
  Store empty_store;
  none.table = &empty_store;

  Store ct = derive(spec, all, explored, order, fuel, exhausted);
  Store pt = derive(spec, none, explored, order, fuel, exhausted);
  int iterations = 1;
  while (true) {
    NegOracle vs_pt{NegOracle::Table, &pt};
    NegOracle vs_ct{NegOracle::Table, &ct};
    Store ct_next = derive(spec, vs_pt, explored, order, fuel, exhausted);
    Store pt_next = derive(spec, vs_ct, explored, order, fuel, exhausted);
    if (ct_next.flatten() == ct.flatten() && pt_next.flatten() == pt.flatten()) {
      break;
    }
    ct = std::move(ct_next);
    pt = std::move(pt_next);
    ++iterations;
  }

  TransitionTable table;
  table.ct = ct.flatten();
  table.pt = pt.flatten();
  table.explored = explored;
  table.budget_exhausted = exhausted;
  table.iterations = iterations;
  return table;
}

bool is_complete(const TransitionTable& table) {
  return !table.budget_exhausted && table.ct == table.pt;
}

std::vector<Transition> instantiate(const RuleSchema& rule, const TermPtr& goal,
                                    const TransitionTable& table,
                                    const SpecAst& spec) {
  Store current;
  for (const Transition& t : table.ct) current.add(t.source, t.action, t.target);
  Store possible;
  for (const Transition& t : table.pt) possible.add(t.source, t.action, t.target);
  NegOracle oracle{NegOracle::Table, &possible};
  Engine engine(spec, current, oracle, [](const TermPtr&) {});
  return engine.instantiate(rule, goal);
}

Pts build_pts(const TransitionTable& table, const Signature& sig) {
  if (!is_complete(table)) {
    throw Error(ErrorCode::IncompleteModel,
                table.budget_exhausted
                    ? "state budget exhausted"
                    : "least stable model is 3-valued (CT differs from PT)");
  }
  Pts pts;
  for (const TermPtr& t : table.explored) pts.add_state(t);
  for (const Transition& tr : table.ct) {
    pts.add_step(tr.source, tr.action, eval_dist(tr.target, sig));
  }
  return pts;
}

std::optional<std::vector<Rational>> combined_feasible(
    const Pts& pts, const TermPtr& t, const std::string& a,
    const std::vector<CombinedConstraint>& constraints) {
  const auto& steps = pts.steps(t, a);
  if (steps.empty()) {
    throw Error(ErrorCode::NoSuchAction,
                t->text() + " has no " + a + "-transitions");
  }
  LpProblem lp;
  lp.num_vars = steps.size();
  for (const auto& c : constraints) {
    if (c.cmp != Cmp::Gt && c.cmp != Cmp::Ge) {
      throw Error(ErrorCode::BadWeights,
                  "combined constraints use > or >= only");
    }
    LpConstraint row;
    row.coef.reserve(steps.size());
    for (const auto& pi : steps) row.coef.push_back(measure(pi, c.states));
    row.cmp = c.cmp == Cmp::Gt ? LpCmp::Gt : LpCmp::Ge;
    row.rhs = c.bound;
    lp.constraints.push_back(std::move(row));
  }
  return lp_feasible(lp);
}

namespace {

class TermGen {
 public:
  TermGen(const SpecAst& spec, std::mt19937_64& rng) : spec_(spec), rng_(rng) {
    for (const auto& [name, decl] : spec.sig.ops()) {
      if (decl.arg_sorts.empty()) nullary_.push_back(name);
      ops_.push_back(name);
    }
  }

  TermPtr state_term(int depth) {
    if (depth <= 0 || ops_.empty()) return leaf();
    const std::string& op = ops_[rng_() % ops_.size()];
    const OpDecl& decl = spec_.sig.op(op);
    std::vector<TermPtr> args;
    for (Sort s : decl.arg_sorts) {
      args.push_back(s == Sort::State ? state_term(depth - 1)
                                      : dist_term(depth - 1));
    }
    return Term::state_app(op, std::move(args));
  }

  TermPtr dist_term(int depth) {
    if (depth > 0 && rng_() % 2 == 0) {
      Rational w(1 + rng_() % 7, 8);
      while (w >= 1) w = Rational(1 + rng_() % 7, 8);
      return Term::convex_sum({w, 1 - w}, {Term::dirac(state_term(depth - 1)),
                                           Term::dirac(state_term(depth - 1))});
    }
    return Term::dirac(state_term(depth - 1));
  }

 private:
  TermPtr leaf() {
    if (!nullary_.empty()) {
      return Term::state_app(nullary_[rng_() % nullary_.size()], {});
    }
    return Term::state_app(ops_.front(), {});
  }

  const SpecAst& spec_;
  std::mt19937_64& rng_;
  std::vector<std::string> nullary_;
  std::vector<std::string> ops_;
};

TermPtr hole() { return Term::state_var("_"); }

TermPtr plug(const TermPtr& context, const TermPtr& t) {
  Substitution rho;
  rho.bind_state("_", t);
  return apply_subst(rho, context);
}

}  // namespace

ProbeReport congruence_probe(const SpecAst& spec, BisimKind kind, int trials,
                             std::uint64_t seed, size_t fuel) {
  ProbeReport report;
  std::mt19937_64 rng(seed);
  TermGen gen(spec, rng);

  std::vector<std::pair<TermPtr, TermPtr>> pairs;
  for (size_t i = 0; i < spec.def_order.size(); ++i) {
    for (size_t j = i + 1; j < spec.def_order.size(); ++j) {
      pairs.emplace_back(spec.defs.at(spec.def_order[i]),
                         spec.defs.at(spec.def_order[j]));
    }
  }

  // One-hole contexts: direct operator applications first, then a few
  // two-level compositions of them per trial.
  auto contexts_for_trial = [&]() {
    std::vector<TermPtr> ctxs;
    for (const auto& [name, decl] : spec.sig.ops()) {
      for (size_t i = 0; i < decl.arg_sorts.size(); ++i) {
        std::vector<TermPtr> args;
        for (size_t j = 0; j < decl.arg_sorts.size(); ++j) {
          if (j == i) {
            args.push_back(decl.arg_sorts[j] == Sort::State
                               ? hole()
                               : Term::dirac(hole()));
          } else {
            args.push_back(decl.arg_sorts[j] == Sort::State
                               ? gen.state_term(1)
                               : Term::dirac(gen.state_term(1)));
          }
        }
        ctxs.push_back(Term::state_app(name, std::move(args)));
      }
    }
    size_t direct = ctxs.size();
    for (int k = 0; k < 3 && direct > 0; ++k) {
      const TermPtr& outer = ctxs[rng() % direct];
      const TermPtr& inner = ctxs[rng() % direct];
      ctxs.push_back(plug(outer, inner));
    }
    return ctxs;
  };

  for (int trial = 0; trial < trials; ++trial) {
    std::pair<TermPtr, TermPtr> pair;
    if (trial < static_cast<int>(pairs.size())) {
      pair = pairs[trial];
    } else {
      pair = {gen.state_term(3), gen.state_term(3)};
    }
    ++report.trials;
    if (term_eq(pair.first, pair.second)) continue;

    TransitionTable table = stable_model(spec, {pair.first, pair.second}, fuel);
    if (!is_complete(table)) {
      ++report.skipped_incomplete;
      continue;
    }
    Pts pts = build_pts(table, spec.sig);
    if (!equivalent(pts, pair.first, pair.second, kind)) continue;
    ++report.equivalent_pairs;

    for (const TermPtr& ctx : contexts_for_trial()) {
      TermPtr left = plug(ctx, pair.first);
      TermPtr right = plug(ctx, pair.second);
      TransitionTable ctx_table = stable_model(spec, {left, right}, fuel);
      if (!is_complete(ctx_table)) continue;
      Pts ctx_pts = build_pts(ctx_table, spec.sig);
      if (!equivalent(ctx_pts, left, right, kind)) {
        report.violations.push_back({ctx->text(), pair.first, pair.second});
        break;
      }
    }
  }
  return report;
}

}  // namespace ptss
