#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ptss/bisim.hpp"
#include "ptss/pts.hpp"
#include "ptss/spec.hpp"

namespace ptss {

struct Transition {
  TermPtr source;
  std::string action;
  TermPtr target;  // symbolic distribution term

  std::string text() const {
    return source->text() + " -" + action + "-> " + target->text();
  }
  bool operator<(const Transition& o) const { return text() < o.text(); }
  bool operator==(const Transition& o) const { return text() == o.text(); }
};

// Three-valued ground transition relation over the explored fragment:
// CT holds the certain transitions, PT the possible ones, CT subset of PT.
struct TransitionTable {
  std::set<Transition> ct;
  std::set<Transition> pt;
  TermSet explored;
  bool budget_exhausted = false;
  int iterations = 0;  // alternation rounds until the pair stabilized
};

/// Least 3-valued stable model of the spec restricted to the fragment
/// reachable from the roots.  The certain side evaluates negative literals
/// against the possible side of the previous round and vice versa; on finite
/// fragments the alternation stabilizes in finitely many rounds.  More than
/// `fuel` distinct states marks the table budget_exhausted.
TransitionTable stable_model(const SpecAst& spec,
                             const std::vector<TermPtr>& roots, size_t fuel);

bool is_complete(const TransitionTable& table);

/// Closed instances of a rule whose conclusion rewrites the goal, using the
/// table's certain transitions for positive premises and its possible ones
/// for negative premises.
std::vector<Transition> instantiate(const RuleSchema& rule, const TermPtr& goal,
                                    const TransitionTable& table,
                                    const SpecAst& spec);

/// Concrete view of a complete table: every symbolic target evaluated to its
/// distribution, duplicates collapsed.
Pts build_pts(const TransitionTable& table, const Signature& sig);

struct CombinedConstraint {
  TermSet states;
  Cmp cmp = Cmp::Ge;  // > or >= only
  Rational bound;
};

/// Does some convex combination of t's a-steps satisfy every constraint?
std::optional<std::vector<Rational>> combined_feasible(
    const Pts& pts, const TermPtr& t, const std::string& a,
    const std::vector<CombinedConstraint>& constraints);

struct ProbeViolation {
  std::string context;  // one-hole context, hole rendered as _
  TermPtr left;
  TermPtr right;
};

struct ProbeReport {
  int trials = 0;
  int equivalent_pairs = 0;
  int skipped_incomplete = 0;
  std::vector<ProbeViolation> violations;
};

/// Empirical congruence probe: samples closed term pairs (named terms first,
/// then random), and for pairs equivalent under the kind re-checks
/// equivalence inside one-hole contexts over the signature.  Deterministic
/// for a fixed seed.
ProbeReport congruence_probe(const SpecAst& spec, BisimKind kind, int trials,
                             std::uint64_t seed, size_t fuel = 10000);

}  // namespace ptss
