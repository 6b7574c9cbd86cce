#pragma once

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ptss/error.hpp"
#include "ptss/rational.hpp"

namespace ptss {

// Two sorts: state terms denote processes, distribution terms denote
// finite-support probability distributions over closed state terms.
enum class Sort { State, Dist };

inline const char* sort_name(Sort s) { return s == Sort::State ? "S" : "D"; }

// A user signature declares state-sorted operators only.  The distribution
// signature is derived: every state operator f has a lifting $f whose
// arguments are all distribution terms, plus the built-ins dirac(t) and the
// binary convex sum written "theta1 (+) p theta2".
struct OpDecl {
  std::string name;
  std::vector<Sort> arg_sorts;
};

class Signature {
 public:
  void declare(const std::string& name, std::vector<Sort> arg_sorts);
  bool has_op(const std::string& name) const { return ops_.count(name) > 0; }
  const OpDecl& op(const std::string& name) const;
  const std::map<std::string, OpDecl>& ops() const { return ops_; }

 private:
  std::map<std::string, OpDecl> ops_;
};

enum class TermKind {
  StateVar,
  DistVar,
  StateApp,   // f(xi_1, ..., xi_n), f a declared state operator
  LiftedApp,  // $f(theta_1, ..., theta_n), the probabilistic lifting of f
  Dirac,      // dirac(t)
  ConvexSum,  // weighted sum of distribution terms, weights sum to 1
  CombineRef, // symbolic convex combination bound by a rule's combine block
};

class Term;
using TermPtr = std::shared_ptr<const Term>;

class Term {
 public:
  static TermPtr state_var(const std::string& name);
  static TermPtr dist_var(const std::string& name);
  static TermPtr state_app(const std::string& op, std::vector<TermPtr> args);
  static TermPtr lifted_app(const std::string& op, std::vector<TermPtr> args);
  static TermPtr dirac(TermPtr state_term);
  static TermPtr convex_sum(std::vector<Rational> weights,
                            std::vector<TermPtr> args);
  static TermPtr combine_ref(const std::string& sym);

  TermKind kind() const { return kind_; }
  const std::string& name() const { return name_; }
  const std::vector<TermPtr>& args() const { return args_; }
  const std::vector<Rational>& weights() const { return weights_; }

  bool is_state_sorted() const;

  /// Deterministic text form; parseable back by the surface parser.
  const std::string& text() const;

  bool closed() const;
  void collect_vars(std::set<std::string>& state_vars,
                    std::set<std::string>& dist_vars) const;
  std::set<std::string> dist_vars() const;
  std::set<std::string> all_vars() const;

 private:
  Term(TermKind k, std::string name, std::vector<TermPtr> args,
       std::vector<Rational> weights);

  TermKind kind_;
  std::string name_;
  std::vector<TermPtr> args_;
  std::vector<Rational> weights_;
  mutable std::string text_;  // memoized render
};

/// Structural equality via canonical text.
inline bool term_eq(const TermPtr& a, const TermPtr& b) {
  return a == b || a->text() == b->text();
}

struct TermLess {
  bool operator()(const TermPtr& a, const TermPtr& b) const {
    return a->text() < b->text();
  }
};

using TermSet = std::set<TermPtr, TermLess>;

// Finite-support map from closed state terms to positive rationals with
// total mass exactly 1.  Zero-mass entries are never stored; the support is
// kept sorted by the canonical term order so equal distributions compare and
// print identically.
class FiniteDistribution {
 public:
  FiniteDistribution() = default;
  static FiniteDistribution dirac(const TermPtr& t);
  static FiniteDistribution from_entries(
      std::vector<std::pair<TermPtr, Rational>> entries);

  const std::map<TermPtr, Rational, TermLess>& support() const {
    return entries_;
  }
  Rational mass(const TermPtr& t) const;
  Rational total_mass() const;

  bool operator==(const FiniteDistribution& o) const {
    return text() == o.text();
  }
  bool operator<(const FiniteDistribution& o) const {
    return text() < o.text();
  }

  std::string text() const;

 private:
  std::map<TermPtr, Rational, TermLess> entries_;
};

// Sort-preserving finite map from variables to terms.
class Substitution {
 public:
  void bind_state(const std::string& var, TermPtr t);
  void bind_dist(const std::string& var, TermPtr t);
  const TermPtr* state_binding(const std::string& var) const;
  const TermPtr* dist_binding(const std::string& var) const;
  bool has(const std::string& var) const;

  /// Composition: (a.then(b)) applies a first, then b to a's ranges, and
  /// keeps b's bindings for variables a does not mention.
  Substitution then(const Substitution& later) const;

 private:
  std::map<std::string, TermPtr> state_;
  std::map<std::string, TermPtr> dist_;
};

/// Sort of a term under a signature; rejects unknown operators, arity and
/// sort mismatches.
Sort check_sort(const TermPtr& term, const Signature& sig);

/// Homomorphic substitution application; unbound variables are unchanged.
TermPtr apply_subst(const Substitution& rho, const TermPtr& term);

/// Interpretation of a closed distribution term.  Dirac, convex sums, and
/// lifted operators follow the distribution semantics: a lifted $f multiplies
/// component probabilities over f's state-sorted positions while
/// dist-sorted positions must match the parameter term syntactically.
FiniteDistribution eval_dist(const TermPtr& theta, const Signature& sig);

Rational measure(const FiniteDistribution& pi, const TermSet& xs);

FiniteDistribution convex_combine(const std::vector<Rational>& weights,
                                  const std::vector<FiniteDistribution>& ds);

/// True iff $f distributes over a convex sum placed at argument position j.
/// Holds whenever position j is state-sorted in f.
bool distributivity_check(const std::string& f, size_t j,
                          const std::vector<TermPtr>& args,
                          const std::vector<Rational>& weights,
                          const std::vector<TermPtr>& mixed,
                          const Signature& sig);

}  // namespace ptss
