#pragma once

#include <map>
#include <string>
#include <vector>

#include "ptss/term.hpp"

namespace ptss {

// Finite probabilistic transition system over closed state terms: every step
// goes from a state to a finite-support distribution over states.
class Pts {
 public:
  void add_state(const TermPtr& t);
  void add_step(const TermPtr& source, const std::string& action,
                const FiniteDistribution& pi);

  bool has_state(const TermPtr& t) const { return states_.count(t) > 0; }
  const TermSet& states() const { return states_; }
  std::vector<std::string> actions() const;

  /// Distinct distributions reachable from t by action a, in canonical order.
  const std::vector<FiniteDistribution>& steps(const TermPtr& t,
                                               const std::string& a) const;
  const std::map<std::string, std::vector<FiniteDistribution>>& steps_of(
      const TermPtr& t) const;

  size_t num_states() const { return states_.size(); }
  size_t num_steps() const;

 private:
  TermSet states_;
  std::map<TermPtr, std::map<std::string, std::vector<FiniteDistribution>>,
           TermLess>
      steps_;
};

// Stripped view: t --a--> t' whenever some step from t under a gives t'
// positive probability.
struct ObliteratedLts {
  TermSet states;
  std::map<TermPtr, std::map<std::string, TermSet>, TermLess> edges;

  const TermSet& successors(const TermPtr& t, const std::string& a) const;
};

ObliteratedLts build_oblit_lts(const Pts& pts);

/// Plain-text transition list, one line per step:
///   state --a--> {term: p, term: p}
/// Deadlocked states are listed as bare "state" lines.
std::string export_pts(const Pts& pts);

/// Parses the export format; terms are read against the given spec.
struct SpecAst;
Pts import_pts(const std::string& text, const SpecAst& spec);

}  // namespace ptss
