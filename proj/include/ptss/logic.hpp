#pragma once

#include <optional>
#include <set>

#include "ptss/bisim.hpp"
#include "ptss/formula.hpp"
#include "ptss/pts.hpp"

namespace ptss {

// Logic fragments: 'b' full, 'c' without <a>, 'a' without <a>_c and with
// zero bounds only, 'o' additionally without meets.
std::set<char> fragment_of(const FormulaPtr& phi);
bool in_fragment(const FormulaPtr& phi, char fragment);

bool sat_state(const Pts& pts, const TermPtr& t, const FormulaPtr& phi);

/// Distribution-layer satisfaction.  [phi]_p tests the sat-set's measure
/// against the bound: strictly positive mass when p = 0, and mass at least p
/// when p > 0 (the reading under which the worked separation examples of the
/// characterization hold).
bool sat_dist(const Pts& pts, const FiniteDistribution& pi,
              const FormulaPtr& psi);

/// A formula of the requested fragment satisfied by exactly one of the two
/// states, synthesized from the refinement trace of the kind's quotient.
/// Returns nothing when the states are equivalent, and for fragment 'a' also
/// when the states are provably indistinguishable by the fragment (its
/// distribution atoms are monotone in supports, so support-dominated pairs
/// admit no separator even when they are not abstracted-bisimilar).
std::optional<FormulaPtr> distinguishing_formula(const Pts& pts,
                                                 const TermPtr& t1,
                                                 const TermPtr& t2,
                                                 char fragment);

/// Coarsest partition whose same-block states satisfy exactly the same
/// fragment-'a' formulas: refinement by the maximal antichain of per-step
/// support-block vectors.  Coarser than the abstracted quotient.
Partition abstracted_logic_quotient(const Pts& pts);

}  // namespace ptss
