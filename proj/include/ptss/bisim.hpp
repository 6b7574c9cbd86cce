#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "ptss/lp.hpp"
#include "ptss/pts.hpp"

namespace ptss {

enum class BisimKind { Strong, Convex, Abstracted, Obliterated };

const char* bisim_kind_name(BisimKind k);
BisimKind bisim_kind_from(const std::string& name);

// Equivalence classes of the explored states, tagged with the relation kind
// that produced them.  Blocks are non-empty, pairwise disjoint, cover the
// state set, and are kept in canonical order.
struct Partition {
  BisimKind kind = BisimKind::Strong;
  std::vector<std::vector<TermPtr>> blocks;
  std::map<TermPtr, int, TermLess> block_of;

  bool same_block(const TermPtr& a, const TermPtr& b) const;
  /// True iff every block of this partition lies inside one block of other.
  bool refines(const Partition& other) const;
};

/// Coarsest partition stable under the transfer property of the given kind,
/// computed by iterated refinement from the single-block partition.
Partition quotient(const Pts& pts, BisimKind kind);

/// Same, also returning the partition after every refinement round (the
/// final entry equals the result); used to synthesize distinguishing
/// formulas.
Partition quotient_trace(const Pts& pts, BisimKind kind,
                         std::vector<Partition>* trace);

bool equivalent(const Pts& pts, const TermPtr& t1, const TermPtr& t2,
                BisimKind kind);

/// Distribution transfer for the strong and probability-abstracted kinds:
/// equal block masses, respectively equal block positivity.  Blocks suffice
/// because closed sets are unions of blocks and both predicates are additive
/// or disjunctive over disjoint unions.
bool dist_match(const FiniteDistribution& pi1, const FiniteDistribution& pi2,
                const Partition& partition, BisimKind kind);

/// Bipartite support cover: every support element of one distribution is
/// related to one of the other, both ways.  Independent oracle for
/// dist_match under the abstracted kind.
bool support_match(const FiniteDistribution& pi1, const FiniteDistribution& pi2,
                   const std::function<bool(const TermPtr&, const TermPtr&)>& related);
bool support_match(const FiniteDistribution& pi1, const FiniteDistribution& pi2,
                   const Partition& partition);

/// Convex transfer: is there a combined a-step of t2 whose block masses
/// equal pi1's on every block?
bool combined_match(const Pts& pts, const TermPtr& t2, const std::string& a,
                    const FiniteDistribution& pi1, const Partition& partition);

// Literal greatest-fixpoint oracle over state pairs, enumerating all closed
// sets of the current relation.  Intentionally brute force; differential
// check for quotient on small systems.
using Relation = std::map<std::pair<std::string, std::string>, bool>;
std::vector<std::pair<TermPtr, TermPtr>> naive_fixpoint(const Pts& pts,
                                                        BisimKind kind,
                                                        size_t max_states = 12);

}  // namespace ptss
