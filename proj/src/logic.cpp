#include "ptss/logic.hpp"

#include <algorithm>
#include <map>
#include <sstream>

#include "ptss/error.hpp"
#include "ptss/lp.hpp"

namespace ptss {

namespace {

struct Features {
  bool plain_diamond = false;
  bool combined_diamond = false;
  bool positive_bound = false;
  bool meet = false;
};

// A diamond whose body is exactly [tt]_0 only says "some step exists"; a
// single transition realizes it iff a combined one does, so it counts
// against neither the plain nor the combined family.
bool can_do_diamond(const FormulaPtr& f) {
  if (f->kind() != FormulaKind::Diamond &&
      f->kind() != FormulaKind::CombinedDiamond) {
    return false;
  }
  const FormulaPtr& psi = f->parts()[0];
  return psi->kind() == FormulaKind::Atom && psi->bound() == 0 &&
         psi->parts()[0]->kind() == FormulaKind::Top;
}

void scan(const FormulaPtr& f, Features& ft) {
  switch (f->kind()) {
    case FormulaKind::Diamond:
      if (!can_do_diamond(f)) ft.plain_diamond = true;
      break;
    case FormulaKind::CombinedDiamond:
      if (!can_do_diamond(f)) ft.combined_diamond = true;
      break;
    case FormulaKind::Atom:
      if (f->bound() > 0) ft.positive_bound = true;
      break;
    case FormulaKind::Meet: ft.meet = true; break;
    default: break;
  }
  for (const auto& p : f->parts()) scan(p, ft);
}

}  // namespace

std::set<char> fragment_of(const FormulaPtr& phi) {
  Features ft;
  scan(phi, ft);
  std::set<char> out{'b'};
  if (!ft.plain_diamond) out.insert('c');
  if (!ft.combined_diamond && !ft.positive_bound) {
    out.insert('a');
    if (!ft.meet) out.insert('o');
  }
  return out;
}

bool in_fragment(const FormulaPtr& phi, char fragment) {
  return fragment_of(phi).count(fragment) > 0;
}

namespace {

void flatten_meet(const FormulaPtr& psi, std::vector<FormulaPtr>& atoms) {
  if (psi->kind() == FormulaKind::Atom) {
    atoms.push_back(psi);
    return;
  }
  if (psi->kind() == FormulaKind::Meet) {
    for (const auto& p : psi->parts()) flatten_meet(p, atoms);
    return;
  }
  throw Error(ErrorCode::LayerError, "not a distribution formula");
}

bool atom_holds(const Rational& mass, const Rational& bound) {
  return bound == 0 ? mass > 0 : mass >= bound;
}

}  // namespace

bool sat_state(const Pts& pts, const TermPtr& t, const FormulaPtr& phi) {
  if (!pts.has_state(t)) {
    throw Error(ErrorCode::UnknownState, t->text() + " is not a state");
  }
  switch (phi->kind()) {
    case FormulaKind::Top:
      return true;
    case FormulaKind::And:
      return std::all_of(phi->parts().begin(), phi->parts().end(),
                         [&](const FormulaPtr& p) { return sat_state(pts, t, p); });
    case FormulaKind::Not:
      return !sat_state(pts, t, phi->parts()[0]);
    case FormulaKind::Diamond: {
      for (const auto& pi : pts.steps(t, phi->action())) {
        if (sat_dist(pts, pi, phi->parts()[0])) return true;
      }
      return false;
    }
    case FormulaKind::CombinedDiamond: {
      const auto& steps = pts.steps(t, phi->action());
      if (steps.empty()) return false;
      // psi flattens to a meet of [phi_j]_{p_j}; the inner state formulas
      // are evaluated first, so the feasibility test sees fixed sat-sets.
      std::vector<FormulaPtr> atoms;
      flatten_meet(phi->parts()[0], atoms);
      LpProblem lp;
      lp.num_vars = steps.size();
      for (const auto& atom : atoms) {
        TermSet sat;
        for (const auto& u : pts.states()) {
          if (sat_state(pts, u, atom->parts()[0])) sat.insert(u);
        }
        LpConstraint row;
        row.coef.reserve(steps.size());
        for (const auto& pi : steps) row.coef.push_back(measure(pi, sat));
        row.cmp = atom->bound() == 0 ? LpCmp::Gt : LpCmp::Ge;
        row.rhs = atom->bound();
        lp.constraints.push_back(std::move(row));
      }
      return lp_feasible(lp).has_value();
    }
    default:
      throw Error(ErrorCode::LayerError,
                  "distribution formula at the state layer");
  }
}

bool sat_dist(const Pts& pts, const FiniteDistribution& pi,
              const FormulaPtr& psi) {
  switch (psi->kind()) {
    case FormulaKind::Atom: {
      Rational mass = 0;
      for (const auto& [u, p] : pi.support()) {
        if (sat_state(pts, u, psi->parts()[0])) mass += p;
      }
      return atom_holds(mass, psi->bound());
    }
    case FormulaKind::Meet:
      return std::all_of(psi->parts().begin(), psi->parts().end(),
                         [&](const FormulaPtr& p) { return sat_dist(pts, pi, p); });
    default:
      throw Error(ErrorCode::LayerError, "state formula at the distribution layer");
  }
}

namespace {

std::set<int> support_vector(const FiniteDistribution& pi, const Partition& p) {
  std::set<int> out;
  for (const auto& [u, mass] : pi.support()) out.insert(p.block_of.at(u));
  return out;
}

bool subseteq(const std::set<int>& a, const std::set<int>& b) {
  return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

// Maximal elements under set inclusion, deduplicated and sorted.
std::vector<std::set<int>> maximal_antichain(
    const std::vector<std::set<int>>& vecs) {
  std::vector<std::set<int>> out;
  for (const auto& v : vecs) {
    bool dominated = false;
    for (const auto& w : vecs) {
      if (v != w && subseteq(v, w)) {
        dominated = true;
        break;
      }
    }
    if (!dominated && std::find(out.begin(), out.end(), v) == out.end()) {
      out.push_back(v);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::set<int>> vectors_of(const Pts& pts, const TermPtr& t,
                                      const std::string& a, const Partition& p) {
  std::vector<std::set<int>> out;
  for (const auto& pi : pts.steps(t, a)) out.push_back(support_vector(pi, p));
  return out;
}

Partition single_block(const Pts& pts) {
  Partition p;
  p.kind = BisimKind::Abstracted;
  std::vector<TermPtr> all(pts.states().begin(), pts.states().end());
  if (!all.empty()) p.blocks.push_back(all);
  for (const auto& t : all) p.block_of[t] = 0;
  return p;
}

Partition seal_blocks(std::vector<std::vector<TermPtr>> next) {
  Partition refined;
  refined.kind = BisimKind::Abstracted;
  for (auto& b : next) std::sort(b.begin(), b.end(), TermLess{});
  std::sort(next.begin(), next.end(), [](const auto& x, const auto& y) {
    return x.front()->text() < y.front()->text();
  });
  refined.blocks = std::move(next);
  for (size_t i = 0; i < refined.blocks.size(); ++i) {
    for (const auto& t : refined.blocks[i]) {
      refined.block_of[t] = static_cast<int>(i);
    }
  }
  return refined;
}

Partition la_quotient_trace(const Pts& pts, std::vector<Partition>* trace) {
  Partition p = single_block(pts);
  if (trace) trace->push_back(p);
  while (true) {
    std::vector<std::vector<TermPtr>> next;
    for (const auto& block : p.blocks) {
      std::map<std::string, std::vector<TermPtr>> groups;
      for (const auto& t : block) {
        std::ostringstream sig;
        for (const auto& a : pts.actions()) {
          auto chain = maximal_antichain(vectors_of(pts, t, a, p));
          if (chain.empty()) continue;
          sig << a << "{";
          for (const auto& v : chain) {
            for (int b : v) sig << b << ",";
            sig << "|";
          }
          sig << "}";
        }
        groups[sig.str()].push_back(t);
      }
      for (auto& [k, members] : groups) next.push_back(std::move(members));
    }
    if (next.size() == p.blocks.size()) break;
    p = seal_blocks(std::move(next));
    if (trace) trace->push_back(p);
  }
  return p;
}

}  // namespace

Partition abstracted_logic_quotient(const Pts& pts) {
  return la_quotient_trace(pts, nullptr);
}

namespace {

// Builds separating formulas from a refinement trace.  separate(k, a, b)
// is satisfied by every state of block a of trace[k] and by no state of
// block b; block_formula(k, b) holds exactly on block b.
class Distinguisher {
 public:
  Distinguisher(const Pts& pts, char fragment, std::vector<Partition> trace)
      : pts_(pts), fragment_(fragment), trace_(std::move(trace)) {
    if (fragment_ == 'o') lts_ = build_oblit_lts(pts_);
  }

  FormulaPtr separate_states(const TermPtr& s, const TermPtr& t) {
    int level = static_cast<int>(trace_.size()) - 1;
    return separate(level, trace_[level].block_of.at(s),
                    trace_[level].block_of.at(t));
  }

 private:
  int parent_block(int level, int block) const {
    const TermPtr& member = trace_[level].blocks[block].front();
    return trace_[level - 1].block_of.at(member);
  }

  FormulaPtr block_formula(int level, int block) {
    auto key = std::make_pair(level, block);
    auto it = block_memo_.find(key);
    if (it != block_memo_.end()) return it->second;
    std::vector<FormulaPtr> parts;
    for (size_t other = 0; other < trace_[level].blocks.size(); ++other) {
      if (static_cast<int>(other) == block) continue;
      parts.push_back(separate(level, block, static_cast<int>(other)));
    }
    FormulaPtr out = parts.empty() ? Formula::top() : Formula::conj(parts);
    block_memo_[key] = out;
    return out;
  }

  FormulaPtr separate(int level, int a, int b) {
    auto key = std::make_tuple(level, a, b);
    auto it = sep_memo_.find(key);
    if (it != sep_memo_.end()) return it->second;
    if (level == 0) {
      throw Error(ErrorCode::UnknownState, "blocks never separated");
    }
    FormulaPtr out;
    int pa = parent_block(level, a);
    int pb = parent_block(level, b);
    if (pa != pb) {
      out = separate(level - 1, pa, pb);
    } else {
      const TermPtr& s = trace_[level].blocks[a].front();
      const TermPtr& t = trace_[level].blocks[b].front();
      if (auto f = directed_witness(level - 1, s, t)) {
        out = *f;
      } else if (auto g = directed_witness(level - 1, t, s)) {
        out = Formula::negate(*g);
      } else {
        throw Error(ErrorCode::UnknownState,
                    "split without a constructable witness");
      }
    }
    sep_memo_[key] = out;
    return out;
  }

  // A formula satisfied by s but not by t, when the difference shows on s's
  // side with respect to trace_[prev_level].
  std::optional<FormulaPtr> directed_witness(int prev_level, const TermPtr& s,
                                             const TermPtr& t) {
    const Partition& prev = trace_[prev_level];
    switch (fragment_) {
      case 'b':
      case 'c': {
        bool combined = fragment_ == 'c';
        for (const auto& [act, steps] : pts_.steps_of(s)) {
          for (const auto& pi : steps) {
            bool matched;
            if (combined) {
              matched = combined_match(pts_, t, act, pi, prev);
            } else {
              matched = false;
              for (const auto& pj : pts_.steps(t, act)) {
                if (dist_match(pi, pj, prev, BisimKind::Strong)) {
                  matched = true;
                  break;
                }
              }
            }
            if (matched) continue;
            // Pin the exact block masses: the bounds sum to 1, so any
            // distribution meeting all of them equals pi on every block.
            std::map<int, Rational> masses;
            for (const auto& [u, mass] : pi.support()) {
              masses[prev.block_of.at(u)] += mass;
            }
            std::vector<FormulaPtr> atoms;
            for (const auto& [blk, mass] : masses) {
              atoms.push_back(
                  Formula::atom(block_formula(prev_level, blk), mass));
            }
            FormulaPtr psi = Formula::meet(atoms);
            return combined ? Formula::combined_diamond(act, psi)
                            : Formula::diamond(act, psi);
          }
        }
        return std::nullopt;
      }
      case 'o': {
        for (const auto& act : pts_.actions()) {
          std::set<int> sb, tb;
          for (const auto& u : lts_.successors(s, act)) {
            sb.insert(prev.block_of.at(u));
          }
          for (const auto& u : lts_.successors(t, act)) {
            tb.insert(prev.block_of.at(u));
          }
          for (int blk : sb) {
            if (!tb.count(blk)) {
              return Formula::diamond(
                  act, Formula::atom(block_formula(prev_level, blk), 0));
            }
          }
        }
        return std::nullopt;
      }
      case 'a': {
        for (const auto& act : pts_.actions()) {
          auto sv = vectors_of(pts_, s, act, prev);
          auto tv = vectors_of(pts_, t, act, prev);
          for (const auto& v : maximal_antichain(sv)) {
            bool dominated = false;
            for (const auto& w : tv) dominated = dominated || subseteq(v, w);
            if (dominated) continue;
            std::vector<FormulaPtr> atoms;
            for (int blk : v) {
              atoms.push_back(Formula::atom(block_formula(prev_level, blk), 0));
            }
            if (atoms.empty()) {
              atoms.push_back(Formula::atom(Formula::top(), 0));
            }
            return Formula::diamond(act, Formula::meet(atoms));
          }
        }
        return std::nullopt;
      }
    }
    return std::nullopt;
  }

  const Pts& pts_;
  char fragment_;
  std::vector<Partition> trace_;
  ObliteratedLts lts_;
  std::map<std::pair<int, int>, FormulaPtr> block_memo_;
  std::map<std::tuple<int, int, int>, FormulaPtr> sep_memo_;
};

bool separates(const Pts& pts, const FormulaPtr& f, const TermPtr& t1,
               const TermPtr& t2) {
  return sat_state(pts, t1, f) != sat_state(pts, t2, f);
}

FormulaPtr rebuild(const FormulaPtr& node, const FormulaPtr& target,
                   const FormulaPtr& replacement) {
  if (node == target) return replacement;
  std::vector<FormulaPtr> parts;
  bool changed = false;
  for (const auto& p : node->parts()) {
    FormulaPtr q = rebuild(p, target, replacement);
    changed = changed || q != p;
    parts.push_back(q);
  }
  if (!changed) return node;
  switch (node->kind()) {
    case FormulaKind::Diamond: return Formula::diamond(node->action(), parts[0]);
    case FormulaKind::CombinedDiamond:
      return Formula::combined_diamond(node->action(), parts[0]);
    case FormulaKind::And: return Formula::conj(parts);
    case FormulaKind::Not: return Formula::negate(parts[0]);
    case FormulaKind::Atom: return Formula::atom(parts[0], node->bound());
    case FormulaKind::Meet: return Formula::meet(parts);
    default: return node;
  }
}

void collect_conjunctions(const FormulaPtr& f, std::vector<FormulaPtr>& out) {
  if (f->kind() == FormulaKind::And || f->kind() == FormulaKind::Meet) {
    out.push_back(f);
  }
  for (const auto& p : f->parts()) collect_conjunctions(p, out);
}

// Greedy minimization: drop conjuncts and meet members while the formula
// still separates the pair.
FormulaPtr minimize(const Pts& pts, FormulaPtr f, const TermPtr& t1,
                    const TermPtr& t2) {
  bool improved = true;
  while (improved) {
    improved = false;
    std::vector<FormulaPtr> nodes;
    collect_conjunctions(f, nodes);
    for (const auto& node : nodes) {
      if (node->parts().size() < 2) continue;
      for (size_t drop = 0; drop < node->parts().size(); ++drop) {
        std::vector<FormulaPtr> kept;
        for (size_t i = 0; i < node->parts().size(); ++i) {
          if (i != drop) kept.push_back(node->parts()[i]);
        }
        FormulaPtr smaller = node->kind() == FormulaKind::And
                                 ? Formula::conj(kept)
                                 : Formula::meet(kept);
        FormulaPtr candidate = rebuild(f, node, smaller);
        if (separates(pts, candidate, t1, t2)) {
          f = candidate;
          improved = true;
          break;
        }
      }
      if (improved) break;
    }
  }
  return f;
}

}  // namespace

std::optional<FormulaPtr> distinguishing_formula(const Pts& pts,
                                                 const TermPtr& t1,
                                                 const TermPtr& t2,
                                                 char fragment) {
  if (!pts.has_state(t1) || !pts.has_state(t2)) {
    throw Error(ErrorCode::UnknownState, "both terms must be explored states");
  }
  std::vector<Partition> trace;
  if (fragment == 'a') {
    Partition final = la_quotient_trace(pts, &trace);
    if (final.same_block(t1, t2)) return std::nullopt;
  } else {
    BisimKind kind = fragment == 'b'   ? BisimKind::Strong
                     : fragment == 'c' ? BisimKind::Convex
                                       : BisimKind::Obliterated;
    Partition final = quotient_trace(pts, kind, &trace);
    if (final.same_block(t1, t2)) return std::nullopt;
  }
  Distinguisher d(pts, fragment, trace);
  FormulaPtr f = d.separate_states(t1, t2);
  f = minimize(pts, f, t1, t2);
  if (!in_fragment(f, fragment) || !separates(pts, f, t1, t2)) {
    throw Error(ErrorCode::FragmentMismatch,
                "synthesized formula failed verification: " + f->text());
  }
  return f;
}

}  // namespace ptss
