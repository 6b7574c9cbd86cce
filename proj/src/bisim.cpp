#include "ptss/bisim.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

#include "ptss/error.hpp"

namespace ptss {

const char* bisim_kind_name(BisimKind k) {
  switch (k) {
    case BisimKind::Strong: return "strong";
    case BisimKind::Convex: return "convex";
    case BisimKind::Abstracted: return "abstracted";
    case BisimKind::Obliterated: return "obliterated";
  }
  return "?";
}

BisimKind bisim_kind_from(const std::string& name) {
  if (name == "strong") return BisimKind::Strong;
  if (name == "convex") return BisimKind::Convex;
  if (name == "abstracted") return BisimKind::Abstracted;
  if (name == "obliterated") return BisimKind::Obliterated;
  throw Error(ErrorCode::FragmentMismatch, "unknown relation '" + name + "'");
}

bool Partition::same_block(const TermPtr& a, const TermPtr& b) const {
  auto ia = block_of.find(a);
  auto ib = block_of.find(b);
  if (ia == block_of.end() || ib == block_of.end()) {
    throw Error(ErrorCode::UnknownState,
                (ia == block_of.end() ? a : b)->text() + " is not a state");
  }
  return ia->second == ib->second;
}

bool Partition::refines(const Partition& other) const {
  for (const auto& block : blocks) {
    for (size_t i = 1; i < block.size(); ++i) {
      if (!other.same_block(block[0], block[i])) return false;
    }
  }
  return true;
}

namespace {

Partition seal(BisimKind kind, std::vector<std::vector<TermPtr>> blocks) {
  Partition p;
  p.kind = kind;
  for (auto& b : blocks) {
    std::sort(b.begin(), b.end(), TermLess{});
  }
  std::sort(blocks.begin(), blocks.end(),
            [](const auto& x, const auto& y) {
              return x.front()->text() < y.front()->text();
            });
  p.blocks = std::move(blocks);
  for (size_t i = 0; i < p.blocks.size(); ++i) {
    for (const auto& t : p.blocks[i]) p.block_of[t] = static_cast<int>(i);
  }
  return p;
}

std::vector<std::pair<int, Rational>> block_masses(const FiniteDistribution& pi,
                                                   const Partition& p) {
  std::map<int, Rational> acc;
  for (const auto& [t, mass] : pi.support()) acc[p.block_of.at(t)] += mass;
  return {acc.begin(), acc.end()};
}

std::string step_key(const FiniteDistribution& pi, const Partition& p,
                     bool masses) {
  std::ostringstream out;
  for (const auto& [block, mass] : block_masses(pi, p)) {
    out << block;
    if (masses) out << "=" << rational_text(mass);
    out << ";";
  }
  return out.str();
}

// One refinement pass by per-step signatures (strong and abstracted kinds).
std::vector<std::vector<TermPtr>> split_by_signature(const Pts& pts,
                                                     const Partition& p,
                                                     bool masses) {
  std::vector<std::vector<TermPtr>> out;
  for (const auto& block : p.blocks) {
    std::map<std::string, std::vector<TermPtr>> groups;
    for (const auto& t : block) {
      std::ostringstream sig;
      for (const auto& [a, steps] : pts.steps_of(t)) {
        std::set<std::string> keys;
        for (const auto& pi : steps) keys.insert(step_key(pi, p, masses));
        sig << a << "{";
        for (const auto& k : keys) sig << k << "|";
        sig << "}";
      }
      groups[sig.str()].push_back(t);
    }
    for (auto& [k, members] : groups) out.push_back(std::move(members));
  }
  return out;
}

std::vector<std::vector<TermPtr>> split_obliterated(const ObliteratedLts& lts,
                                                    const Partition& p) {
  std::vector<std::vector<TermPtr>> out;
  for (const auto& block : p.blocks) {
    std::map<std::string, std::vector<TermPtr>> groups;
    for (const auto& t : block) {
      std::ostringstream sig;
      auto it = lts.edges.find(t);
      if (it != lts.edges.end()) {
        for (const auto& [a, succs] : it->second) {
          std::set<int> succ_blocks;
          for (const auto& u : succs) succ_blocks.insert(p.block_of.at(u));
          sig << a << "{";
          for (int b : succ_blocks) sig << b << ",";
          sig << "}";
        }
      }
      groups[sig.str()].push_back(t);
    }
    for (auto& [k, members] : groups) out.push_back(std::move(members));
  }
  return out;
}

bool convex_transfer(const Pts& pts, const TermPtr& s, const TermPtr& t,
                     const Partition& p) {
  for (const auto& [a, steps] : pts.steps_of(s)) {
    for (const auto& pi : steps) {
      if (!combined_match(pts, t, a, pi, p)) return false;
    }
  }
  return true;
}

std::vector<std::vector<TermPtr>> split_convex(const Pts& pts,
                                               const Partition& p) {
  std::vector<std::vector<TermPtr>> out;
  for (const auto& block : p.blocks) {
    std::vector<int> cls(block.size(), -1);
    int next = 0;
    for (size_t i = 0; i < block.size(); ++i) {
      if (cls[i] >= 0) continue;
      cls[i] = next++;
      for (size_t j = i + 1; j < block.size(); ++j) {
        if (cls[j] >= 0) continue;
        if (convex_transfer(pts, block[i], block[j], p) &&
            convex_transfer(pts, block[j], block[i], p)) {
          cls[j] = cls[i];
        }
      }
    }
    std::vector<std::vector<TermPtr>> groups(next);
    for (size_t i = 0; i < block.size(); ++i) groups[cls[i]].push_back(block[i]);
    for (auto& g : groups) out.push_back(std::move(g));
  }
  return out;
}

}  // namespace

Partition quotient_trace(const Pts& pts, BisimKind kind,
                         std::vector<Partition>* trace) {
  std::vector<TermPtr> all(pts.states().begin(), pts.states().end());
  Partition p = seal(kind, all.empty()
                               ? std::vector<std::vector<TermPtr>>{}
                               : std::vector<std::vector<TermPtr>>{all});
  if (trace) trace->push_back(p);
  ObliteratedLts lts;
  if (kind == BisimKind::Obliterated) lts = build_oblit_lts(pts);
  while (true) {
    std::vector<std::vector<TermPtr>> next;
    switch (kind) {
      case BisimKind::Strong:
        next = split_by_signature(pts, p, /*masses=*/true);
        break;
      case BisimKind::Abstracted:
        next = split_by_signature(pts, p, /*masses=*/false);
        break;
      case BisimKind::Obliterated:
        next = split_obliterated(lts, p);
        break;
      case BisimKind::Convex:
        next = split_convex(pts, p);
        break;
    }
    Partition refined = seal(kind, std::move(next));
    if (refined.blocks.size() == p.blocks.size()) break;
    p = std::move(refined);
    if (trace) trace->push_back(p);
  }
  return p;
}

Partition quotient(const Pts& pts, BisimKind kind) {
  return quotient_trace(pts, kind, nullptr);
}

bool equivalent(const Pts& pts, const TermPtr& t1, const TermPtr& t2,
                BisimKind kind) {
  if (!pts.has_state(t1)) {
    throw Error(ErrorCode::UnknownState, t1->text() + " is not a state");
  }
  if (!pts.has_state(t2)) {
    throw Error(ErrorCode::UnknownState, t2->text() + " is not a state");
  }
  return quotient(pts, kind).same_block(t1, t2);
}

bool dist_match(const FiniteDistribution& pi1, const FiniteDistribution& pi2,
                const Partition& partition, BisimKind kind) {
  auto m1 = block_masses(pi1, partition);
  auto m2 = block_masses(pi2, partition);
  if (kind == BisimKind::Strong) return m1 == m2;
  if (kind == BisimKind::Abstracted) {
    auto support_blocks = [](const std::vector<std::pair<int, Rational>>& m) {
      std::set<int> out;
      for (const auto& [b, mass] : m) {
        if (mass > 0) out.insert(b);
      }
      return out;
    };
    return support_blocks(m1) == support_blocks(m2);
  }
  throw Error(ErrorCode::FragmentMismatch,
              "dist_match handles the strong and abstracted kinds");
}

bool support_match(const FiniteDistribution& pi1, const FiniteDistribution& pi2,
                   const std::function<bool(const TermPtr&, const TermPtr&)>& related) {
  for (const auto& [t, p] : pi1.support()) {
    bool covered = false;
    for (const auto& [u, q] : pi2.support()) covered = covered || related(t, u);
    if (!covered) return false;
  }
  for (const auto& [u, q] : pi2.support()) {
    bool covered = false;
    for (const auto& [t, p] : pi1.support()) covered = covered || related(t, u);
    if (!covered) return false;
  }
  return true;
}

bool support_match(const FiniteDistribution& pi1, const FiniteDistribution& pi2,
                   const Partition& partition) {
  return support_match(pi1, pi2, [&](const TermPtr& a, const TermPtr& b) {
    return partition.same_block(a, b);
  });
}

bool combined_match(const Pts& pts, const TermPtr& t2, const std::string& a,
                    const FiniteDistribution& pi1, const Partition& partition) {
  const auto& steps = pts.steps(t2, a);
  if (steps.empty()) return false;
  LpProblem lp;
  lp.num_vars = steps.size();
  std::map<int, Rational> want;
  for (const auto& [b, m] : block_masses(pi1, partition)) want[b] = m;
  for (size_t b = 0; b < partition.blocks.size(); ++b) {
    LpConstraint row;
    row.coef.reserve(steps.size());
    TermSet block_set(partition.blocks[b].begin(), partition.blocks[b].end());
    for (const auto& pi : steps) row.coef.push_back(measure(pi, block_set));
    row.cmp = LpCmp::Eq;
    auto it = want.find(static_cast<int>(b));
    row.rhs = it == want.end() ? Rational(0) : it->second;
    lp.constraints.push_back(std::move(row));
  }
  return lp_feasible(lp).has_value();
}

namespace {

// Literal transfer properties quantified over all closed sets of the current
// relation.  The relation stays an equivalence throughout the iteration, so
// its closed sets are exactly the unions of its classes.
struct NaiveCheck {
  const Pts& pts;
  std::vector<TermPtr> states;
  std::map<TermPtr, size_t, TermLess> index;
  std::vector<std::vector<char>> rel;

  std::vector<std::vector<size_t>> classes() const {
    std::vector<int> cls(states.size(), -1);
    int next = 0;
    for (size_t i = 0; i < states.size(); ++i) {
      if (cls[i] >= 0) continue;
      cls[i] = next++;
      for (size_t j = i + 1; j < states.size(); ++j) {
        if (rel[i][j]) {
          if (cls[j] >= 0 && cls[j] != cls[i]) {
            throw Error(ErrorCode::TooLarge, "relation lost transitivity");
          }
          cls[j] = cls[i];
        }
      }
    }
    std::vector<std::vector<size_t>> out(next);
    for (size_t i = 0; i < states.size(); ++i) out[cls[i]].push_back(i);
    return out;
  }

  // All closed sets, as bitmasks over classes expanded to state index sets.
  std::vector<std::vector<char>> closed_sets() const {
    auto cls = classes();
    size_t k = cls.size();
    std::vector<std::vector<char>> out;
    for (size_t mask = 0; mask < (size_t{1} << k); ++mask) {
      std::vector<char> in(states.size(), 0);
      for (size_t c = 0; c < k; ++c) {
        if (mask & (size_t{1} << c)) {
          for (size_t i : cls[c]) in[i] = 1;
        }
      }
      out.push_back(std::move(in));
    }
    return out;
  }

  Rational mass_in(const FiniteDistribution& pi,
                   const std::vector<char>& in) const {
    Rational total = 0;
    for (const auto& [t, p] : pi.support()) {
      if (in[index.at(t)]) total += p;
    }
    return total;
  }

  bool transfer(size_t s, size_t t, BisimKind kind,
                const std::vector<std::vector<char>>& closed) const {
    const TermPtr& ts = states[s];
    const TermPtr& tt = states[t];
    for (const auto& [a, steps] : pts.steps_of(ts)) {
      for (const auto& pi : steps) {
        switch (kind) {
          case BisimKind::Strong: {
            bool matched = false;
            for (const auto& pj : pts.steps(tt, a)) {
              bool same = true;
              for (const auto& q : closed) {
                if (mass_in(pi, q) != mass_in(pj, q)) {
                  same = false;
                  break;
                }
              }
              if (same) {
                matched = true;
                break;
              }
            }
            if (!matched) return false;
            break;
          }
          case BisimKind::Abstracted: {
            bool matched = false;
            for (const auto& pj : pts.steps(tt, a)) {
              bool same = true;
              for (const auto& q : closed) {
                if ((mass_in(pi, q) > 0) != (mass_in(pj, q) > 0)) {
                  same = false;
                  break;
                }
              }
              if (same) {
                matched = true;
                break;
              }
            }
            if (!matched) return false;
            break;
          }
          case BisimKind::Obliterated: {
            for (const auto& q : closed) {
              if (mass_in(pi, q) <= 0) continue;
              bool some = false;
              for (const auto& pj : pts.steps(tt, a)) {
                if (mass_in(pj, q) > 0) {
                  some = true;
                  break;
                }
              }
              if (!some) return false;
            }
            break;
          }
          case BisimKind::Convex: {
            const auto& steps2 = pts.steps(tt, a);
            if (steps2.empty()) return false;
            LpProblem lp;
            lp.num_vars = steps2.size();
            std::set<std::string> seen;
            for (const auto& q : closed) {
              LpConstraint row;
              row.coef.reserve(steps2.size());
              for (const auto& pj : steps2) row.coef.push_back(mass_in(pj, q));
              row.cmp = LpCmp::Eq;
              row.rhs = mass_in(pi, q);
              std::ostringstream key;
              for (const auto& c : row.coef) key << rational_text(c) << ",";
              key << rational_text(row.rhs);
              if (seen.insert(key.str()).second) {
                lp.constraints.push_back(std::move(row));
              }
            }
            if (!lp_feasible(lp)) return false;
            break;
          }
        }
      }
    }
    return true;
  }
};

}  // namespace

std::vector<std::pair<TermPtr, TermPtr>> naive_fixpoint(const Pts& pts,
                                                        BisimKind kind,
                                                        size_t max_states) {
  if (pts.num_states() > max_states) {
    throw Error(ErrorCode::TooLarge,
                "naive fixpoint limited to " + std::to_string(max_states) +
                    " states");
  }
  NaiveCheck chk{pts, {}, {}, {}};
  chk.states.assign(pts.states().begin(), pts.states().end());
  for (size_t i = 0; i < chk.states.size(); ++i) chk.index[chk.states[i]] = i;
  size_t n = chk.states.size();
  chk.rel.assign(n, std::vector<char>(n, 1));

  bool changed = true;
  while (changed) {
    changed = false;
    auto closed = chk.closed_sets();
    auto next = chk.rel;
    for (size_t i = 0; i < n; ++i) {
      for (size_t j = 0; j < n; ++j) {
        if (!chk.rel[i][j]) continue;
        if (!chk.transfer(i, j, kind, closed) ||
            !chk.transfer(j, i, kind, closed)) {
          next[i][j] = 0;
          next[j][i] = 0;
          changed = true;
        }
      }
    }
    chk.rel = std::move(next);
  }

  std::vector<std::pair<TermPtr, TermPtr>> out;
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = 0; j < n; ++j) {
      if (chk.rel[i][j]) out.emplace_back(chk.states[i], chk.states[j]);
    }
  }
  return out;
}

}  // namespace ptss
