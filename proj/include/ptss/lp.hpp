#pragma once

#include <optional>
#include <vector>

#include "ptss/rational.hpp"

namespace ptss {

enum class LpCmp { Ge, Gt, Eq };

struct LpConstraint {
  std::vector<Rational> coef;
  LpCmp cmp = LpCmp::Ge;
  Rational rhs;
};

// Feasibility problem over weight vectors: all variables satisfy lambda >= 0,
// and with unit_simplex set (the default) also sum(lambda) = 1.  Strict
// inequalities are decided exactly by maximizing a shared slack added to
// every Gt row and testing whether the optimum is positive.
struct LpProblem {
  size_t num_vars = 0;
  bool unit_simplex = true;
  std::vector<LpConstraint> constraints;

  void add(std::vector<Rational> coef, LpCmp cmp, Rational rhs) {
    constraints.push_back({std::move(coef), cmp, std::move(rhs)});
  }
};

/// Exact rational feasibility; returns a witness point when feasible.
std::optional<std::vector<Rational>> lp_feasible(const LpProblem& p);

}  // namespace ptss
