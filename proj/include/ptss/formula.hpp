#pragma once

#include <memory>
#include <string>
#include <vector>

#include "ptss/rational.hpp"

namespace ptss {

// Two-level modal logic.  State formulas:
//   phi := tt | <a>psi | <a>_c psi | phi /\ phi | !phi
// Distribution formulas:
//   psi := [phi]_p | psi /\ psi
// with p a rational in [0,1].
enum class FormulaKind {
  Top,
  Diamond,         // <a>psi
  CombinedDiamond, // <a>_c psi
  And,
  Not,
  Atom,            // [phi]_p
  Meet,
};

class Formula;
using FormulaPtr = std::shared_ptr<const Formula>;

class Formula {
 public:
  static FormulaPtr top();
  static FormulaPtr diamond(const std::string& action, FormulaPtr psi);
  static FormulaPtr combined_diamond(const std::string& action, FormulaPtr psi);
  static FormulaPtr conj(std::vector<FormulaPtr> parts);
  static FormulaPtr negate(FormulaPtr phi);
  static FormulaPtr atom(FormulaPtr phi, Rational bound);
  static FormulaPtr meet(std::vector<FormulaPtr> parts);

  FormulaKind kind() const { return kind_; }
  const std::string& action() const { return action_; }
  const std::vector<FormulaPtr>& parts() const { return parts_; }
  const Rational& bound() const { return bound_; }
  bool state_level() const;

  const std::string& text() const;

 private:
  Formula(FormulaKind k, std::string action, std::vector<FormulaPtr> parts,
          Rational bound);

  FormulaKind kind_;
  std::string action_;
  std::vector<FormulaPtr> parts_;
  Rational bound_;
  mutable std::string text_;
};

}  // namespace ptss
