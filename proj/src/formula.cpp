#include "ptss/formula.hpp"

#include <sstream>

#include "ptss/error.hpp"

namespace ptss {

Formula::Formula(FormulaKind k, std::string action,
                 std::vector<FormulaPtr> parts, Rational bound)
    : kind_(k), action_(std::move(action)), parts_(std::move(parts)),
      bound_(std::move(bound)) {}

FormulaPtr Formula::top() {
  return FormulaPtr(new Formula(FormulaKind::Top, "", {}, 0));
}

FormulaPtr Formula::diamond(const std::string& action, FormulaPtr psi) {
  if (psi->state_level()) {
    throw Error(ErrorCode::LayerError, "<a> expects a distribution formula");
  }
  return FormulaPtr(new Formula(FormulaKind::Diamond, action, {std::move(psi)}, 0));
}

FormulaPtr Formula::combined_diamond(const std::string& action, FormulaPtr psi) {
  if (psi->state_level()) {
    throw Error(ErrorCode::LayerError, "<a>_c expects a distribution formula");
  }
  return FormulaPtr(
      new Formula(FormulaKind::CombinedDiamond, action, {std::move(psi)}, 0));
}

FormulaPtr Formula::conj(std::vector<FormulaPtr> parts) {
  if (parts.size() == 1) return parts[0];
  for (const auto& p : parts) {
    if (!p->state_level()) {
      throw Error(ErrorCode::LayerError, "conjunction mixes logic layers");
    }
  }
  return FormulaPtr(new Formula(FormulaKind::And, "", std::move(parts), 0));
}

FormulaPtr Formula::negate(FormulaPtr phi) {
  if (!phi->state_level()) {
    throw Error(ErrorCode::LayerError, "negation applies to state formulas");
  }
  return FormulaPtr(new Formula(FormulaKind::Not, "", {std::move(phi)}, 0));
}

FormulaPtr Formula::atom(FormulaPtr phi, Rational bound) {
  if (!phi->state_level()) {
    throw Error(ErrorCode::LayerError, "[phi]_p expects a state formula");
  }
  if (bound < 0 || bound > 1) {
    throw Error(ErrorCode::BadWeights, "bound must lie in [0,1]");
  }
  return FormulaPtr(
      new Formula(FormulaKind::Atom, "", {std::move(phi)}, std::move(bound)));
}

FormulaPtr Formula::meet(std::vector<FormulaPtr> parts) {
  if (parts.size() == 1) return parts[0];
  for (const auto& p : parts) {
    if (p->state_level()) {
      throw Error(ErrorCode::LayerError, "meet mixes logic layers");
    }
  }
  return FormulaPtr(new Formula(FormulaKind::Meet, "", std::move(parts), 0));
}

bool Formula::state_level() const {
  switch (kind_) {
    case FormulaKind::Top:
    case FormulaKind::Diamond:
    case FormulaKind::CombinedDiamond:
    case FormulaKind::And:
    case FormulaKind::Not:
      return true;
    default:
      return false;
  }
}

const std::string& Formula::text() const {
  if (!text_.empty()) return text_;
  std::ostringstream out;
  switch (kind_) {
    case FormulaKind::Top:
      out << "tt";
      break;
    case FormulaKind::Diamond:
    case FormulaKind::CombinedDiamond: {
      out << "<" << action_ << ">";
      if (kind_ == FormulaKind::CombinedDiamond) out << "_c";
      const FormulaPtr& psi = parts_[0];
      if (psi->kind() == FormulaKind::Meet) {
        out << "(" << psi->text() << ")";
      } else {
        out << psi->text();
      }
      break;
    }
    case FormulaKind::And:
    case FormulaKind::Meet:
      out << "(";
      for (size_t i = 0; i < parts_.size(); ++i) {
        if (i) out << " /\\ ";
        out << parts_[i]->text();
      }
      out << ")";
      break;
    case FormulaKind::Not:
      out << "!";
      if (parts_[0]->kind() == FormulaKind::And) {
        out << parts_[0]->text();
      } else {
        out << "(" << parts_[0]->text() << ")";
      }
      break;
    case FormulaKind::Atom:
      out << "[" << parts_[0]->text() << "]_" << rational_text(bound_);
      break;
  }
  text_ = out.str();
  return text_;
}

}  // namespace ptss
