#pragma once

#include <boost/multiprecision/gmp.hpp>
#include <string>

namespace ptss {

// All probabilities and LP coefficients are exact rationals. Equality tests
// on measures must be exact, so no floating-point mode exists.
using Rational = boost::multiprecision::mpq_rational;

inline std::string to_string(const Rational& q) { return q.str(); }

/// Renders "p" or "p/q", matching the surface syntax accepted by the parser.
inline std::string rational_text(const Rational& q) {
  if (denominator(q) == 1) return numerator(q).str();
  return numerator(q).str() + "/" + denominator(q).str();
}

}  // namespace ptss
