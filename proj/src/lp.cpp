#include "ptss/lp.hpp"

#include <Eigen/Dense>

#include "ptss/error.hpp"

namespace ptss {

namespace {

using Matrix = Eigen::Matrix<Rational, Eigen::Dynamic, Eigen::Dynamic>;
using Vector = Eigen::Matrix<Rational, Eigen::Dynamic, 1>;

// Dense full-tableau simplex over exact rationals.  Bland's rule for both the
// entering and the leaving variable guarantees termination; problem sizes
// here are tiny (variables = transition out-degree).
class Simplex {
 public:
  Simplex(Matrix a, Vector b, std::vector<int> basis)
      : a_(std::move(a)), b_(std::move(b)), basis_(std::move(basis)) {}

  // Maximizes c.x over the current feasible basis; returns the optimum.
  Rational maximize(const Vector& c) {
    Eigen::Index m = a_.rows(), n = a_.cols();
    // Reduced-cost row, with the basic columns priced out.
    Vector red(n);
    for (Eigen::Index j = 0; j < n; ++j) red(j) = -c(j);
    Rational obj = 0;
    for (Eigen::Index i = 0; i < m; ++i) {
      Rational cb = c(basis_[i]);
      if (cb == 0) continue;
      for (Eigen::Index j = 0; j < n; ++j) red(j) += cb * a_(i, j);
      obj += cb * b_(i);
    }

    while (true) {
      Eigen::Index enter = -1;
      for (Eigen::Index j = 0; j < n; ++j) {
        if (red(j) < 0 && !is_basic(j)) {
          enter = j;
          break;
        }
      }
      if (enter < 0) return obj;
      Eigen::Index leave = -1;
      Rational best_ratio = 0;
      for (Eigen::Index i = 0; i < m; ++i) {
        if (a_(i, enter) <= 0) continue;
        Rational ratio = b_(i) / a_(i, enter);
        if (leave < 0 || ratio < best_ratio ||
            (ratio == best_ratio && basis_[i] < basis_[leave])) {
          leave = i;
          best_ratio = ratio;
        }
      }
      if (leave < 0) {
        throw Error(ErrorCode::BadWeights, "unbounded LP; missing cap row");
      }
      pivot(leave, enter);
      Rational factor = red(enter);
      if (factor != 0) {
        for (Eigen::Index j = 0; j < n; ++j) red(j) -= factor * a_(leave, j);
        obj -= factor * b_(leave);
      }
    }
  }

  void pivot(Eigen::Index row, Eigen::Index col) {
    Rational piv = a_(row, col);
    a_.row(row) /= piv;
    b_(row) /= piv;
    for (Eigen::Index i = 0; i < a_.rows(); ++i) {
      if (i == row || a_(i, col) == 0) continue;
      Rational f = a_(i, col);
      a_.row(i) -= f * a_.row(row);
      b_(i) -= f * b_(row);
    }
    basis_[row] = static_cast<int>(col);
  }

  bool is_basic(Eigen::Index col) const {
    for (int bj : basis_) {
      if (bj == col) return true;
    }
    return false;
  }

  /// Removes artificial columns [first_artificial, n) from the problem,
  /// pivoting them out of the basis or dropping redundant rows.
  void drop_artificials(Eigen::Index first_artificial) {
    for (Eigen::Index i = 0; i < a_.rows(); ++i) {
      if (basis_[i] < first_artificial) continue;
      Eigen::Index col = -1;
      for (Eigen::Index j = 0; j < first_artificial; ++j) {
        if (a_(i, j) != 0) {
          col = j;
          break;
        }
      }
      if (col >= 0) {
        pivot(i, col);
      } else {
        remove_row(i);
        --i;
      }
    }
    a_.conservativeResize(a_.rows(), first_artificial);
  }

  void remove_row(Eigen::Index row) {
    Eigen::Index m = a_.rows();
    for (Eigen::Index i = row; i + 1 < m; ++i) {
      a_.row(i) = a_.row(i + 1);
      b_(i) = b_(i + 1);
      basis_[i] = basis_[i + 1];
    }
    a_.conservativeResize(m - 1, a_.cols());
    b_.conservativeResize(m - 1);
    basis_.resize(m - 1);
  }

  Vector solution(Eigen::Index n) const {
    Vector x = Vector::Zero(n);
    for (Eigen::Index i = 0; i < a_.rows(); ++i) {
      if (basis_[i] < n) x(basis_[i]) = b_(i);
    }
    return x;
  }

 private:
  Matrix a_;
  Vector b_;
  std::vector<int> basis_;
};

}  // namespace

std::optional<std::vector<Rational>> lp_feasible(const LpProblem& p) {
  std::vector<LpConstraint> rows = p.constraints;
  if (p.unit_simplex) {
    LpConstraint sum;
    sum.coef.assign(p.num_vars, Rational(1));
    sum.cmp = LpCmp::Eq;
    sum.rhs = 1;
    rows.push_back(std::move(sum));
  }
  bool any_strict = false;
  for (const auto& r : rows) {
    if (r.coef.size() != p.num_vars) {
      throw Error(ErrorCode::BadWeights, "constraint arity mismatch");
    }
    any_strict = any_strict || r.cmp == LpCmp::Gt;
  }

  const Eigen::Index n_lambda = static_cast<Eigen::Index>(p.num_vars);
  const Eigen::Index t_col = any_strict ? n_lambda : -1;
  Eigen::Index n_struct = n_lambda + (any_strict ? 1 : 0);
  Eigen::Index m = static_cast<Eigen::Index>(rows.size()) + (any_strict ? 1 : 0);

  Eigen::Index n_surplus = 0;
  for (const auto& r : rows) {
    if (r.cmp != LpCmp::Eq) ++n_surplus;
  }
  if (any_strict) ++n_surplus;  // slack of the t <= 1 cap

  Eigen::Index n_total = n_struct + n_surplus + m;  // + one artificial per row
  Matrix a = Matrix::Zero(m, n_total);
  Vector b = Vector::Zero(m);

  Eigen::Index surplus = n_struct;
  Eigen::Index row = 0;
  for (const auto& r : rows) {
    for (Eigen::Index j = 0; j < n_lambda; ++j) a(row, j) = r.coef[j];
    if (r.cmp == LpCmp::Gt) a(row, t_col) = -1;
    if (r.cmp != LpCmp::Eq) a(row, surplus++) = -1;
    b(row) = r.rhs;
    ++row;
  }
  if (any_strict) {
    a(row, t_col) = 1;
    a(row, surplus++) = 1;
    b(row) = 1;
    ++row;
  }
  // Normalize each row to a nonnegative right-hand side, then add its
  // artificial variable for the Phase I basis.
  std::vector<int> basis(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    if (b(i) < 0) {
      a.row(i) = -a.row(i);
      b(i) = -b(i);
    }
    a(i, n_struct + n_surplus + i) = 1;
    basis[i] = static_cast<int>(n_struct + n_surplus + i);
  }

  Simplex s(std::move(a), std::move(b), std::move(basis));
  Vector phase1 = Vector::Zero(n_total);
  for (Eigen::Index j = n_struct + n_surplus; j < n_total; ++j) phase1(j) = -1;
  if (s.maximize(phase1) != 0) return std::nullopt;
  s.drop_artificials(n_struct + n_surplus);

  if (any_strict) {
    Vector phase2 = Vector::Zero(n_struct + n_surplus);
    phase2(t_col) = 1;
    if (s.maximize(phase2) <= 0) return std::nullopt;
  }

  Vector x = s.solution(n_lambda);
  std::vector<Rational> witness(p.num_vars);
  for (Eigen::Index j = 0; j < n_lambda; ++j) witness[j] = x(j);
  return witness;
}

}  // namespace ptss
