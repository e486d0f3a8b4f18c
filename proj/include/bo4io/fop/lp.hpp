#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "bo4io/common.hpp"
#include "bo4io/fop/solution.hpp"

namespace bo4io {

/// min c'x  s.t.  A_eq x = b_eq,  A_ub x <= b_ub,  lb <= x <= ub  (bounds may be infinite).
struct LinearProgramSpec {
  Vector c;
  Matrix A_eq;
  Vector b_eq;
  Matrix A_ub;
  Vector b_ub;
  Vector lb;
  Vector ub;

  /// n nonnegative variables, zero objective, no rows.
  static LinearProgramSpec nonnegative(Eigen::Index n) {
    LinearProgramSpec lp;
    lp.c = Vector::Zero(n);
    lp.A_eq = Matrix::Zero(0, n);
    lp.b_eq = Vector::Zero(0);
    lp.A_ub = Matrix::Zero(0, n);
    lp.b_ub = Vector::Zero(0);
    lp.lb = Vector::Zero(n);
    lp.ub = Vector::Constant(n, std::numeric_limits<double>::infinity());
    return lp;
  }

  Eigen::Index num_vars() const noexcept { return c.size(); }

  void validate() const {
    const auto n = num_vars();
    if (A_eq.cols() != n || A_ub.cols() != n || lb.size() != n || ub.size() != n)
      throw InputError("lp: inconsistent column dimensions");
    if (A_eq.rows() != b_eq.size() || A_ub.rows() != b_ub.size())
      throw InputError("lp: inconsistent row dimensions");
    for (Eigen::Index j = 0; j < n; ++j) {
      if (std::isnan(lb[j]) || std::isnan(ub[j]) || lb[j] > ub[j]) throw InputError("lp: lb > ub");
      if (lb[j] == std::numeric_limits<double>::infinity() || ub[j] == -std::numeric_limits<double>::infinity())
        throw InputError("lp: bound at wrong infinity");
    }
    if (!c.allFinite() || !A_eq.allFinite() || !b_eq.allFinite() || !A_ub.allFinite() || !b_ub.allFinite())
      throw InputError("lp: non-finite coefficient");
  }
};

struct LpOptions {
  double pivot_tol = 1e-9;
  double feas_tol = 1e-9;
  int max_iterations = 0;  ///< 0: automatic
};

namespace detail {

/// Dense tableau simplex over  A x (=|<=) b, x >= 0  with Bland's anti-cycling rule.
class Tableau {
 public:
  Matrix T;                     // rows 0..m-1 constraints, row m reduced costs; last column rhs
  std::vector<Eigen::Index> basis;
  double tol;

  Eigen::Index m() const { return T.rows() - 1; }
  Eigen::Index ncols() const { return T.cols() - 1; }

  void pivot(Eigen::Index r, Eigen::Index e) {
    T.row(r) /= T(r, e);
    for (Eigen::Index i = 0; i < T.rows(); ++i)
      if (i != r && T(i, e) != 0.0) T.row(i) -= T(i, e) * T.row(r);
    T(r, e) = 1.0;
    basis[static_cast<std::size_t>(r)] = e;
  }

  void set_costs(const Vector& cost) {
    T.row(m()).setZero();
    T.row(m()).head(cost.size()) = cost.transpose();
    for (Eigen::Index r = 0; r < m(); ++r) {
      const double cb = T(m(), basis[static_cast<std::size_t>(r)]);
      if (cb != 0.0) T.row(m()) -= cb * T.row(r);
    }
  }

  enum class Outcome { Optimal, Unbounded };

  Outcome run(Eigen::Index allowed_cols, int& budget) {
    const Eigen::Index rhs = ncols();
    while (true) {
      if (--budget < 0) throw NumericalError("simplex: iteration limit reached");
      Eigen::Index e = -1;
      for (Eigen::Index j = 0; j < allowed_cols; ++j)
        if (T(m(), j) < -tol) {
          e = j;
          break;
        }
      if (e < 0) return Outcome::Optimal;
      Eigen::Index leave = -1;
      double best = std::numeric_limits<double>::infinity();
      for (Eigen::Index r = 0; r < m(); ++r) {
        if (T(r, e) <= tol) continue;
        const double ratio = std::max(0.0, T(r, rhs)) / T(r, e);
        const bool tie = leave >= 0 && std::abs(ratio - best) <= 1e-12 * (1.0 + best);
        if ((!tie && ratio < best) ||
            (tie && basis[static_cast<std::size_t>(r)] < basis[static_cast<std::size_t>(leave)])) {
          best = tie ? std::min(best, ratio) : ratio;
          leave = r;
        }
      }
      if (leave < 0) return Outcome::Unbounded;
      pivot(leave, e);
    }
  }

  void drop_row(Eigen::Index r) {
    Matrix next(T.rows() - 1, T.cols());
    next.topRows(r) = T.topRows(r);
    next.bottomRows(T.rows() - 1 - r) = T.bottomRows(T.rows() - 1 - r);
    T = std::move(next);
    basis.erase(basis.begin() + r);
  }
};

}  // namespace detail

/// Two-phase dense simplex. Returns an optimal basic solution, or Infeasible / Unbounded status.
inline FopSolution solve_lp(const LinearProgramSpec& lp, const LpOptions& opt = {}) {
  lp.validate();
  constexpr double inf = std::numeric_limits<double>::infinity();
  const Eigen::Index n = lp.num_vars();

  // x_j = shift_j + sign_j * x'_{pos_j}  (- x'_{neg_j} for free variables)
  std::vector<Eigen::Index> pos(static_cast<std::size_t>(n)), neg(static_cast<std::size_t>(n), -1);
  Vector shift = Vector::Zero(n), sign = Vector::Ones(n);
  Eigen::Index ncol = 0;
  std::vector<std::pair<Eigen::Index, double>> bound_rows;  // x'_col <= width
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto ju = static_cast<std::size_t>(j);
    pos[ju] = ncol++;
    if (lp.lb[j] > -inf) {
      shift[j] = lp.lb[j];
      if (lp.ub[j] < inf) bound_rows.emplace_back(pos[ju], lp.ub[j] - lp.lb[j]);
    } else if (lp.ub[j] < inf) {
      shift[j] = lp.ub[j];
      sign[j] = -1.0;
    } else {
      neg[ju] = ncol++;
    }
  }

  const Eigen::Index meq = lp.A_eq.rows(), mub = lp.A_ub.rows();
  const Eigen::Index nb = static_cast<Eigen::Index>(bound_rows.size());
  const Eigen::Index m = meq + mub + nb;
  Matrix A = Matrix::Zero(m, ncol);
  Vector b(m);
  auto map_row = [&](const auto& coeffs, double rhs, Eigen::Index r) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const double a = coeffs(j);
      if (a == 0.0) continue;
      const auto ju = static_cast<std::size_t>(j);
      A(r, pos[ju]) += a * sign[j];
      if (neg[ju] >= 0) A(r, neg[ju]) -= a;
      rhs -= a * shift[j];
    }
    b[r] = rhs;
  };
  for (Eigen::Index i = 0; i < meq; ++i) map_row(lp.A_eq.row(i), lp.b_eq[i], i);
  for (Eigen::Index i = 0; i < mub; ++i) map_row(lp.A_ub.row(i), lp.b_ub[i], meq + i);
  for (Eigen::Index k = 0; k < nb; ++k) {
    A(meq + mub + k, bound_rows[static_cast<std::size_t>(k)].first) = 1.0;
    b[meq + mub + k] = bound_rows[static_cast<std::size_t>(k)].second;
  }
  // Row equilibration.
  for (Eigen::Index r = 0; r < m; ++r) {
    const double s = A.row(r).cwiseAbs().maxCoeff();
    if (s > 0.0) {
      A.row(r) /= s;
      b[r] /= s;
    }
  }

  // Columns: structural | slacks (one per inequality row) | artificials.
  const Eigen::Index nslack = mub + nb;
  std::vector<Eigen::Index> art_rows;
  for (Eigen::Index r = 0; r < m; ++r)
    if (r < meq || b[r] < 0.0) art_rows.push_back(r);
  const Eigen::Index nart = static_cast<Eigen::Index>(art_rows.size());
  const Eigen::Index N = ncol + nslack + nart;

  detail::Tableau tab;
  tab.tol = opt.pivot_tol;
  tab.T = Matrix::Zero(m + 1, N + 1);
  tab.basis.assign(static_cast<std::size_t>(m), -1);
  tab.T.topLeftCorner(m, ncol) = A;
  tab.T.col(N).head(m) = b;
  for (Eigen::Index r = meq; r < m; ++r) tab.T(r, ncol + (r - meq)) = 1.0;
  for (Eigen::Index r = 0; r < m; ++r)
    if (tab.T(r, N) < 0.0) tab.T.row(r) *= -1.0;
  for (Eigen::Index k = 0; k < nart; ++k) {
    const Eigen::Index r = art_rows[static_cast<std::size_t>(k)];
    tab.T(r, ncol + nslack + k) = 1.0;
    tab.basis[static_cast<std::size_t>(r)] = ncol + nslack + k;
  }
  for (Eigen::Index r = meq; r < m; ++r)
    if (tab.basis[static_cast<std::size_t>(r)] < 0) tab.basis[static_cast<std::size_t>(r)] = ncol + (r - meq);

  int budget = opt.max_iterations > 0 ? opt.max_iterations : static_cast<int>(50 * (m + N) + 1000);
  const double b_scale = 1.0 + (m > 0 ? b.cwiseAbs().maxCoeff() : 0.0);

  if (nart > 0) {
    Vector c1 = Vector::Zero(N);
    c1.tail(nart).setOnes();
    tab.set_costs(c1);
    tab.run(N, budget);
    if (-tab.T(tab.m(), N) > opt.feas_tol * b_scale) {
      FopSolution s;
      s.status = SolveStatus::Infeasible;
      return s;
    }
    // Drive remaining artificials out of the basis; rows where that is impossible are redundant.
    const Eigen::Index first_art = ncol + nslack;
    for (Eigen::Index r = tab.m() - 1; r >= 0; --r) {
      if (tab.basis[static_cast<std::size_t>(r)] < first_art) continue;
      Eigen::Index e = -1;
      for (Eigen::Index j = 0; j < first_art; ++j)
        if (std::abs(tab.T(r, j)) > opt.pivot_tol) {
          e = j;
          break;
        }
      if (e >= 0)
        tab.pivot(r, e);
      else
        tab.drop_row(r);
    }
  }

  Vector c2 = Vector::Zero(N);
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto ju = static_cast<std::size_t>(j);
    c2[pos[ju]] += lp.c[j] * sign[j];
    if (neg[ju] >= 0) c2[neg[ju]] -= lp.c[j];
  }
  tab.set_costs(c2);
  if (tab.run(ncol + nslack, budget) == detail::Tableau::Outcome::Unbounded) {
    FopSolution s;
    s.status = SolveStatus::Unbounded;
    return s;
  }

  Vector xp = Vector::Zero(ncol);
  for (Eigen::Index r = 0; r < tab.m(); ++r) {
    const Eigen::Index j = tab.basis[static_cast<std::size_t>(r)];
    if (j < ncol) xp[j] = std::max(0.0, tab.T(r, N));
  }
  FopSolution s;
  s.x.resize(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto ju = static_cast<std::size_t>(j);
    double v = shift[j] + sign[j] * xp[pos[ju]];
    if (neg[ju] >= 0) v -= xp[neg[ju]];
    s.x[j] = std::clamp(v, lp.lb[j], lp.ub[j]);
  }
  s.objective = lp.c.dot(s.x);
  s.status = SolveStatus::Optimal;
  s.layout = {{"x", 0, n}};
  return s;
}

/// Largest constraint violation of x (equalities, inequalities, bounds).
inline double lp_violation(const LinearProgramSpec& lp, const Vector& x) {
  double v = 0.0;
  if (lp.A_eq.rows() > 0) v = std::max(v, (lp.A_eq * x - lp.b_eq).cwiseAbs().maxCoeff());
  if (lp.A_ub.rows() > 0) v = std::max(v, (lp.A_ub * x - lp.b_ub).maxCoeff());
  for (Eigen::Index j = 0; j < x.size(); ++j) v = std::max({v, lp.lb[j] - x[j], x[j] - lp.ub[j]});
  return v;
}

}  // namespace bo4io
