#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "bo4io/common.hpp"
#include "bo4io/fop/lp.hpp"
#include "bo4io/fop/solution.hpp"

namespace bo4io {

/// min  sum_k theta_k * sense_k * v_{obj_k} + lambda * ||v||^2   s.t.  S v = 0,  L <= v <= U.
/// sense_k = -1 turns "maximize flux k" into a minimization term.
struct FbaProblem {
  std::vector<std::string> metabolites;
  std::vector<std::string> reactions;
  Matrix stoichiometry;                 // |M| x |R|
  std::vector<Eigen::Index> objective;  // reaction indices in R^obj
  Vector objective_sense;               // +1 minimize, -1 maximize
  double lambda = 0.01;
  Vector lower;  // nominal bounds; per-observation bounds override them
  Vector upper;
  std::vector<Eigen::Index> randomized;  // reactions whose bounds are drawn per observation

  Eigen::Index num_reactions() const noexcept { return stoichiometry.cols(); }
  Eigen::Index num_objectives() const noexcept { return static_cast<Eigen::Index>(objective.size()); }

  void validate() const {
    const auto nr = num_reactions();
    if (static_cast<Eigen::Index>(reactions.size()) != nr ||
        static_cast<Eigen::Index>(metabolites.size()) != stoichiometry.rows())
      throw InputError("fba: name lists do not match stoichiometry shape");
    if (objective.empty()) throw InputError("fba: empty objective set");
    if (objective_sense.size() != num_objectives()) throw InputError("fba: objective sense size mismatch");
    for (auto k : objective)
      if (k < 0 || k >= nr) throw InputError("fba: objective reaction out of range");
    for (auto k : randomized)
      if (k < 0 || k >= nr) throw InputError("fba: randomized reaction out of range");
    if (!(lambda > 0.0)) throw InputError("fba: lambda must be positive");
    if (lower.size() != nr || upper.size() != nr) throw InputError("fba: bound size mismatch");
    if ((lower.array() > upper.array()).any()) throw InputError("fba: L > U");
  }

  /// Linear cost vector c for the given weights.
  Vector cost(const Vector& theta) const {
    if (theta.size() != num_objectives())
      throw InputError("fba: expected " + std::to_string(num_objectives()) + " weights, got " +
                       std::to_string(theta.size()));
    Vector c = Vector::Zero(num_reactions());
    for (Eigen::Index k = 0; k < num_objectives(); ++k)
      c[objective[static_cast<std::size_t>(k)]] += theta[k] * objective_sense[k];
    return c;
  }

  /// Reaction index by name (InputError if unknown).
  Eigen::Index reaction_index(const std::string& name) const {
    for (std::size_t k = 0; k < reactions.size(); ++k)
      if (reactions[k] == name) return static_cast<Eigen::Index>(k);
    throw InputError("fba: unknown reaction '" + name + "'");
  }
};

struct FbaOptions {
  int max_iterations = 500;
  double tolerance = 1e-11;  ///< on ||S v||_inf relative to max(1, ||v||_inf)
};

/// Bounds for one observation: fields "L"/"U" override the nominal ones when present.
inline std::pair<Vector, Vector> fba_bounds(const FbaProblem& p, const InputFields& u) {
  Vector L = p.lower, U = p.upper;
  if (auto it = u.find("L"); it != u.end()) L = it->second;
  if (auto it = u.find("U"); it != u.end()) U = it->second;
  if (L.size() != p.num_reactions() || U.size() != p.num_reactions())
    throw InputError("fba: bound vector has wrong length");
  if ((L.array() > U.array()).any()) throw InputError("fba: L > U in observation input");
  return {L, U};
}

/// Strictly convex QP via a semismooth Newton method on the dual of the equality constraints:
/// v(y) = clamp((S'y - c) / 2λ, L, U) solves the box-constrained Lagrangian exactly, and the
/// dual ascent drives S v(y) to zero. Feasibility is decided beforehand by an LP.
inline FopSolution solve_fba(const FbaProblem& p, const InputFields& u, const Vector& theta,
                             const FbaOptions& opt = {}) {
  p.validate();
  const auto [L, U] = fba_bounds(p, u);
  const Vector c = p.cost(theta);
  const Matrix& S = p.stoichiometry;
  const auto nr = p.num_reactions(), nm = S.rows();
  const double two_lam = 2.0 * p.lambda;

  {
    auto lp = LinearProgramSpec::nonnegative(nr);
    lp.A_eq = S;
    lp.b_eq = Vector::Zero(nm);
    lp.lb = L;
    lp.ub = U;
    if (solve_lp(lp).status != SolveStatus::Optimal) return FopSolution::infeasible();
  }

  auto primal = [&](const Vector& y) -> Vector {
    return ((S.transpose() * y - c) / two_lam).cwiseMax(L).cwiseMin(U);
  };
  auto dual_value = [&](const Vector& y, const Vector& v) {
    return c.dot(v) + p.lambda * v.squaredNorm() - y.dot(S * v);
  };

  Vector y = Vector::Zero(nm);
  Vector v = primal(y);
  double phi = dual_value(y, v);
  const double ridge = 1e-12 * (1.0 + S.cwiseAbs2().sum() / two_lam);
  bool converged = false;
  for (int it = 0; it < opt.max_iterations; ++it) {
    const Vector g = S * v;
    if (g.cwiseAbs().maxCoeff() <= opt.tolerance * std::max(1.0, v.cwiseAbs().maxCoeff())) {
      converged = true;
      break;
    }
    const Vector pre = (S.transpose() * y - c) / two_lam;
    Vector free(nr);
    for (Eigen::Index k = 0; k < nr; ++k) free[k] = (pre[k] > L[k] && pre[k] < U[k]) ? 1.0 : 0.0;
    Matrix H = S * free.asDiagonal() * S.transpose() / two_lam;
    H.diagonal().array() += ridge;
    Vector dy = H.ldlt().solve(-g);
    double slope = -g.dot(dy);
    if (!dy.allFinite() || slope <= 0.0) {
      dy = -g;  // steepest dual ascent
      slope = g.squaredNorm();
    }
    double t = 1.0;
    bool moved = false;
    for (int bt = 0; bt < 60; ++bt) {
      const Vector yn = y + t * dy;
      const Vector vn = primal(yn);
      const double phin = dual_value(yn, vn);
      if (phin >= phi + 1e-4 * t * slope || (bt > 40 && phin >= phi)) {
        y = yn;
        v = vn;
        phi = phin;
        moved = true;
        break;
      }
      t *= 0.5;
    }
    if (!moved) break;
  }
  if (!converged) {
    const Vector g = S * v;
    if (g.cwiseAbs().maxCoeff() > 1e-8 * std::max(1.0, v.cwiseAbs().maxCoeff()))
      throw NumericalError("fba: dual Newton did not converge (residual " +
                           std::to_string(g.cwiseAbs().maxCoeff()) + ")");
  }
  FopSolution s;
  s.x = v;
  s.objective = c.dot(v) + p.lambda * v.squaredNorm();
  s.status = SolveStatus::Optimal;
  s.layout = {{"v", 0, nr}};
  return s;
}

struct KktResidual {
  double primal = 0.0;      ///< max |S v| and bound violation
  double stationarity = 0.0;///< min over multipliers of ||grad L||_1 + complementarity
  double max() const { return std::max(primal, stationarity); }
};

/// Solver-independent optimality check: finds the best multipliers (y, mu_L, mu_U >= 0) for the
/// candidate v with an LP minimizing the stationarity violation plus complementarity.
inline KktResidual fba_kkt_residual(const FbaProblem& p, const InputFields& u, const Vector& theta,
                                    const Vector& v) {
  const auto [L, U] = fba_bounds(p, u);
  const Vector c = p.cost(theta);
  const Matrix& S = p.stoichiometry;
  const auto nr = p.num_reactions(), nm = S.rows();
  KktResidual r;
  r.primal = (S * v).cwiseAbs().maxCoeff();
  r.primal = std::max(r.primal, (L - v).maxCoeff());
  r.primal = std::max(r.primal, (v - U).maxCoeff());

  // Variables: y (nm, free) | muL (nr) | muU (nr) | e+ (nr) | e- (nr)
  const Eigen::Index n = nm + 4 * nr;
  auto lp = LinearProgramSpec::nonnegative(n);
  lp.lb.head(nm).setConstant(-std::numeric_limits<double>::infinity());
  lp.A_eq = Matrix::Zero(nr, n);
  lp.A_eq.leftCols(nm) = S.transpose();
  lp.A_eq.block(0, nm, nr, nr) = Matrix::Identity(nr, nr);
  lp.A_eq.block(0, nm + nr, nr, nr) = -Matrix::Identity(nr, nr);
  lp.A_eq.block(0, nm + 2 * nr, nr, nr) = Matrix::Identity(nr, nr);
  lp.A_eq.block(0, nm + 3 * nr, nr, nr) = -Matrix::Identity(nr, nr);
  lp.b_eq = c + 2.0 * p.lambda * v;
  for (Eigen::Index k = 0; k < nr; ++k) {
    if (std::isinf(L[k])) lp.ub[nm + k] = 0.0;
    else lp.c[nm + k] = std::max(0.0, v[k] - L[k]);
    if (std::isinf(U[k])) lp.ub[nm + nr + k] = 0.0;
    else lp.c[nm + nr + k] = std::max(0.0, U[k] - v[k]);
  }
  lp.c.tail(2 * nr).setOnes();
  const auto s = solve_lp(lp);
  r.stationarity = s.status == SolveStatus::Optimal ? s.objective : std::numeric_limits<double>::infinity();
  return r;
}

}  // namespace bo4io
