#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "bo4io/common.hpp"

namespace bo4io {

namespace detail {

/// Euclidean projection of `p` onto {lo <= x <= hi, sum(x) <= cap}. Assumes the set is non-empty.
/// The returned point satisfies sum(x) <= cap as evaluated by a left-to-right sum.
inline Vector project_capped_box(const Vector& p, const Vector& lo, const Vector& hi, double cap) {
  const Eigen::Index n = p.size();
  auto clamp_shift = [&](double tau) {
    Vector x(n);
    for (Eigen::Index i = 0; i < n; ++i) x[i] = std::clamp(p[i] - tau, lo[i], hi[i]);
    return x;
  };
  auto total = [](const Vector& x) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) s += x[i];
    return s;
  };
  Vector x = clamp_shift(0.0);
  if (total(x) <= cap) return x;

  // sum(clamp(p - tau)) is non-increasing in tau; bracket and bisect.
  double tau_lo = 0.0;
  double tau_hi = (p - lo).maxCoeff();
  for (int it = 0; it < 200 && tau_hi - tau_lo > 0.0; ++it) {
    const double mid = 0.5 * (tau_lo + tau_hi);
    if (mid <= tau_lo || mid >= tau_hi) break;
    if (total(clamp_shift(mid)) > cap)
      tau_lo = mid;
    else
      tau_hi = mid;
  }
  // Closed form on the identified free set; keep it only if it is exactly feasible.
  const Vector at_hi = clamp_shift(tau_hi);
  double fixed = 0.0, free_sum = 0.0;
  int n_free = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double v = p[i] - tau_hi;
    if (v > lo[i] && v < hi[i]) {
      free_sum += p[i];
      ++n_free;
    } else {
      fixed += at_hi[i];
    }
  }
  if (n_free > 0) {
    const double tau = (free_sum + fixed - cap) / n_free;
    Vector exact = clamp_shift(tau);
    if (total(exact) <= cap) return exact;
  }
  return at_hi;
}

}  // namespace detail

/// Box bounds, optionally coupled to the unit simplex: with `simplex_coupled` the d free
/// parameters and the implicit weight 1 - sum(theta) must all lie in [0, 1].
struct ParameterDomain {
  Vector lower;
  Vector upper;
  bool simplex_coupled = false;

  ParameterDomain() = default;
  ParameterDomain(Vector lo, Vector hi, bool simplex = false)
      : lower(std::move(lo)), upper(std::move(hi)), simplex_coupled(simplex) {}

  static ParameterDomain unit_box(int d) { return {Vector::Zero(d), Vector::Ones(d), false}; }
  static ParameterDomain unit_simplex(int d) { return {Vector::Zero(d), Vector::Ones(d), true}; }

  int dim() const noexcept { return static_cast<int>(lower.size()); }
  Vector width() const { return upper - lower; }

  /// Bounds after intersecting with [0,1] when simplex coupled.
  Vector effective_lower() const { return simplex_coupled ? lower.cwiseMax(0.0) : lower; }
  Vector effective_upper() const { return simplex_coupled ? upper.cwiseMin(1.0) : upper; }

  void validate() const {
    if (lower.size() == 0 || lower.size() != upper.size())
      throw ConfigError("parameter domain: lower/upper must be non-empty and of equal length");
    for (Eigen::Index i = 0; i < lower.size(); ++i) {
      if (!std::isfinite(lower[i]) || !std::isfinite(upper[i]) || !(lower[i] < upper[i]))
        throw ConfigError("parameter domain: need finite lower < upper in dimension " + std::to_string(i));
    }
    if (simplex_coupled) {
      const Vector lo = effective_lower(), hi = effective_upper();
      if ((lo.array() > hi.array()).any() || lo.sum() > 1.0)
        throw ConfigError("parameter domain: simplex-coupled feasible set is empty");
    }
  }

  bool contains(const Vector& x, double tol = 0.0) const {
    if (x.size() != lower.size()) return false;
    const Vector lo = effective_lower(), hi = effective_upper();
    for (Eigen::Index i = 0; i < x.size(); ++i)
      if (x[i] < lo[i] - tol || x[i] > hi[i] + tol) return false;
    if (simplex_coupled) {
      double s = 0.0;
      for (Eigen::Index i = 0; i < x.size(); ++i) s += x[i];
      if (s > 1.0 + tol) return false;
    }
    return true;
  }

  /// Maps a unit-cube point into the domain. Simplex-coupled domains use sorted spacings so
  /// uniform cube points land uniformly on {theta >= 0, sum <= 1} before box projection.
  Vector from_unit(const Vector& u) const;

  /// Full weight vector (theta, 1 - sum(theta)) for simplex-coupled domains; identity otherwise.
  Vector full_vector(const Vector& theta) const {
    if (!simplex_coupled) return theta;
    Vector full(theta.size() + 1);
    full.head(theta.size()) = theta;
    full[theta.size()] = 1.0 - theta.sum();
    return full;
  }
};

/// Nearest feasible point (Euclidean) in the domain.
inline Vector project(const ParameterDomain& domain, const Vector& point) {
  if (point.size() != domain.dim())
    throw InputError("project: point has dimension " + std::to_string(point.size()) + ", domain has " +
                     std::to_string(domain.dim()));
  domain.validate();
  const Vector lo = domain.effective_lower(), hi = domain.effective_upper();
  if (!domain.simplex_coupled) return point.cwiseMax(lo).cwiseMin(hi);
  return detail::project_capped_box(point, lo, hi, 1.0);
}

inline Vector ParameterDomain::from_unit(const Vector& u) const {
  if (!simplex_coupled) return lower + u.cwiseProduct(width());
  std::vector<double> s(u.data(), u.data() + u.size());
  std::sort(s.begin(), s.end());
  Vector x(u.size());
  double prev = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    x[static_cast<Eigen::Index>(i)] = s[i] - prev;
    prev = s[i];
  }
  return project(*this, x);
}

}  // namespace bo4io
