#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "bo4io/acquisition.hpp"
#include "bo4io/document.hpp"
#include "bo4io/domain.hpp"
#include "bo4io/gp.hpp"
#include "bo4io/lowdisc.hpp"
#include "bo4io/parallel.hpp"

namespace bo4io {

inline constexpr std::string_view kProfileMagic = "bo4io-profile v1";

/// (1 - alpha)-quantile of the chi-squared distribution with df degrees of freedom.
inline double chi2_quantile(double alpha, int df) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw InputError("chi2_quantile: alpha must be in (0, 1]");
  if (df < 1) throw InputError("chi2_quantile: df must be >= 1");
  if (alpha == 1.0) return 0.0;
  if (df == 1) {
    const double z = boost::math::quantile(boost::math::normal(), 1.0 - alpha / 2.0);
    return z * z;
  }
  // P(df/2, x/2) is increasing in x; bisect for P = 1 - alpha.
  const double a = 0.5 * df;
  double lo = 0.0, hi = 1.0;
  while (boost::math::gamma_p(a, hi / 2.0) < 1.0 - alpha) hi *= 2.0;
  for (int it = 0; it < 200 && hi - lo > 1e-14 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (boost::math::gamma_p(a, mid / 2.0) < 1.0 - alpha ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

struct ProfileConfig {
  int k = 0;  ///< parameter of interest
  double lower = 0.0, upper = 1.0;
  double delta = 0.01;  ///< grid step
  double rho = 3.84;
  double alpha = 0.05;
  int df = 1;
  int restarts = 8;           ///< slice re-optimization starts
  int local_steps = 40;
  int scatter_per_dim = 64;   ///< slice scatter points per free dimension
  std::uint64_t seed = 0;
  int workers = 1;

  void validate(int d) const {
    if (k < 0 || k >= d) throw ConfigError("profile: k out of range");
    if (!(std::isfinite(lower) && std::isfinite(upper) && lower < upper)) throw ConfigError("profile: need lower < upper");
    if (!(delta > 0.0)) throw ConfigError("profile: delta must be positive");
    if (!(rho > 0.0)) throw ConfigError("profile: rho must be positive");
    if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("profile: alpha must be in (0, 1)");
    if (df < 1) throw ConfigError("profile: df must be >= 1");
    if (restarts < 1 || scatter_per_dim < 1 || local_steps < 0) throw ConfigError("profile: bad optimizer settings");
  }
};

enum class Side { Lower, Upper };

struct Interval {
  double lo = 0.0, hi = 0.0;
  double width() const noexcept { return hi - lo; }
  bool contains(double x, double tol = 0.0) const noexcept { return x >= lo - tol && x <= hi + tol; }
};

enum class Identifiability { Structural, Practical, NonIdentifiable };

inline std::string to_string(Identifiability c) {
  switch (c) {
    case Identifiability::Structural: return "structurally-identifiable";
    case Identifiability::Practical: return "practically-non-identifiable";
    case Identifiability::NonIdentifiable: return "non-identifiable-within-range";
  }
  return "?";
}

struct ProfileResult {
  int k = 0;
  double lower = 0.0, upper = 1.0, delta = 0.0;
  std::vector<double> grid;
  std::vector<double> pl_lcb, pl_ucb;
  std::vector<Interval> oa_ci, ia_ci;
  Identifiability classification = Identifiability::Structural;
  double l_star = 0.0;      ///< best observed loss
  double l_hat_lcb = 0.0;   ///< optimistic minimum used by the IA threshold
  double delta_alpha = 0.0;
  double rho = 0.0;

  double oa_width() const {
    double w = 0.0;
    for (const auto& i : oa_ci) w += i.width();
    return w;
  }
  double ia_width() const {
    double w = 0.0;
    for (const auto& i : ia_ci) w += i.width();
    return w;
  }
};

namespace detail {

/// Bounds of the free coordinates with θ_k fixed; `cap` is the simplex budget (inf if uncoupled).
struct Slice {
  int k;
  double theta_k;
  Vector lo, hi;
  double cap;
  bool empty;

  Slice(const ParameterDomain& dom, int k_, double t) : k(k_), theta_k(t) {
    const int d = dom.dim();
    const Vector elo = dom.effective_lower(), ehi = dom.effective_upper();
    lo.resize(d - 1);
    hi.resize(d - 1);
    for (int j = 0, m = 0; j < d; ++j)
      if (j != k) {
        lo[m] = elo[j];
        hi[m] = ehi[j];
        ++m;
      }
    cap = dom.simplex_coupled ? 1.0 - t : std::numeric_limits<double>::infinity();
    empty = dom.simplex_coupled && lo.sum() > cap + 1e-15;
  }

  Vector project(const Vector& y) const {
    if (std::isfinite(cap)) return project_capped_box(y, lo, hi, cap);
    return y.cwiseMax(lo).cwiseMin(hi);
  }

  Vector full(const Vector& y) const {
    Vector x(y.size() + 1);
    for (Eigen::Index j = 0, m = 0; j < x.size(); ++j) x[j] = j == k ? theta_k : y[m++];
    return x;
  }
};

inline double confidence_bound(const GPModel& model, const Vector& x, double root_rho, Side side) {
  const auto p = model.posterior(x);
  return side == Side::Lower ? p.mean - root_rho * p.stddev() : p.mean + root_rho * p.stddev();
}

}  // namespace detail

/// Confidence bound on the profile likelihood at θ_k: min over the other parameters of
/// mu ∓ sqrt(rho)·sigma, by a Sobol' scatter over the slice and projected descents from the best
/// `restarts` scatter points. Returns +inf if θ_k leaves no feasible slice.
inline double pl_bound(const GPModel& model, const ParameterDomain& domain, const ProfileConfig& cfg, double theta_k,
                       Side side) {
  const int d = domain.dim();
  const double root_rho = std::sqrt(cfg.rho);
  if (d == 1) return detail::confidence_bound(model, Vector::Constant(1, theta_k), root_rho, side);
  const detail::Slice s(domain, cfg.k, theta_k);
  if (s.empty) return std::numeric_limits<double>::infinity();
  const Objective f = [&](const Vector& y) { return detail::confidence_bound(model, s.full(y), root_rho, side); };
  LowDiscrepancySequence seq(d - 1, stream_seed(cfg.seed, tag_of("profile-slice"), static_cast<std::uint64_t>(cfg.k)));
  const int n = cfg.scatter_per_dim * (d - 1);
  std::vector<ScatterCandidate> cands;
  cands.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    Vector y = s.project(s.lo + seq.point(static_cast<std::uint64_t>(i)).cwiseProduct(s.hi - s.lo));
    const double v = f(y);
    cands.push_back({std::move(y), v, static_cast<std::size_t>(i)});
  }
  std::sort(cands.begin(), cands.end(), [](const auto& a, const auto& b) {
    return a.value != b.value ? a.value < b.value : a.index < b.index;
  });
  const Vector scale = (s.hi - s.lo).cwiseMax(1e-12);
  const Projection proj = [&](const Vector& y) { return s.project(y); };
  double best = cands.front().value;
  const auto starts = std::min<std::size_t>(static_cast<std::size_t>(cfg.restarts), cands.size());
  for (std::size_t r = 0; r < starts; ++r)
    best = std::min(best, projected_descent(f, proj, cands[r].point, cands[r].value, scale, cfg.local_steps).value);
  return best;
}

namespace detail {

/// Maximal runs of grid points with value <= thr, endpoints refined by bisection on `eval`
/// between a member and its non-member neighbour down to `tol`.
template <typename Eval>
std::vector<Interval> threshold_intervals(const std::vector<double>& grid, const std::vector<double>& values,
                                          double thr, double tol, Eval&& eval) {
  std::vector<Interval> out;
  const std::size_t n = grid.size();
  auto refine = [&](double in, double out_pt) {
    for (int it = 0; it < 200 && std::abs(out_pt - in) > tol; ++it) {
      const double mid = 0.5 * (in + out_pt);
      (eval(mid) <= thr ? in : out_pt) = mid;
    }
    return in;
  };
  std::size_t i = 0;
  while (i < n) {
    if (!(values[i] <= thr)) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j + 1 < n && values[j + 1] <= thr) ++j;
    Interval iv{grid[i], grid[j]};
    if (i > 0) iv.lo = refine(grid[i], grid[i - 1]);
    if (j + 1 < n) iv.hi = refine(grid[j], grid[j + 1]);
    out.push_back(iv);
    i = j + 1;
  }
  return out;
}

inline std::vector<Interval> intersect(const std::vector<Interval>& a, const std::vector<Interval>& b) {
  std::vector<Interval> out;
  for (const auto& x : a)
    for (const auto& y : b) {
      const double lo = std::max(x.lo, y.lo), hi = std::min(x.hi, y.hi);
      if (lo <= hi) out.push_back({lo, hi});
    }
  std::sort(out.begin(), out.end(), [](const auto& p, const auto& q) { return p.lo < q.lo; });
  return out;
}

}  // namespace detail

/// Classification from the OA intervals and the PL^LCB profile over the sampled range.
///   flat PL^LCB (max - min <= 1e-3·Δ_α)                  -> non-identifiable within range
///   single OA interval with both endpoints interior       -> structurally identifiable
///   otherwise                                             -> practically non-identifiable
/// (the last case covers OA touching a range end, with or without a strict interior minimum,
/// and multiple disjoint intervals).
inline Identifiability classify_identifiability(const ProfileResult& r) {
  std::vector<double> finite;
  for (double v : r.pl_lcb)
    if (std::isfinite(v)) finite.push_back(v);
  if (finite.empty()) return Identifiability::NonIdentifiable;
  const auto [mn, mx] = std::minmax_element(finite.begin(), finite.end());
  if (*mx - *mn <= 1e-3 * r.delta_alpha) return Identifiability::NonIdentifiable;
  const double eps = 1e-9 * (r.upper - r.lower);
  if (r.oa_ci.size() == 1 && r.oa_ci[0].lo > r.lower + eps && r.oa_ci[0].hi < r.upper - eps)
    return Identifiability::Structural;
  return Identifiability::Practical;
}

/// Grid over [lower, upper] with step delta (upper always included) plus any extra points.
inline std::vector<double> profile_grid(const ProfileConfig& cfg, const std::vector<double>& extra = {}) {
  std::vector<double> g;
  const auto n = static_cast<long>(std::floor((cfg.upper - cfg.lower) / cfg.delta + 1e-9));
  for (long i = 0; i <= n; ++i) g.push_back(cfg.lower + static_cast<double>(i) * cfg.delta);
  if (cfg.upper - g.back() > 1e-12 * std::max(1.0, std::abs(cfg.upper))) g.push_back(cfg.upper);
  for (double x : extra)
    if (x >= cfg.lower && x <= cfg.upper) g.push_back(x);
  std::sort(g.begin(), g.end());
  g.erase(std::unique(g.begin(), g.end()), g.end());
  return g;
}

/// Outer approximation: {θ_k : PL^LCB(θ_k) <= l*_t + Δ_α}. The incumbent coordinate is inserted in
/// the grid; there the bound is additionally capped by l*_t, since the evaluated incumbent itself
/// proves PL(θ*_k) <= l*_t.
inline ProfileResult oa_ci(const GPModel& model, const ParameterDomain& domain, const ProfileConfig& cfg,
                           double l_star, const Vector& incumbent) {
  cfg.validate(domain.dim());
  ProfileResult r;
  r.k = cfg.k;
  r.lower = cfg.lower;
  r.upper = cfg.upper;
  r.delta = cfg.delta;
  r.rho = cfg.rho;
  r.l_star = l_star;
  r.delta_alpha = chi2_quantile(cfg.alpha, cfg.df);
  const double inc_k = incumbent.size() > cfg.k ? incumbent[cfg.k] : std::numeric_limits<double>::quiet_NaN();
  r.grid = profile_grid(cfg, std::isfinite(inc_k) ? std::vector<double>{inc_k} : std::vector<double>{});
  auto lcb_at = [&](double t) {
    double v = pl_bound(model, domain, cfg, t, Side::Lower);
    if (t == inc_k) v = std::min(v, l_star);
    return v;
  };
  r.pl_lcb.resize(r.grid.size());
  r.pl_ucb.resize(r.grid.size());
  parallel_for(r.grid.size(), cfg.workers, [&](std::size_t i) {
    r.pl_lcb[i] = lcb_at(r.grid[i]);
    r.pl_ucb[i] = pl_bound(model, domain, cfg, r.grid[i], Side::Upper);
  });
  r.oa_ci = detail::threshold_intervals(r.grid, r.pl_lcb, l_star + r.delta_alpha, cfg.delta / 100.0, lcb_at);
  r.classification = classify_identifiability(r);
  return r;
}

/// Optimistic minimum of the loss: global minimum of mu - sqrt(rho)·sigma over the domain, capped
/// by the best observed loss.
inline double optimistic_minimum(const GPModel& model, const ParameterDomain& domain, const ProfileConfig& cfg,
                                 double l_star) {
  AcquisitionConfig acq;
  acq.beta = cfg.rho;
  acq.seed = stream_seed(cfg.seed, tag_of("profile-lcb"), 0);
  acq.workers = cfg.workers;
  return std::min(minimize_acquisition(model, domain, acq).value, l_star);
}

/// Inner approximation: {θ_k : PL^UCB(θ_k) <= l̂*^LCB + Δ_α}, intersected with the OA set.
inline void ia_ci(const GPModel& model, const ParameterDomain& domain, const ProfileConfig& cfg, ProfileResult& r) {
  r.l_hat_lcb = optimistic_minimum(model, domain, cfg, r.l_star);
  auto ucb_at = [&](double t) { return pl_bound(model, domain, cfg, t, Side::Upper); };
  const auto raw = detail::threshold_intervals(r.grid, r.pl_ucb, r.l_hat_lcb + r.delta_alpha, cfg.delta / 100.0, ucb_at);
  r.ia_ci = detail::intersect(raw, r.oa_ci);
}

/// OA and IA intervals plus classification for parameter cfg.k.
inline ProfileResult profile_parameter(const GPModel& model, const ParameterDomain& domain, const ProfileConfig& cfg,
                                       double l_star, const Vector& incumbent) {
  auto r = oa_ci(model, domain, cfg, l_star, incumbent);
  ia_ci(model, domain, cfg, r);
  return r;
}

inline TextDocument to_document(const ProfileResult& r) {
  TextDocument doc{std::string(kProfileMagic)};
  doc.add("parameter", static_cast<double>(r.k + 1));
  doc.add("range", {format_number(r.lower), format_number(r.upper)});
  doc.add("delta", r.delta);
  doc.add("rho", r.rho);
  doc.add("delta_alpha", r.delta_alpha);
  doc.add("l_star", r.l_star);
  doc.add("l_hat_lcb", r.l_hat_lcb);
  const double oa_thr = r.l_star + r.delta_alpha, ia_thr = r.l_hat_lcb + r.delta_alpha;
  for (std::size_t i = 0; i < r.grid.size(); ++i)
    doc.add("point", {format_number(r.grid[i]), format_number(r.pl_lcb[i]), format_number(r.pl_ucb[i]),
                      r.pl_lcb[i] <= oa_thr ? "1" : "0", r.pl_ucb[i] <= ia_thr ? "1" : "0"});
  for (const auto& iv : r.oa_ci) doc.add("oa", {format_number(iv.lo), format_number(iv.hi)});
  for (const auto& iv : r.ia_ci) doc.add("ia", {format_number(iv.lo), format_number(iv.hi)});
  doc.add("oa_width", r.oa_width());
  doc.add("ia_width", r.ia_width());
  doc.add("classification", to_string(r.classification));
  return doc;
}

}  // namespace bo4io
