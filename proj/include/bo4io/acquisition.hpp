#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <vector>

#include "bo4io/common.hpp"
#include "bo4io/domain.hpp"
#include "bo4io/gp.hpp"
#include "bo4io/lowdisc.hpp"
#include "bo4io/parallel.hpp"

namespace bo4io {

struct AcquisitionConfig {
  double beta = 4.0;  ///< exploration factor; the LCB uses sqrt(beta)
  int restarts = 5;
  int local_steps = 30;
  std::uint64_t seed = 0;
  int scatter_per_dim = 512;
  int workers = 1;

  void validate() const {
    if (!(beta > 0.0)) throw ConfigError("acquisition: beta must be positive");
    if (restarts < 1) throw ConfigError("acquisition: restarts must be >= 1");
    if (local_steps < 0) throw ConfigError("acquisition: local_steps must be >= 0");
    if (scatter_per_dim < 1) throw ConfigError("acquisition: scatter_per_dim must be >= 1");
  }
};

/// mu(q) - sqrt(beta) * sigma(q).
inline double lcb(const GPModel& model, const Vector& query, double beta) {
  if (!(beta > 0.0)) throw InputError("lcb: beta must be positive");
  const auto p = model.posterior(query);
  return p.mean - std::sqrt(beta) * p.stddev();
}

/// mu(q) + sqrt(beta) * sigma(q).
inline double ucb(const GPModel& model, const Vector& query, double beta) {
  const auto p = model.posterior(query);
  return p.mean + std::sqrt(beta) * p.stddev();
}

using Objective = std::function<double(const Vector&)>;
using Projection = std::function<Vector(const Vector&)>;

struct LocalResult {
  Vector x;
  double value;
};

/// Projected gradient descent with central-difference gradients and Armijo backtracking.
/// Starting value `f0` must equal f(x0); the result never has a larger value than f0.
inline LocalResult projected_descent(const Objective& f, const Projection& proj, Vector x, double fx,
                                     const Vector& scale, int steps) {
  const auto n = x.size();
  double step = 0.1;
  for (int it = 0; it < steps; ++it) {
    Vector g(n);
    for (Eigen::Index j = 0; j < n; ++j) {
      const double h = 1e-6 * scale[j];
      Vector xp = x, xm = x;
      xp[j] += h;
      xm[j] -= h;
      g[j] = (f(xp) - f(xm)) / (2.0 * h);
    }
    if (!g.allFinite() || g.norm() == 0.0) break;
    // Step measured in units of the domain scale.
    const Vector dir = -g.cwiseProduct(scale.cwiseProduct(scale));
    bool accepted = false;
    double t = step / std::max(1e-300, (dir.array() / scale.array()).matrix().norm());
    for (int bt = 0; bt < 30; ++bt) {
      const Vector cand = proj(x + t * dir);
      const double delta = (cand - x).cwiseQuotient(scale).norm();
      if (delta < 1e-12) break;
      const double fc = f(cand);
      if (fc < fx - 1e-4 * g.dot(x - cand)) {
        x = cand;
        fx = fc;
        accepted = true;
        step = std::min(1.0, 2.0 * delta);
        break;
      }
      t *= 0.5;
    }
    if (!accepted) break;
  }
  return {std::move(x), fx};
}

struct ScatterCandidate {
  Vector point;
  double value;
  std::size_t index;
};

struct AcquisitionResult {
  Vector point;
  double value = 0.0;
  /// Scatter candidates in ascending value order (ties by index); truncated to a shortlist.
  std::vector<ScatterCandidate> ranked_scatter;
};

namespace detail {

/// Scatter + local refinement for an arbitrary objective over the domain.
inline AcquisitionResult minimize_over_domain(const Objective& f, const ParameterDomain& domain, int n_scatter,
                                              int restarts, int local_steps, std::uint64_t seed, int workers,
                                              std::size_t shortlist = 64) {
  domain.validate();
  const int d = domain.dim();
  LowDiscrepancySequence seq(d, seed);
  std::vector<ScatterCandidate> cands(static_cast<std::size_t>(n_scatter));
  parallel_for(cands.size(), workers, [&](std::size_t i) {
    Vector x = domain.from_unit(seq.point(i));
    const double v = f(x);
    cands[i] = {std::move(x), v, i};
  });
  auto less = [](const ScatterCandidate& a, const ScatterCandidate& b) {
    if (a.value != b.value) return a.value < b.value;
    return a.index < b.index;
  };
  std::sort(cands.begin(), cands.end(), less);

  const Vector scale = domain.effective_upper() - domain.effective_lower();
  const Projection proj = [&](const Vector& x) { return project(domain, x); };
  const std::size_t n_local = std::min<std::size_t>(static_cast<std::size_t>(restarts), cands.size());
  std::vector<LocalResult> local(n_local);
  parallel_for(n_local, workers, [&](std::size_t r) {
    local[r] = projected_descent(f, proj, cands[r].point, cands[r].value, scale, local_steps);
  });

  AcquisitionResult out;
  out.point = cands.front().point;
  out.value = cands.front().value;
  for (const auto& lr : local)
    if (lr.value < out.value) {
      out.point = lr.x;
      out.value = lr.value;
    }
  cands.resize(std::min(shortlist, cands.size()));
  out.ranked_scatter = std::move(cands);
  return out;
}

}  // namespace detail

/// Next query: best point over a low-discrepancy scatter of scatter_per_dim * d candidates and
/// projected local descents from the best `restarts` of them. Deterministic given cfg.seed.
inline AcquisitionResult minimize_acquisition(const GPModel& model, const ParameterDomain& domain,
                                              const AcquisitionConfig& cfg) {
  cfg.validate();
  if (model.dim() != domain.dim()) throw InputError("minimize_acquisition: model/domain dimension mismatch");
  const double root_beta = std::sqrt(cfg.beta);
  const Objective f = [&](const Vector& x) {
    const auto p = model.posterior(x);
    return p.mean - root_beta * p.stddev();
  };
  return detail::minimize_over_domain(f, domain, cfg.scatter_per_dim * domain.dim(), cfg.restarts, cfg.local_steps,
                                      stream_seed(cfg.seed, tag_of("acquisition"), 0), cfg.workers);
}

}  // namespace bo4io
