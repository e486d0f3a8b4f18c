#pragma once

#include <functional>
#include <random>
#include <string>
#include <vector>

#include "bo4io/common.hpp"
#include "bo4io/fop/forward.hpp"
#include "bo4io/loss.hpp"

namespace bo4io {

struct GenSpec {
  std::string network = "toy10";  ///< bundled name or path to a network document
  int d = 2;
  int n_train = 20;
  int n_test = 20;
  double sigma = 0.01;
  std::uint64_t seed = 0;
  int max_redraws = 100;
  int workers = 1;

  void validate() const {
    if (!(sigma >= 0.0)) throw ConfigError("datagen: sigma must be >= 0");
    if (n_train < 1) throw ConfigError("datagen: n_train must be >= 1");
    if (n_test < 0) throw ConfigError("datagen: n_test must be >= 0");
    if (d < 1) throw ConfigError("datagen: d must be >= 1");
    if (max_redraws < 0) throw ConfigError("datagen: max_redraws must be >= 0");
  }
};

struct GeneratedData {
  std::string family;
  Vector theta_true;       ///< the d searched parameters
  Vector theta_true_full;  ///< expanded parameter vector
  ObservationSet train;
  ObservationSet test;
  /// Noise-free decisions in raw units, per set, for feasibility checks.
  std::vector<FopSolution> train_clean, test_clean;
};

namespace detail {

inline std::mt19937_64 rng_for(std::uint64_t seed, std::string_view tag, std::uint64_t index, std::uint64_t attempt = 0) {
  return std::mt19937_64(stream_seed(stream_seed(seed, tag_of(tag), index), tag_of("attempt"), attempt));
}

inline double uniform(std::mt19937_64& rng, double a, double b) {
  return std::uniform_real_distribution<double>(a, b)(rng);
}

/// Per-column population mean/std; zero-variance columns get scale 1.
inline void standardization(const std::vector<Vector>& rows, Vector& center, Vector& scale) {
  const auto n = rows.front().size();
  center = Vector::Zero(n);
  for (const auto& r : rows) center += r;
  center /= static_cast<double>(rows.size());
  scale = Vector::Zero(n);
  for (const auto& r : rows) scale += (r - center).cwiseAbs2();
  scale = (scale / static_cast<double>(rows.size())).cwiseSqrt();
  for (Eigen::Index k = 0; k < n; ++k)
    if (!(scale[k] > 1e-9 * std::max(1.0, std::abs(center[k])))) scale[k] = 1.0;
}

/// Draws per-observation inputs until the forward problem is feasible; returns (input, solution).
template <typename DrawFn>
std::pair<InputFields, FopSolution> feasible_draw(const ForwardProblem& fp, const Vector& full, std::uint64_t seed,
                                                  std::string_view tag, std::uint64_t index, int max_redraws,
                                                  DrawFn&& draw) {
  for (int attempt = 0; attempt <= max_redraws; ++attempt) {
    auto rng = rng_for(seed, tag, index, static_cast<std::uint64_t>(attempt));
    InputFields u = draw(rng);
    auto s = fp.solve(u, full);
    if (s.usable()) return {std::move(u), std::move(s)};
  }
  throw InputError("datagen: observation " + std::to_string(index) + " infeasible after " +
                   std::to_string(max_redraws) + " redraws");
}

}  // namespace detail

/// Synthetic dataset for any bundled family. Every random quantity comes from a stream keyed by
/// (seed, purpose, index), so train and test sets are independent of each other's sizes and a
/// redraw never shifts later draws.
inline GeneratedData generate(const GenSpec& spec, const ForwardProblem& fp, const Parameterization& par) {
  spec.validate();
  GeneratedData g;
  g.family = fp.family();
  auto rng_theta = detail::rng_for(spec.seed, "theta", 0);
  const auto d = static_cast<Eigen::Index>(spec.d);
  if (par.d != d) throw ConfigError("datagen: parameterization dimension does not match d");

  InputFields shared;  // per-instance fields shared by all observations
  std::function<InputFields(std::mt19937_64&)> draw;
  std::vector<std::string> mask;
  bool standardize = false;

  if (g.family == "fba") {
    // θ ~ Dirichlet(1, ..., 1) over d+1 weights.
    std::gamma_distribution<double> gamma(1.0, 1.0);
    Vector w(d + 1);
    for (Eigen::Index k = 0; k <= d; ++k) w[k] = gamma(rng_theta);
    w /= w.sum();
    g.theta_true = w.head(d);
    // Networks are re-read from the document so this also works behind an external oracle.
    const auto p = fba_from_document(fp.document());
    draw = [p](std::mt19937_64& rng) {
      Vector L = p.lower, U = p.upper;
      for (auto k : p.randomized) {
        const double a = detail::uniform(rng, 10.0, 100.0), b = detail::uniform(rng, 10.0, 100.0);
        L[k] = std::min(a, b);
        U[k] = std::max(a, b);
      }
      return InputFields{{"L", L}, {"U", U}};
    };
    mask = {"v"};
    standardize = true;
  } else if (g.family == "pooling") {
    const auto n = pooling_from_document(fp.document());
    g.theta_true.resize(d);
    for (Eigen::Index j = 0; j < d; ++j) g.theta_true[j] = detail::uniform(rng_theta, 0.5, 1.0);
    auto rng_inst = detail::rng_for(spec.seed, "instance", 0);
    Vector eta(n.num_feeds()), ry(n.revenue_y.size()), rz(n.revenue_z.size());
    for (auto& v : eta) v = detail::uniform(rng_inst, n.feed_cost.minCoeff(), n.feed_cost.maxCoeff());
    if (ry.size() > 0)
      for (auto& v : ry) v = detail::uniform(rng_inst, n.revenue_y.minCoeff(), n.revenue_y.maxCoeff());
    if (rz.size() > 0)
      for (auto& v : rz) v = detail::uniform(rng_inst, n.revenue_z.minCoeff(), n.revenue_z.maxCoeff());
    shared = {{"cost", eta}, {"revenue_y", ry}, {"revenue_z", rz}};
    draw = [n, shared](std::mt19937_64& rng) {
      InputFields u = shared;
      Vector a(n.num_feeds());
      for (auto& v : a) v = detail::uniform(rng, 0.5, 1.0);
      u["availability"] = a;
      return u;
    };
    mask = {"f", "y"};
  } else if (g.family == "genpooling") {
    const auto n = genpooling_from_document(fp.document());
    g.theta_true.resize(d);
    for (Eigen::Index j = 0; j < d; ++j) g.theta_true[j] = detail::uniform(rng_theta, 0.2, 0.6);
    auto rng_inst = detail::rng_for(spec.seed, "instance", 0);
    const double lo = std::min(n.revenue_y.size() ? n.revenue_y.minCoeff() : 0.0, n.revenue_z.size() ? n.revenue_z.minCoeff() : 0.0);
    const double hi = std::max(n.revenue_y.size() ? n.revenue_y.maxCoeff() : 0.0, n.revenue_z.size() ? n.revenue_z.maxCoeff() : 0.0);
    Vector ry(n.revenue_y.size()), rz(n.revenue_z.size());
    for (auto& v : ry) v = detail::uniform(rng_inst, 0.5 * lo, 1.5 * hi);
    for (auto& v : rz) v = detail::uniform(rng_inst, 0.5 * lo, 1.5 * hi);
    shared = {{"revenue_y", ry}, {"revenue_z", rz}};
    draw = [n, shared](std::mt19937_64& rng) {
      InputFields u = shared;
      Vector a(n.num_feeds()), dm(n.num_products());
      for (Eigen::Index s = 0; s < a.size(); ++s) a[s] = n.availability[s] * detail::uniform(rng, 0.5, 1.5);
      for (Eigen::Index j = 0; j < dm.size(); ++j) dm[j] = n.demand[j] * detail::uniform(rng, 0.5, 1.5);
      u["availability"] = a;
      u["demand"] = dm;
      return u;
    };
    mask = {"f"};
  } else {
    throw ConfigError("datagen: unsupported family '" + g.family + "'");
  }
  g.theta_true_full = par.expand(g.theta_true);

  auto make_set = [&](int count, std::string_view tag, std::vector<FopSolution>& clean) {
    ObservationSet set;
    set.family = g.family;
    set.mask = mask;
    std::vector<InputFields> inputs(static_cast<std::size_t>(count));
    clean.assign(static_cast<std::size_t>(count), FopSolution{});
    const std::string input_tag = std::string(tag) + "-input";
    parallel_for(static_cast<std::size_t>(count), spec.workers, [&](std::size_t i) {
      auto [u, s] = detail::feasible_draw(fp, g.theta_true_full, spec.seed, input_tag, i, spec.max_redraws, draw);
      inputs[i] = std::move(u);
      clean[i] = std::move(s);
    });
    std::vector<Vector> raw;
    for (const auto& s : clean) raw.push_back(s.gather(mask));
    if (standardize && count > 0) detail::standardization(raw, set.center, set.scale);
    const std::string noise_tag = std::string(tag) + "-noise";
    for (std::size_t i = 0; i < raw.size(); ++i) {
      Vector x = set.to_units(raw[i]);
      if (spec.sigma > 0.0) {
        auto rng = detail::rng_for(spec.seed, noise_tag, i);
        std::normal_distribution<double> noise(0.0, spec.sigma);
        for (auto& v : x) v += noise(rng);
      }
      set.items.push_back({std::move(inputs[i]), std::move(x)});
    }
    return set;
  };
  g.train = make_set(spec.n_train, "train", g.train_clean);
  g.test = make_set(spec.n_test, "test", g.test_clean);
  return g;
}

}  // namespace bo4io
