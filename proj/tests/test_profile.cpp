#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "bo4io/profile.hpp"

using namespace bo4io;

namespace {

EvaluationDataset grid_data(int per_axis, int d, const std::function<double(const Vector&)>& f) {
  EvaluationDataset data;
  const int total = static_cast<int>(std::pow(per_axis, d));
  for (int i = 0; i < total; ++i) {
    Vector x(d);
    int r = i;
    for (int j = 0; j < d; ++j) {
      x[j] = (r % per_axis) / static_cast<double>(per_axis - 1);
      r /= per_axis;
    }
    data.push_back(x, f(x));
  }
  return data;
}

KernelConfig kernel(int d, double ls, double sv = 1.0, double noise = 1e-8) {
  KernelConfig k;
  k.lengthscales = Vector::Constant(d, ls);
  k.signal_variance = sv;
  k.noise_variance = noise;
  return k;
}

GPModel random_model(int d, std::uint64_t seed, int n) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  EvaluationDataset data;
  const Vector c = Vector::NullaryExpr(d, [&](Eigen::Index) { return u(rng); });
  for (int i = 0; i < n; ++i) {
    Vector x = Vector::NullaryExpr(d, [&](Eigen::Index) { return u(rng); });
    data.push_back(x, 20.0 * (x - c).squaredNorm() + 0.3 * u(rng));
  }
  return fit(data, ParameterDomain::unit_box(d), seed);
}

std::pair<Vector, double> incumbent_of(const GPModel& m) {
  const auto& t = m.data().targets;
  const auto i = static_cast<std::size_t>(std::min_element(t.begin(), t.end()) - t.begin());
  return {m.data().inputs[i], t[i]};
}

bool covered(const Interval& iv, const std::vector<Interval>& outer, double tol = 1e-12) {
  return std::any_of(outer.begin(), outer.end(), [&](const Interval& o) { return iv.lo >= o.lo - tol && iv.hi <= o.hi + tol; });
}

}  // namespace

TEST(Chi2, QuantileValues) {
  EXPECT_NEAR(chi2_quantile(0.05, 1), 3.84, 0.005);
  EXPECT_NEAR(chi2_quantile(0.05, 2), -2.0 * std::log(0.05), 1e-9);  // closed form for df = 2
  EXPECT_NEAR(chi2_quantile(0.05, 2), 5.991, 0.005);
  EXPECT_EQ(chi2_quantile(1.0, 1), 0.0);
  EXPECT_LT(chi2_quantile(1.0 - 1e-9, 3), 1e-4);
  // df = 3 against the closed-form CDF: P = erf(sqrt(x/2)) - sqrt(2x/pi) exp(-x/2).
  const double q = chi2_quantile(0.1, 3);
  EXPECT_NEAR(std::erf(std::sqrt(q / 2)) - std::sqrt(2 * q / M_PI) * std::exp(-q / 2), 0.9, 1e-10);
  EXPECT_THROW(chi2_quantile(0.0, 1), InputError);
  EXPECT_THROW(chi2_quantile(0.5, 0), InputError);
}

TEST(Profile, OneDimensionalBoundIsPointBound) {
  const auto m = random_model(1, 1, 8);
  ProfileConfig cfg;
  for (double t : {0.0, 0.13, 0.5, 0.91}) {
    const auto p = m.posterior(Vector::Constant(1, t));
    EXPECT_DOUBLE_EQ(pl_bound(m, ParameterDomain::unit_box(1), cfg, t, Side::Lower),
                     p.mean - std::sqrt(3.84) * p.stddev());
    EXPECT_DOUBLE_EQ(pl_bound(m, ParameterDomain::unit_box(1), cfg, t, Side::Upper),
                     p.mean + std::sqrt(3.84) * p.stddev());
  }
}

TEST(Profile, SliceMatchesDenseGrid) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto m = random_model(2, seed + 10, 14);
    const auto dom = ParameterDomain::unit_box(2);
    ProfileConfig cfg;
    cfg.k = static_cast<int>(seed % 2);
    for (double t : {0.1, 0.45, 0.8}) {
      double grid_min = 1e300;
      for (int i = 0; i <= 4000; ++i) {
        Vector x(2);
        x[cfg.k] = t;
        x[1 - cfg.k] = i / 4000.0;
        grid_min = std::min(grid_min, lcb(m, x, 3.84));
      }
      const double lo = pl_bound(m, dom, cfg, t, Side::Lower);
      EXPECT_NEAR(lo, grid_min, 1e-3) << "seed " << seed << " t " << t;
      EXPECT_LE(lo, pl_bound(m, dom, cfg, t, Side::Upper));
    }
  }
}

TEST(Profile, SimplexSliceRespectsBudget) {
  const auto m = random_model(2, 3, 12);
  const auto dom = ParameterDomain::unit_simplex(2);
  ProfileConfig cfg;
  double grid_min = 1e300;
  for (int i = 0; i <= 3000; ++i) {
    Vector x(2);
    x << 0.7, 0.3 * i / 3000.0;
    grid_min = std::min(grid_min, lcb(m, x, 3.84));
  }
  EXPECT_NEAR(pl_bound(m, dom, cfg, 0.7, Side::Lower), grid_min, 1e-3);
}

TEST(Profile, QuadraticAnalyticInterval) {
  // l = 40 (θ1 - 0.45)^2 + 15 (θ2 - 0.55)^2; PL(θ1) = 40 (θ1 - 0.45)^2 -> CI 0.45 ± sqrt(Δ/40).
  auto f = [](const Vector& x) { return 40.0 * std::pow(x[0] - 0.45, 2) + 15.0 * std::pow(x[1] - 0.55, 2); };
  auto data = grid_data(12, 2, f);
  Vector c(2);
  c << 0.45, 0.55;
  data.push_back(c, 0.0);
  const auto dom = ParameterDomain::unit_box(2);
  const auto m = fit(data, dom, 1);
  ProfileConfig cfg;
  cfg.delta = 0.01;
  const auto r = profile_parameter(m, dom, cfg, 0.0, c);
  const double half = std::sqrt(r.delta_alpha / 40.0);
  ASSERT_EQ(r.oa_ci.size(), 1u);
  EXPECT_NEAR(r.oa_ci[0].lo, 0.45 - half, 2 * cfg.delta);
  EXPECT_NEAR(r.oa_ci[0].hi, 0.45 + half, 2 * cfg.delta);
  ASSERT_EQ(r.ia_ci.size(), 1u);
  EXPECT_NEAR(r.ia_ci[0].lo, r.oa_ci[0].lo, 3 * cfg.delta);
  EXPECT_NEAR(r.ia_ci[0].hi, r.oa_ci[0].hi, 3 * cfg.delta);
  EXPECT_EQ(r.classification, Identifiability::Structural);
}

TEST(Profile, NestingIncumbentAndMonotoneRho) {
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    const int d = 1 + static_cast<int>(seed % 2);
    const auto m = random_model(d, 100 + seed, 6 + 3 * d);
    const auto dom = ParameterDomain::unit_box(d);
    const auto [inc, lstar] = incumbent_of(m);
    ProfileConfig cfg;
    cfg.delta = 0.02;
    cfg.k = d - 1;
    const auto r = profile_parameter(m, dom, cfg, lstar, inc);
    for (const auto& iv : r.ia_ci) EXPECT_TRUE(covered(iv, r.oa_ci)) << "seed " << seed;
    EXPECT_TRUE(std::any_of(r.oa_ci.begin(), r.oa_ci.end(), [&](const Interval& iv) { return iv.contains(inc[cfg.k]); }));
    ProfileConfig wide = cfg;
    wide.rho = 9.0;
    const auto r2 = oa_ci(m, dom, wide, lstar, inc);
    for (const auto& iv : r.oa_ci) EXPECT_TRUE(covered(iv, r2.oa_ci, cfg.delta / 100.0)) << "seed " << seed;
    for (std::size_t i = 0; i + 1 < r.oa_ci.size(); ++i) EXPECT_LT(r.oa_ci[i].hi, r.oa_ci[i + 1].lo);
  }
}

TEST(Profile, PriorDominatedCoversRange) {
  EvaluationDataset data;
  data.push_back(Vector::Constant(1, 0.5), 0.0);
  data.push_back(Vector::Constant(1, 0.52), 0.1);
  const auto m = GPModel(kernel(1, 0.01), data, Normalization::from_targets(data.targets));
  ProfileConfig cfg;
  const auto r = profile_parameter(m, ParameterDomain::unit_box(1), cfg, 0.0, Vector::Constant(1, 0.5));
  ASSERT_EQ(r.oa_ci.size(), 1u);
  EXPECT_EQ(r.oa_ci[0].lo, 0.0);
  EXPECT_EQ(r.oa_ci[0].hi, 1.0);
}

TEST(Profile, GridRefinementStable) {
  const auto m = random_model(1, 42, 10);
  const auto [inc, lstar] = incumbent_of(m);
  ProfileConfig a;
  a.delta = 0.02;
  ProfileConfig b = a;
  b.delta = 0.01;
  const auto ra = oa_ci(m, ParameterDomain::unit_box(1), a, lstar, inc);
  const auto rb = oa_ci(m, ParameterDomain::unit_box(1), b, lstar, inc);
  ASSERT_EQ(ra.oa_ci.size(), rb.oa_ci.size());
  for (std::size_t i = 0; i < ra.oa_ci.size(); ++i) {
    EXPECT_NEAR(ra.oa_ci[i].lo, rb.oa_ci[i].lo, a.delta);
    EXPECT_NEAR(ra.oa_ci[i].hi, rb.oa_ci[i].hi, a.delta);
  }
}

TEST(Classify, ConstructedPosteriors) {
  const auto dom = ParameterDomain::unit_box(1);
  auto model_of = [&](const std::function<double(double)>& f, double ls = 0.15) {
    EvaluationDataset data;
    for (int i = 0; i <= 40; ++i) data.push_back(Vector::Constant(1, i / 40.0), f(i / 40.0));
    return GPModel(kernel(1, ls, 1.0), data, Normalization::from_targets(data.targets));
  };
  ProfileConfig cfg;
  const auto bowl = model_of([](double t) { return 200.0 * (t - 0.5) * (t - 0.5); });
  const auto plateau = model_of([](double t) { return t < 0.3 ? 300.0 * (0.3 - t) * (0.3 - t) : 0.02 * std::sin(8 * t) + 0.02; });
  // Constant data under a long lengthscale: posterior mean and spread are constant.
  const auto flat = model_of([](double) { return 1.0; }, 2.0);
  auto classify = [&](const GPModel& m) {
    const auto [inc, lstar] = incumbent_of(m);
    return oa_ci(m, dom, cfg, lstar, inc).classification;
  };
  EXPECT_EQ(classify(bowl), Identifiability::Structural);
  EXPECT_EQ(classify(plateau), Identifiability::Practical);
  EXPECT_EQ(classify(flat), Identifiability::NonIdentifiable);
  EXPECT_EQ(to_string(Identifiability::Practical), "practically-non-identifiable");
}

TEST(Profile, DocumentHasSummary) {
  const auto m = random_model(1, 5, 8);
  const auto [inc, lstar] = incumbent_of(m);
  const auto r = profile_parameter(m, ParameterDomain::unit_box(1), ProfileConfig{}, lstar, inc);
  const auto doc = TextDocument::parse_string(to_document(r).serialize(), kProfileMagic);
  EXPECT_EQ(doc.all("point").size(), r.grid.size());
  EXPECT_EQ(doc.all("oa").size(), r.oa_ci.size());
  EXPECT_EQ(doc.string("classification"), to_string(r.classification));
}

TEST(Profile, RejectsBadConfig) {
  const auto m = random_model(1, 5, 8);
  ProfileConfig cfg;
  cfg.delta = 0.0;
  EXPECT_THROW(oa_ci(m, ParameterDomain::unit_box(1), cfg, 0.0, Vector::Zero(1)), ConfigError);
  cfg = ProfileConfig{};
  cfg.k = 1;
  EXPECT_THROW(oa_ci(m, ParameterDomain::unit_box(1), cfg, 0.0, Vector::Zero(1)), ConfigError);
}
