#include <gtest/gtest.h>

#include <random>

#include "bo4io/acquisition.hpp"

using namespace bo4io;

namespace {

Vector v2(double a, double b) {
  Vector x(2);
  x << a, b;
  return x;
}

GPModel quadratic_model(int t, std::uint64_t seed) {
  EvaluationDataset data;
  LowDiscrepancySequence seq(1, seed);
  for (int i = 0; i < t; ++i) {
    const Vector x = seq.point(static_cast<std::uint64_t>(i));
    data.push_back(x, (x[0] - 0.3) * (x[0] - 0.3));
  }
  return fit(data, ParameterDomain::unit_box(1), seed);
}

}  // namespace

TEST(Lcb, DirectArithmetic) {
  KernelConfig k;
  k.lengthscales = Vector::Constant(1, 0.2);
  k.signal_variance = 0.25;
  const auto prior = GPModel::prior(k, Normalization{1.0, 1.0});
  EXPECT_NEAR(lcb(prior, Vector::Constant(1, 0.3), 4.0), 0.0, 1e-15);
  EXPECT_NEAR(lcb(prior, Vector::Constant(1, 0.3), 1e-12), 1.0, 1e-6);
  EXPECT_THROW(lcb(prior, Vector::Constant(1, 0.3), 0.0), InputError);
}

TEST(Lcb, NoiseFloorTrainingPointGivesObservedLoss) {
  const auto m = quadratic_model(10, 3);
  const auto& x = m.data().inputs[4];
  EXPECT_NEAR(lcb(m, x, 4.0), m.data().targets[4], 1e-3);
}

TEST(Project, SimplexBoundary) {
  const auto dom = ParameterDomain::unit_simplex(2);
  const Vector p = project(dom, v2(0.6, 0.6));
  EXPECT_NEAR(p[0], 0.5, 1e-12);
  EXPECT_NEAR(p[1], 0.5, 1e-12);
  EXPECT_LE(p.sum(), 1.0);
}

TEST(Project, InteriorPointUnchanged) {
  const auto dom = ParameterDomain::unit_simplex(3);
  Vector x(3);
  x << 0.2, 0.1, 0.3;
  EXPECT_EQ(project(dom, x), x);
  EXPECT_EQ(project(ParameterDomain::unit_box(3), x), x);
}

TEST(Project, BoxClamping) {
  const Vector p = project(ParameterDomain::unit_box(2), v2(-0.3, 0.4));
  EXPECT_EQ(p, v2(0.0, 0.4));
}

TEST(Project, EmptyFeasibleSetIsConfigError) {
  ParameterDomain dom(v2(0.6, 0.6), v2(0.9, 0.9), true);
  EXPECT_THROW(project(dom, v2(0.7, 0.7)), ConfigError);
  EXPECT_THROW(project(ParameterDomain::unit_box(2), Vector::Zero(3)), InputError);
}

TEST(Project, FeasibleIdempotentAndNearest) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-0.5, 1.5);
  ParameterDomain dom(v2(0.1, 0.0), v2(0.8, 0.7), true);
  for (int trial = 0; trial < 200; ++trial) {
    const Vector x = v2(u(rng), u(rng));
    const Vector p = project(dom, x);
    ASSERT_TRUE(dom.contains(p)) << p.transpose();
    EXPECT_LT((project(dom, p) - p).norm(), 1e-12);
    // Brute-force oracle: no feasible grid point is strictly closer.
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i <= 200; ++i)
      for (int j = 0; j <= 200; ++j) {
        const Vector y = v2(0.1 + 0.7 * i / 200.0, 0.7 * j / 200.0);
        if (dom.contains(y)) best = std::min(best, (y - x).norm());
      }
    EXPECT_LE((p - x).norm(), best + 1e-12);
  }
}

TEST(MinimizeAcquisition, QuadraticLossMinimizer) {
  const auto m = quadratic_model(30, 7);
  AcquisitionConfig cfg;
  cfg.seed = 5;
  const auto r = minimize_acquisition(m, ParameterDomain::unit_box(1), cfg);
  EXPECT_NEAR(r.point[0], 0.3, 0.05);
  // Dense-grid oracle on the same LCB surface.
  double grid_min = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= 100000; ++i) grid_min = std::min(grid_min, lcb(m, Vector::Constant(1, i / 100000.0), cfg.beta));
  EXPECT_LE(r.value, grid_min + 1e-9);
  EXPECT_NEAR(r.value, lcb(m, r.point, cfg.beta), 1e-15);
}

TEST(MinimizeAcquisition, PriorOnlyReturnsFirstScatterCandidate) {
  KernelConfig k;
  k.lengthscales = Vector::Constant(2, 0.2);
  const auto prior = GPModel::prior(k);
  AcquisitionConfig cfg;
  cfg.seed = 9;
  const auto r = minimize_acquisition(prior, ParameterDomain::unit_box(2), cfg);
  ASSERT_FALSE(r.ranked_scatter.empty());
  EXPECT_EQ(r.ranked_scatter.front().index, 0U);
  EXPECT_EQ(r.point, r.ranked_scatter.front().point);
}

TEST(MinimizeAcquisition, SimplexFeasibleAndNoWorseThanScatter) {
  EvaluationDataset data;
  const auto dom = ParameterDomain::unit_simplex(2);
  LowDiscrepancySequence seq(2, 4);
  for (int i = 0; i < 12; ++i) {
    const Vector x = dom.from_unit(seq.point(static_cast<std::uint64_t>(i)));
    data.push_back(x, (x - v2(0.7, 0.4)).squaredNorm());
  }
  const auto m = fit(data, dom, 1);
  AcquisitionConfig cfg;
  const auto r = minimize_acquisition(m, dom, cfg);
  EXPECT_TRUE(dom.contains(r.point));
  EXPECT_GE(r.point.minCoeff(), 0.0);
  EXPECT_LE(r.point.sum(), 1.0);
  for (const auto& c : r.ranked_scatter) EXPECT_LE(r.value, c.value);
  const auto again = minimize_acquisition(m, dom, cfg);
  EXPECT_EQ(again.point, r.point);
  EXPECT_EQ(again.value, r.value);
}

TEST(Domain, SimplexScatterIsFeasible) {
  const auto dom = ParameterDomain::unit_simplex(3);
  LowDiscrepancySequence seq(3, 0);
  for (std::uint64_t i = 0; i < 500; ++i) EXPECT_TRUE(dom.contains(dom.from_unit(seq.point(i))));
}
