#include <gtest/gtest.h>

#include "bo4io/fop/networks.hpp"
#include "bo4io/fop/pooling.hpp"

using namespace bo4io;

namespace {

PoolingNetwork haverly() { return pooling_from_document(bundled_network("haverly1")); }
GenPoolingNetwork tiny() { return genpooling_from_document(bundled_network("tinygen")); }

Vector v2(double a, double b) {
  Vector x(2);
  x << a, b;
  return x;
}

}  // namespace

TEST(Pooling, Haverly1NominalOptimum) {
  const auto net = haverly();
  PoolingOptions opt;
  opt.delta_p = 1e-3;
  const auto s = solve_pooling(net, {}, net.demand_cap, opt);
  ASSERT_EQ(s.status, SolveStatus::GridOptimal);
  EXPECT_NEAR(s.objective, -400.0, 0.5);
  EXPECT_NEAR(s.block("p")[0], 1.0, 1e-3);
  EXPECT_LE(pooling_violation(net, {}, net.demand_cap, s), 1e-6);
}

TEST(Pooling, Haverly1DefaultGridFindsOptimum) {
  const auto net = haverly();
  const auto s = solve_pooling(net, {}, net.demand_cap);
  EXPECT_NEAR(s.objective, -400.0, 0.5);
  EXPECT_GE(s.gap_bound, 0.0);
}

TEST(Pooling, ZeroDemandGivesNullFlows) {
  const auto net = haverly();
  const auto s = solve_pooling(net, {}, Vector::Zero(2));
  ASSERT_TRUE(s.usable());
  EXPECT_LE(s.gather({"f", "y", "z"}).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_NEAR(s.objective, 0.0, 1e-12);
}

TEST(Pooling, RefinementNeverWorsens) {
  const auto net = pooling_from_document(bundled_network("twopool"));
  for (int pts : {5, 9, 17}) {
    PoolingOptions coarse;
    coarse.points_per_dim = pts;
    coarse.refine = false;
    PoolingOptions refined = coarse;
    refined.refine = true;
    const auto a = solve_pooling(net, {}, net.demand_cap, coarse);
    const auto b = solve_pooling(net, {}, net.demand_cap, refined);
    EXPECT_LE(b.objective, a.objective + 1e-12);
    EXPECT_LE(pooling_violation(net, {}, net.demand_cap, b), 1e-6);
  }
}

TEST(Pooling, GapBoundCoversFinerGrid) {
  // The coarse answer must lie within its certified gap of a much finer grid.
  const auto net = haverly();
  InputFields u{{"availability", Vector::Constant(3, 0.8)}};
  PoolingOptions coarse;
  coarse.points_per_dim = 11;
  coarse.refine = false;
  PoolingOptions fine;
  fine.delta_p = 1e-3;
  const Vector theta = v2(0.7, 0.9);
  const auto a = solve_pooling(net, u, theta, coarse);
  const auto b = solve_pooling(net, u, theta, fine);
  EXPECT_LE(a.objective - b.objective, a.gap_bound + 1e-9);
}

TEST(Pooling, InstanceFieldsOverrideNominal) {
  const auto net = haverly();
  InputFields u{{"availability", Vector::Zero(3)}};
  const auto s = solve_pooling(net, u, net.demand_cap);
  EXPECT_NEAR(s.objective, 0.0, 1e-12);
  InputFields bad{{"availability", Vector::Zero(2)}};
  EXPECT_THROW(solve_pooling(net, bad, net.demand_cap), InputError);
}

TEST(Pooling, TooManyQualityDimensionsIsUnsupported) {
  auto net = haverly();
  net.qualities = {"a", "b", "c", "d"};
  net.feed_quality = Matrix::Ones(3, 4);
  net.quality_limit = Matrix::Constant(2, 4, 5.0);
  EXPECT_THROW(solve_pooling(net, {}, net.demand_cap), UnsupportedInstance);
}

TEST(Pooling, DocumentRoundTrip) {
  for (const char* name : {"haverly1", "twopool"}) {
    const auto net = pooling_from_document(bundled_network(name));
    const auto text = to_document(net).serialize();
    EXPECT_EQ(to_document(pooling_from_document(TextDocument::parse_string(text, kFopMagic))).serialize(), text);
  }
  const auto g = tiny();
  const auto text = to_document(g).serialize();
  const auto g2 = genpooling_from_document(TextDocument::parse_string(text, kFopMagic));
  EXPECT_EQ(to_document(g2).serialize(), text);
  EXPECT_EQ(g2.install_pool, g.install_pool);
}

TEST(GenPooling, TinyNetworkSolves) {
  const auto net = tiny();
  const Vector theta = detail::flatten_rows(net.quality_limit);
  const auto s = solve_genpooling(net, {}, theta);
  ASSERT_TRUE(s.usable());
  // Demand equalities hold.
  const Vector y = s.block("y"), z = s.block("z");
  EXPECT_NEAR(y[0], 1.0, 1e-9);
  EXPECT_NEAR(y[1] + z[0] + z[1], 1.0, 1e-9);
  EXPECT_EQ(s.block("gamma_pool")[0], 1.0);
}

TEST(GenPooling, EnumerationDominatesEveryPattern) {
  const auto net = tiny();
  const Vector theta = detail::flatten_rows(net.quality_limit);
  const auto best = solve_genpooling(net, {}, theta);
  // Brute force: force each pattern by making the other units prohibitively expensive.
  for (int mask = 0; mask < 8; ++mask) {
    auto forced = net;
    for (int s = 0; s < 2; ++s)
      if (!((mask >> s) & 1)) forced.availability[s] = 0.0;
    if (!((mask >> 2) & 1)) forced.pool_capacity[0] = 0.0;
    const auto r = solve_genpooling(forced, {}, theta);
    if (!r.usable()) continue;
    // Pattern cost with the forced units installed (install costs of the mask).
    double fixed = 0.0;
    for (int s = 0; s < 2; ++s) fixed += ((mask >> s) & 1) * net.install_feed[s];
    fixed += ((mask >> 2) & 1) * net.install_pool[0];
    const double flow_cost = r.objective - r.block("gamma_init").dot(net.install_feed) -
                             r.block("gamma_pool").dot(net.install_pool);
    EXPECT_LE(best.objective, flow_cost + fixed + 1e-9) << "mask " << mask;
  }
}

TEST(GenPooling, FreeInstallReducesToStandardPooling) {
  auto net = tiny();
  net.install_feed.setZero();
  net.install_pool.setZero();
  net.arc_cost_f.setZero();
  net.pool_capacity.setConstant(std::numeric_limits<double>::infinity());
  const Vector theta = detail::flatten_rows(net.quality_limit);
  const auto g = solve_genpooling(net, {}, theta);
  // Same network as standard pooling with demand equalities written as a tight cap and a
  // large penalty-free revenue shift: compare against the flow LP over the identical grid.
  detail::PoolingData d = detail::resolve(net, {});
  d.cap = net.demand;
  d.equality_demand = true;
  d.limit = net.quality_limit;
  const auto grid = detail::grid_search(net, d, PoolingOptions{});
  ASSERT_TRUE(grid.feasible);
  EXPECT_NEAR(g.objective, grid.value, 1e-9);
}

TEST(GenPooling, DemandAboveTotalAvailabilityIsInfeasible) {
  const auto net = tiny();
  const Vector theta = detail::flatten_rows(net.quality_limit);
  InputFields u{{"demand", v2(2.5, 2.0)}};  // 4.5 > 2 + 2
  EXPECT_EQ(solve_genpooling(net, u, theta).status, SolveStatus::Infeasible);
}

TEST(GenPooling, EnumerationLimit) {
  auto net = tiny();
  for (int i = 0; i < 9; ++i) {
    net.feeds.push_back("X" + std::to_string(i));
  }
  const auto S = static_cast<Eigen::Index>(net.feeds.size());
  net.feed_quality.conservativeResize(S, 2);
  net.feed_cost.conservativeResize(S);
  net.availability.conservativeResize(S);
  net.install_feed.conservativeResize(S);
  for (Eigen::Index s = 2; s < S; ++s) {
    net.feed_quality.row(s) << 0.5, 0.5;
    net.feed_cost[s] = 1;
    net.availability[s] = 1;
    net.install_feed[s] = 0;
  }
  EXPECT_THROW(solve_genpooling(net, {}, detail::flatten_rows(net.quality_limit)), UnsupportedInstance);
}
