#include <gtest/gtest.h>

#include "bo4io/datagen.hpp"
#include "bo4io/fop/fba.hpp"
#include "bo4io/fop/pooling.hpp"

using namespace bo4io;

namespace {

struct Case {
  std::shared_ptr<const ForwardProblem> fp;
  Parameterization par;
  ParameterDomain dom;
};

Case make_case(const std::string& net, int d) {
  const auto doc = bundled_network(net);
  Case c;
  c.fp = make_forward(doc, doc.string("family") == "fba" ? d + 1 : 0);
  std::tie(c.par, c.dom) = default_parameterization(*c.fp, d);
  return c;
}

GenSpec spec_for(const std::string& net, int d, double sigma, std::uint64_t seed, int n_train = 12, int n_test = 6) {
  GenSpec s;
  s.network = net;
  s.d = d;
  s.sigma = sigma;
  s.seed = seed;
  s.n_train = n_train;
  s.n_test = n_test;
  return s;
}

LossConfig cfg_for(const Case& c) {
  LossConfig cfg;
  cfg.fop = c.fp;
  cfg.par = c.par;
  return cfg;
}

}  // namespace

TEST(Datagen, FbaWeightsOnSimplex) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto c = make_case("toy10", 2);
    const auto g = generate(spec_for("toy10", 2, 0.01, seed, 3, 0), *c.fp, c.par);
    EXPECT_NEAR(g.theta_true_full.sum(), 1.0, 1e-15);
    EXPECT_TRUE((g.theta_true_full.array() >= 0).all());
    EXPECT_TRUE(c.dom.contains(g.theta_true, 1e-15));
  }
}

TEST(Datagen, FbaStandardizedColumns) {
  const auto c = make_case("toy10", 2);
  const auto g = generate(spec_for("toy10", 2, 0.0, 3, 30, 0), *c.fp, c.par);
  ASSERT_TRUE(g.train.standardized());
  const auto n = g.train.items.front().x.size();
  for (Eigen::Index k = 0; k < n; ++k) {
    double m = 0.0, v = 0.0;
    for (const auto& o : g.train.items) m += o.x[k];
    m /= 30.0;
    for (const auto& o : g.train.items) v += (o.x[k] - m) * (o.x[k] - m);
    v /= 30.0;
    EXPECT_NEAR(m, 0.0, 1e-8);
    if (g.train.scale[k] != 1.0 || v > 1e-12) EXPECT_NEAR(v, 1.0, 1e-8) << "column " << k;
  }
  EXPECT_EQ(g.train.mask, std::vector<std::string>{"v"});
}

TEST(Datagen, FbaBoundsOrdered) {
  const auto c = make_case("toy10", 2);
  const auto g = generate(spec_for("toy10", 2, 0.01, 5, 20, 0), *c.fp, c.par);
  const auto p = fba_from_document(c.fp->document());
  for (const auto& o : g.train.items) {
    const Vector& L = o.input.at("L");
    const Vector& U = o.input.at("U");
    EXPECT_TRUE((L.array() <= U.array()).all());
    for (auto k : p.randomized) {
      EXPECT_GE(L[k], 10.0);
      EXPECT_LE(U[k], 100.0);
    }
  }
}

TEST(Datagen, NoiseFreeSelfConsistencyAllFamilies) {
  for (const auto& [net, d] : std::vector<std::pair<std::string, int>>{{"toy10", 2}, {"haverly1", 2}, {"tinygen", 2}}) {
    const auto c = make_case(net, d);
    const auto g = generate(spec_for(net, d, 0.0, 21, 8, 4), *c.fp, c.par);
    const auto cfg = cfg_for(c);
    EXPECT_LE(evaluate_loss(g.theta_true, g.train, cfg).value, 1e-10) << net;
    EXPECT_LE(evaluate_loss(g.theta_true, g.test, cfg).value, 1e-10) << net;
  }
}

TEST(Datagen, PoolingRangesAndMask) {
  const auto c = make_case("haverly1", 2);
  const auto g = generate(spec_for("haverly1", 2, 0.05, 8, 20, 0), *c.fp, c.par);
  EXPECT_TRUE((g.theta_true.array() >= 0.5).all() && (g.theta_true.array() <= 1.0).all());
  EXPECT_EQ(g.train.mask, (std::vector<std::string>{"f", "y"}));
  EXPECT_FALSE(g.train.standardized());
  const auto net = pooling_from_document(c.fp->document());
  for (std::size_t i = 0; i < g.train.size(); ++i) {
    const auto& a = g.train.items[i].input.at("availability");
    EXPECT_TRUE((a.array() >= 0.5).all() && (a.array() <= 1.0).all());
    EXPECT_LE(pooling_violation(net, g.train.items[i].input, g.theta_true_full, g.train_clean[i]), 1e-6);
  }
}

TEST(Datagen, GenPoolingSharesAndMask) {
  const auto c = make_case("tinygen", 2);
  const auto g = generate(spec_for("tinygen", 2, 0.05, 4, 10, 0), *c.fp, c.par);
  EXPECT_EQ(g.train.mask, std::vector<std::string>{"f"});
  const auto K = c.fp->parameter_block();
  for (Eigen::Index j = 0; j < 2; ++j) {
    EXPECT_NEAR(g.theta_true_full.segment(j * K, K).sum(), 1.0, 1e-15);
    EXPECT_GE(g.theta_true[j], 0.2);
    EXPECT_LE(g.theta_true[j], 0.6);
  }
  for (const auto& s : g.train_clean) EXPECT_TRUE(s.usable());
}

TEST(Datagen, DeterministicPerSeed) {
  const auto c = make_case("toy10", 2);
  const auto a = generate(spec_for("toy10", 2, 0.01, 9), *c.fp, c.par);
  const auto b = generate(spec_for("toy10", 2, 0.01, 9), *c.fp, c.par);
  const auto d = generate(spec_for("toy10", 2, 0.01, 10), *c.fp, c.par);
  EXPECT_EQ(to_document(a.train).serialize(), to_document(b.train).serialize());
  EXPECT_EQ(to_document(a.test).serialize(), to_document(b.test).serialize());
  EXPECT_NE(to_document(a.train).serialize(), to_document(d.train).serialize());
}

TEST(Datagen, WorkersDoNotChangeData) {
  const auto c = make_case("haverly1", 2);
  auto s = spec_for("haverly1", 2, 0.05, 2);
  const auto a = generate(s, *c.fp, c.par);
  s.workers = 4;
  const auto b = generate(s, *c.fp, c.par);
  EXPECT_EQ(to_document(a.train).serialize(), to_document(b.train).serialize());
}

TEST(Datagen, TestSetIndependentOfTrainSize) {
  const auto c = make_case("haverly1", 2);
  const auto a = generate(spec_for("haverly1", 2, 0.05, 6, 5, 7), *c.fp, c.par);
  const auto b = generate(spec_for("haverly1", 2, 0.05, 6, 17, 7), *c.fp, c.par);
  EXPECT_EQ(to_document(a.test).serialize(), to_document(b.test).serialize());
  EXPECT_EQ(a.theta_true, b.theta_true);
}

TEST(Datagen, RejectsBadSpec) {
  const auto c = make_case("toy10", 2);
  EXPECT_THROW(generate(spec_for("toy10", 2, -0.1, 0), *c.fp, c.par), ConfigError);
  EXPECT_THROW(generate(spec_for("toy10", 2, 0.1, 0, 0), *c.fp, c.par), ConfigError);
}
