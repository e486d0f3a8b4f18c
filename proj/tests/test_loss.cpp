#include <gtest/gtest.h>

#include <cmath>

#include "bo4io/datagen.hpp"
#include "bo4io/loss.hpp"

using namespace bo4io;

namespace {

/// x(u, θ) = u.a * θ0 + u.b, infeasible when θ0 < 0.
class LinearForward final : public ForwardProblem {
 public:
  std::string family() const override { return "linear"; }
  Eigen::Index parameter_size() const override { return 1; }
  FopSolution solve(const InputFields& u, const Vector& theta) const override {
    FopSolution s;
    s.layout = layout();
    if (theta[0] < 0.0) {
      s.status = SolveStatus::Infeasible;
      return s;
    }
    s.status = SolveStatus::Optimal;
    s.x = u.at("a") * theta[0] + u.at("b");
    return s;
  }
  std::vector<VariableBlock> layout() const override { return {{"x", 0, 2}}; }
  TextDocument document() const override { return TextDocument{"none"}; }
  Vector nominal_parameters() const override { return Vector::Ones(1); }
};

Vector v2(double a, double b) {
  Vector x(2);
  x << a, b;
  return x;
}

LossConfig linear_cfg(int workers = 1) {
  LossConfig cfg;
  cfg.fop = std::make_shared<LinearForward>();
  cfg.par.kind = Parameterization::Kind::Subset;
  cfg.par.d = 1;
  cfg.par.nominal = Vector::Ones(1);
  cfg.par.free = {0};
  cfg.workers = workers;
  return cfg;
}

/// Observations generated at θ = 0.7 with deterministic pseudo-noise.
ObservationSet linear_obs(int n) {
  ObservationSet obs;
  obs.family = "linear";
  obs.mask = {"x"};
  for (int i = 0; i < n; ++i) {
    const double a = 1.0 + 0.1 * i, b = std::sin(i);
    Vector x = v2(a, -a) * 0.7 + v2(b, 2 * b) + v2(0.01 * std::cos(3.0 * i), -0.02 * std::sin(5.0 * i));
    obs.items.push_back({{{"a", v2(a, -a)}, {"b", v2(b, 2 * b)}}, x});
  }
  return obs;
}

Vector th(double t) { return Vector::Constant(1, t); }

}  // namespace

TEST(Loss, ZeroResidual) {
  auto obs = linear_obs(1);
  obs.items[0].x = v2(1.0, -1.0) * 0.5 + v2(0.0, 0.0);
  obs.items[0].input = {{"a", v2(1.0, -1.0)}, {"b", v2(0.0, 0.0)}};
  EXPECT_EQ(evaluate_loss(th(0.5), obs, linear_cfg()).value, 0.0);
  EXPECT_EQ(decision_error(th(0.5), obs, linear_cfg()).value, 0.0);
}

TEST(Loss, UnitResidualPair) {
  ObservationSet obs;
  obs.family = "linear";
  obs.mask = {"x"};
  obs.items.push_back({{{"a", v2(0, 0)}, {"b", v2(0, 0)}}, v2(1.0, -1.0)});
  const auto r = evaluate_loss(th(0.3), obs, linear_cfg());
  EXPECT_DOUBLE_EQ(r.value, 2.0);
  EXPECT_FALSE(r.penalized);
}

TEST(Loss, LinearInWeight) {
  const auto obs = linear_obs(7);
  auto cfg = linear_cfg();
  const double base = evaluate_loss(th(0.4), obs, cfg).value;
  cfg.weight = Matrix::Identity(2, 2) * 3.5;
  EXPECT_NEAR(evaluate_loss(th(0.4), obs, cfg).value, 3.5 * base, 1e-12 * base);
  cfg.weight = LossConfig::inverse_noise_weight(2, 0.5);
  EXPECT_NEAR(evaluate_loss(th(0.4), obs, cfg).value, 4.0 * base, 1e-12 * base);
}

TEST(Loss, AdditiveOverPartitions) {
  const auto obs = linear_obs(9);
  const auto cfg = linear_cfg();
  const double all = evaluate_loss(th(0.55), obs, cfg).value;
  const double a = evaluate_loss(th(0.55), obs.subset(0, 4), cfg).value;
  const double b = evaluate_loss(th(0.55), obs.subset(4, 9), cfg).value;
  EXPECT_NEAR(all, a + b, 1e-13 * all);
}

TEST(Loss, SerialAndParallelBitIdentical) {
  const auto obs = linear_obs(33);
  const double s = evaluate_loss(th(0.61), obs, linear_cfg(1)).value;
  const double p = evaluate_loss(th(0.61), obs, linear_cfg(4)).value;
  EXPECT_EQ(s, p);
}

TEST(Loss, InfeasiblePenaltyFlag) {
  const auto obs = linear_obs(5);
  const auto r = evaluate_loss(th(-0.1), obs, linear_cfg());
  EXPECT_TRUE(r.penalized);
  EXPECT_EQ(r.infeasible, 5u);
  EXPECT_EQ(r.value, 1e6 * 5);
}

TEST(Loss, RejectsBadWeight) {
  const auto obs = linear_obs(2);
  auto cfg = linear_cfg();
  cfg.weight = Matrix::Identity(3, 3);
  EXPECT_THROW(evaluate_loss(th(0.5), obs, cfg), ConfigError);
  cfg.weight = Matrix::Identity(2, 2);
  cfg.weight(0, 0) = -1.0;
  EXPECT_THROW(evaluate_loss(th(0.5), obs, cfg), ConfigError);
}

TEST(Loss, ConstantPredictorOnStandardizedData) {
  // Columns with mean 0 and population variance 1; predictor fixed at 0.
  ObservationSet obs;
  obs.family = "linear";
  obs.mask = {"x"};
  for (double s : {1.0, -1.0, 1.0, -1.0})
    obs.items.push_back({{{"a", v2(0, 0)}, {"b", v2(0, 0)}}, v2(s, -s)});
  EXPECT_NEAR(decision_error(th(0.2), obs, linear_cfg()).value, 1.0, 1e-15);
}

TEST(Loss, ParameterError) {
  EXPECT_NEAR(parameter_error(v2(0.5, 0.5), v2(0.6, 0.4)), std::sqrt(0.02), 1e-15);
  EXPECT_EQ(parameter_error(v2(0.1, 0.9), v2(0.1, 0.9)), 0.0);
  EXPECT_DOUBLE_EQ(parameter_error(v2(0.5, 0.2), v2(0.1, 0.3)), parameter_error(v2(0.2, 0.5), v2(0.3, 0.1)));
  EXPECT_THROW(parameter_error(v2(0, 0), Vector::Zero(3)), InputError);
}

TEST(Loss, ObservationDocumentRoundTrip) {
  auto obs = linear_obs(3);
  obs.center = v2(0.25, -1.0 / 3.0);
  obs.scale = v2(2.0, 0.1);
  const auto back = observations_from_document(TextDocument::parse_string(to_document(obs).serialize(), kObsMagic));
  ASSERT_EQ(back.size(), 3u);
  EXPECT_EQ(back.mask, obs.mask);
  EXPECT_EQ(back.center, obs.center);
  EXPECT_EQ(back.scale, obs.scale);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(back.items[i].x, obs.items[i].x);
    EXPECT_EQ(back.items[i].input.at("a"), obs.items[i].input.at("a"));
  }
  EXPECT_THROW(observations_from_document(TextDocument::parse_string("bo4io-obs v1\nfamily x\nmask x\n", kObsMagic)),
               InputError);
}

TEST(Loss, ToyFbaNoiseFreeSelfConsistency) {
  GenSpec spec;
  spec.d = 2;
  spec.n_train = 10;
  spec.n_test = 0;
  spec.sigma = 0.0;
  spec.seed = 11;
  const auto fp = make_forward(bundled_network("toy10"), 3);
  auto [par, dom] = default_parameterization(*fp, 2);
  const auto g = generate(spec, *fp, par);
  LossConfig cfg;
  cfg.fop = fp;
  cfg.par = par;
  EXPECT_LE(evaluate_loss(g.theta_true, g.train, cfg).value, 1e-10);
}
