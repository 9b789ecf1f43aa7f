#include <gtest/gtest.h>

#include <gsmooth/optimizers.hpp>

using namespace gsmooth;

namespace {
HyperParams hp_with(double beta, double beta_sq, double eta = 0.1, double lambda = 1.0) {
  HyperParams hp;
  hp.beta = beta;
  hp.beta_sq = beta_sq;
  hp.eta = eta;
  hp.lambda = lambda;
  return hp;
}
}  // namespace

TEST(AdamRaw, FirstStep) {
  const HyperParams hp = hp_with(0.9, 0.9, 0.1, 1.0);
  const AdamState s = adam_step_raw(AdamState::init(Vector{2.0}), Vector{1.0}, hp);
  EXPECT_NEAR(s.m_hat[0], 1.0, 1e-15);
  EXPECT_NEAR(s.v_hat[0], 1.0, 1e-15);
  EXPECT_NEAR(s.x[0], 2.0 - 0.1 / 2.0, 1e-15);
  EXPECT_EQ(s.t, 2u);
}

TEST(AdamRaw, ZeroGradientNeverMoves) {
  const HyperParams hp = hp_with(0.3, 0.7);
  AdamState s = AdamState::init(Vector{1.0, -2.0});
  AdamState r = s;
  for (int i = 0; i < 50; ++i) {
    s = adam_step_raw(s, Vector(2), hp);
    r = adam_step_rescaled(r, Vector(2), hp);
  }
  EXPECT_EQ(s.x, (Vector{1.0, -2.0}));
  EXPECT_EQ(r.x, (Vector{1.0, -2.0}));
}

TEST(AdamRaw, FullForgetting) {
  const HyperParams hp = hp_with(1.0, 1.0, 0.2, 0.5);
  AdamState s = AdamState::init(Vector{0.0, 0.0});
  s = adam_step_raw(s, Vector{0.3, 0.1}, hp);
  const Vector g{-2.0, 0.5};
  const AdamState n = adam_step_raw(s, g, hp);
  EXPECT_EQ(n.m_hat, g);
  EXPECT_EQ(n.v_hat, square(g));
  for (int i = 0; i < 2; ++i) {
    const double sgn = g[i] > 0 ? 1.0 : -1.0;
    EXPECT_NEAR(n.x[i] - s.x[i], -0.2 * sgn * std::fabs(g[i]) / (std::fabs(g[i]) + 0.5), 1e-15);
  }
}

TEST(AdamRescaled, Alpha) {
  EXPECT_DOUBLE_EQ(alpha_t(0.5, 0.25), 2.0 / 3.0);
  const HyperParams hp = hp_with(0.37, 0.81);
  const AdamState s = adam_step_rescaled(AdamState::init(Vector{1.0}), Vector{-3.0}, hp);
  EXPECT_EQ(s.m_hat[0], -3.0);
  EXPECT_EQ(s.v_hat[0], 9.0);
}

TEST(AdamRescaled, MatchesRawOnQuartic) {
  const ObjectiveSpec q = builtin("quartic", 10);
  RngStream rng(42, 0);
  const NoiseModel noise{NoiseKind::sphere, 0.1};
  for (double b : {0.9, 0.1, 0.01}) {
    HyperParams hp = hp_with(b, b, 1e-3, 1.0);
    AdamState a = AdamState::init(q.x1_default), r = a;
    double worst = 0;
    for (int t = 1; t <= 10000; ++t) {
      const SampleTicket tk = draw(noise, rng, 10, t);
      a = adam_step_raw(a, component_gradient(q, a.x, tk), hp);
      r = adam_step_rescaled(r, component_gradient(q, r.x, tk), hp);
      worst = std::max(worst, norm2(a.x - r.x) / norm2(r.x));
    }
    EXPECT_LE(worst, 1e-9) << b;
  }
}

TEST(AdamRaw, NonFiniteGradientFails) {
  const HyperParams hp = hp_with(0.9, 0.9);
  EXPECT_THROW(adam_step_raw(AdamState::init(Vector{1.0}), Vector{NAN}, hp), NumericalFailure);
  EXPECT_THROW(adam_step_rescaled(AdamState::init(Vector{1.0}), Vector{INFINITY}, hp), NumericalFailure);
}

TEST(HyperParams, Validation) {
  EXPECT_NO_THROW(hp_with(0.9, 0.9).validate());
  EXPECT_THROW(hp_with(0.0, 0.9).validate(), ConfigError);
  EXPECT_THROW(hp_with(1.5, 0.9).validate(), ConfigError);
  EXPECT_THROW(hp_with(0.9, 0.0).validate(Algorithm::adam_rescaled), ConfigError);
  EXPECT_NO_THROW(hp_with(0.9, 0.0).validate(Algorithm::vradam));
  EXPECT_THROW(hp_with(0.9, 0.9, -1.0).validate(), ConfigError);
  EXPECT_THROW(hp_with(0.9, 0.9, 0.1, 0.0).validate(), ConfigError);
  HyperParams hp = hp_with(0.9, 0.9);
  hp.T = 0;
  EXPECT_THROW(hp.validate(), ConfigError);
  EXPECT_EQ(parse_algorithm("vradam"), Algorithm::vradam);
  EXPECT_THROW(parse_algorithm("sgd"), ConfigError);
}

TEST(VRAdamInit, Examples) {
  HyperParams hp = hp_with(0.5, 0.5, 1.0, 1.0);
  const VRAdamState s = vradam_init_from(Vector{0.0}, Vector{3.0}, hp);
  EXPECT_DOUBLE_EQ(s.x[0], -0.75);
  EXPECT_EQ(s.x_prev, Vector{0.0});
  EXPECT_EQ(s.t, 2u);

  hp.beta_sq = 0.0;
  const VRAdamState z = vradam_init_from(Vector{1.0, 1.0}, Vector{2.0, -1.0}, hp);
  EXPECT_EQ(z.v_raw, Vector(2));
  EXPECT_DOUBLE_EQ(z.x[0], 1.0 - 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(z.x[1], 1.0 + 0.5);

  const ObjectiveSpec q = builtin("quartic", 3);
  RngStream rng(1, 1);
  const VRAdamState d = vradam_init(q, q.x1_default, hp, {NoiseKind::zero, 0.0}, rng);
  EXPECT_EQ(d.m, q.gradient(q.x1_default));
}

TEST(VRAdamStep, ZeroNoiseTracksGradient) {
  const ObjectiveSpec q = builtin("quartic", 4);
  HyperParams hp = hp_with(0.3, 0.5, 0.01, 1.0);
  RngStream rng(1, 2);
  const NoiseModel zero{NoiseKind::zero, 0.0};
  VRAdamState s = vradam_init(q, q.x1_default, hp, zero, rng);
  for (int t = 0; t < 200; ++t) {
    s = vradam_step(s, draw(zero, rng, 4, s.t), q, hp);
    EXPECT_LE(norm2(s.m - q.gradient(s.x_prev)), 1e-12);
  }
}

TEST(VRAdamStep, BetaOneIsPlainSample) {
  HyperParams hp = hp_with(1.0, 0.5);
  VRAdamState s = vradam_init_from(Vector{1.0}, Vector{1.0}, hp);
  const VRAdamState n = vradam_step(s, Vector{0.7}, Vector{-4.0}, hp);
  EXPECT_EQ(n.m, Vector{0.7});
}

TEST(VRAdamStep, StationaryIterateDropsCorrection) {
  HyperParams hp = hp_with(0.2, 0.5);
  VRAdamState s = vradam_init_from(Vector{1.0}, Vector{2.0}, hp);
  const Vector g{0.4};
  const VRAdamState n = vradam_step(s, g, g, hp);
  EXPECT_DOUBLE_EQ(n.m[0], 0.8 * 2.0 + 0.2 * 0.4);
}

TEST(VRAdamStep, ZeroBetaSqKeepsVZero) {
  HyperParams hp = hp_with(0.2, 0.0);
  VRAdamState s = vradam_init_from(Vector{1.0}, Vector{2.0}, hp);
  for (int i = 0; i < 5; ++i) s = vradam_step(s, Vector{1.0}, Vector{0.5}, hp);
  EXPECT_EQ(s.v_hat, Vector{0.0});
  EXPECT_TRUE(s.x.finite());
}
