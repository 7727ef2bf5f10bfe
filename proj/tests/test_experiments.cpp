#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "lmspde/experiments.hpp"

using namespace lmspde;

namespace {

constexpr double kPi = std::numbers::pi;

Problem make(const std::string& id, int modes, const std::string& noise) {
  OperatorParams op;
  op.id = id;
  op.modes = modes;
  NoiseParams np;
  np.type = noise;
  return make_problem(op, np);
}

ExperimentConfig base(double T, double dt, int paths) {
  ExperimentConfig c;
  c.solver.T = T;
  c.solver.dt = dt;
  c.solver.seed = 11;
  c.paths = paths;
  c.p = 2.0;
  return c;
}

}  // namespace

TEST(Aggregation, CompensatedSumKeepsSmallTerms) {
  CompensatedSum s;
  for (double x : {1e16, 1.0, -1e16}) s.add(x);
  EXPECT_EQ(s.value(), 1.0);
}

TEST(Aggregation, MeanAndStandardError) {
  auto r = mean_se({1.0, 2.0, 3.0, 4.0});
  EXPECT_DOUBLE_EQ(r.mean, 2.5);
  EXPECT_NEAR(r.se, std::sqrt(5.0 / 3.0 / 4.0), 1e-15);
  EXPECT_EQ(r.count, 4);
}

TEST(Config, MomentExponentAndPaths) {
  auto p = make("heat", 4, "additive");
  auto c = base(0.1, 1e-2, 4);
  c.p = 1.5;
  EXPECT_THROW(mc_moments(c, p), std::invalid_argument);
  c.p = 2.0;
  c.paths = 1;
  EXPECT_THROW(mc_moments(c, p), std::invalid_argument);
}

TEST(Moments, DeterministicHeatMode) {
  auto p = make("heat", 4, "none");
  auto c = base(0.5, 1e-3, 3);
  c.p = 4.0;
  c.solver.x0.kind = InitialCondition::Kind::Mode;
  auto r = mc_moments(c, p);
  EXPECT_NEAR(r.sup_h_p.mean, 1.0, 1e-15);
  EXPECT_EQ(r.sup_h_p.se, 0.0);
  // Left Riemann sum of λ e^{-2λt} over the exact exponential path.
  const double lam = kPi * kPi, dt = 1e-3;
  const double riemann = lam * dt * -std::expm1(-2 * lam * 0.5) / -std::expm1(-2 * lam * dt);
  EXPECT_NEAR(r.int_v_alpha.mean, riemann, 1e-12);
  EXPECT_NEAR(r.int_v_alpha.mean, -std::expm1(-2 * lam * 0.5) / 2, 0.01);
  EXPECT_EQ(r.explosion_fraction, 0.0);
  EXPECT_TRUE(r.valid);
  EXPECT_GT(r.bound_rhs, 1.0);
}

TEST(Moments, OrnsteinUhlenbeckSecondMoment) {
  auto p = make("heat", 8, "additive");
  auto c = base(1.0, 1e-3, 1024);
  auto r = mc_moments(c, p);
  const auto& sigma = dynamic_cast<const AdditiveNoise&>(*p.noise).sigma();
  const double exact = ou_second_moment(sigma, p.drift->linear_rates(), 1.0);
  EXPECT_NEAR(r.final_h2.mean, exact, 3 * r.final_h2.se);
}

TEST(Moments, StandardErrorFollowsCentralLimit) {
  auto p = make("heat", 4, "additive");
  std::vector<double> se;
  for (int P : {64, 256, 1024}) se.push_back(mc_moments(base(0.2, 1e-2, P), p).final_h2.se);
  EXPECT_NEAR(se[0] / se[1], 2.0, 0.6);
  EXPECT_NEAR(se[1] / se[2], 2.0, 0.4);
}

TEST(Moments, LadderIsStableForBurgers) {
  ExperimentConfig c = base(0.2, 1e-3, 64);
  c.p = 4.0;
  c.ladder = {8, 16};
  c.solver.x0.kind = InitialCondition::Kind::Mode;
  OperatorParams op;
  op.id = "burgers";
  NoiseParams np;
  np.type = "multiplicative";
  auto r = mc_moments_ladder(c, op, np);
  ASSERT_EQ(r.rungs.size(), 2u);
  EXPECT_TRUE(r.stable);
  for (const auto& m : r.rungs) EXPECT_TRUE(std::isfinite(m.sup_h_p.mean));
}

TEST(Convergence, HeatDifferenceIsInitialTail) {
  ExperimentConfig c = base(0.1, 1e-3, 2);
  c.ladder = {4, 8, 16};
  c.solver.x0.kind = InitialCondition::Kind::Coefficients;
  for (int k = 1; k <= 16; ++k) c.solver.x0.coeffs.push_back(std::pow(k, -0.6));
  OperatorParams op;
  NoiseParams np;
  np.type = "none";
  auto t = galerkin_convergence(c, op, np);
  ASSERT_EQ(t.rows.size(), 2u);
  auto tail = [&](int lo, int hi) {
    double s = 0;
    for (int k = lo + 1; k <= hi; ++k) s += std::pow(k, -1.2);
    return std::sqrt(s);
  };
  EXPECT_NEAR(t.rows[0].sup_diff.mean, tail(4, 8), 1e-12);
  EXPECT_NEAR(t.rows[1].sup_diff.mean, tail(8, 16), 1e-12);
  EXPECT_TRUE(t.decreasing);
}

TEST(Residual, HeatWithoutNoiseIsExactUnderExponentialScheme) {
  auto p = make("heat", 8, "none");
  auto c = base(0.2, 1e-3, 3);
  c.solver.x0.kind = InitialCondition::Kind::Random;
  auto r = energy_identity_residual(c, p);
  EXPECT_LT(r.abs_at_T.mean, 1e-13);
  EXPECT_EQ(r.times.size(), r.residual.size());
  EXPECT_DOUBLE_EQ(r.times.back(), 0.2);
}

TEST(Residual, EulerBiasIsSquaredDrift) {
  // Without noise the Euler residual per step is dt²‖A(X_k)‖² exactly.
  auto p = make("heat", 2, "none");
  auto c = base(0.01, 1e-3, 2);
  c.solver.scheme = Scheme::EulerMaruyama;
  c.solver.x0.kind = InitialCondition::Kind::Mode;
  auto r = energy_identity_residual(c, p);
  double x = 1.0, expect = 0.0;
  const double lam = kPi * kPi, dt = 1e-3;
  for (int k = 0; k < 10; ++k) {
    expect += dt * dt * lam * lam * x * x;
    x *= 1 - lam * dt;
  }
  EXPECT_NEAR(r.at_T.mean, expect, 1e-14);
}

TEST(Uniqueness, HeatDifferenceOnlyDecays) {
  auto p = make("heat", 6, "additive");
  auto c = base(0.2, 1e-3, 8);
  InitialCondition x0, y0;
  x0.kind = InitialCondition::Kind::Mode;
  auto r = uniqueness_decay(c, p, x0, y0);
  EXPECT_EQ(r.argmax, 0u);
  EXPECT_EQ(r.max_excess, 0.0);
  EXPECT_NEAR(r.D.front().mean, 1.0, 1e-15);
  const double K = p.drift->spec().K;
  const double t = r.times.back();
  EXPECT_NEAR(r.D.back().mean, std::exp(-K * t - 2 * kPi * kPi * t), 1e-12);
}
