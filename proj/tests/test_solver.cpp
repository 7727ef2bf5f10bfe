#include <cmath>
#include <numbers>
#include <sstream>

#include <gtest/gtest.h>

#include "lmspde/solver.hpp"

using namespace lmspde;

namespace {

constexpr double kPi = std::numbers::pi;

Problem heat(int modes, const std::string& noise = "none") {
  OperatorParams op;
  op.modes = modes;
  NoiseParams np;
  np.type = noise;
  return make_problem(op, np);
}

bool same(const Trajectory& a, const Trajectory& b) {
  return a.times == b.times && a.h_norm == b.h_norm && a.v_norm == b.v_norm && a.l4_norm == b.l4_norm &&
         a.int_k_rho == b.int_k_rho && a.final_state->coeffs().size() == b.final_state->coeffs().size() &&
         std::equal(a.final_state->coeffs().begin(), a.final_state->coeffs().end(), b.final_state->coeffs().begin());
}

}  // namespace

TEST(Step, ZeroDriftZeroNoiseIsIdentity) {
  auto p = heat(4);
  ZeroNoise B(p.basis, 2);
  PLaplaceDrift A(p.basis, 2.0);
  Field u(p.basis, {1, 2, 3, 4});
  std::vector<double> dW{0.3, 0.1};
  auto out = em_step(Field::zero(p.basis), 0, 0.1, A, B, dW);
  for (double x : out.coeffs()) EXPECT_EQ(x, 0.0);
}

TEST(Step, EulerHeatDiagonal) {
  auto p = heat(4);
  std::vector<double> dW(p.noise->modes(), 0.0);
  auto out = em_step(Field::mode(p.basis, 0), 0, 0.01, *p.drift, *p.noise, dW);
  EXPECT_NEAR(out[0], 1 - 0.01 * kPi * kPi, 1e-14);
  EXPECT_NEAR(out[0], 0.9013, 1e-4);
}

TEST(Step, PureNoiseStep) {
  auto p = heat(4);
  AdditiveNoise B(p.basis, {1, 1, 1, 1});
  PLaplaceDrift zero_drift(p.basis, 2.0);
  std::vector<double> dW{0.5, 0, 0, 0};
  auto out = em_step(Field::zero(p.basis), 0, 0.01, zero_drift, B, dW);
  EXPECT_DOUBLE_EQ(out[0], 0.5);
}

TEST(Step, ExponentialEulerIsExactHeatDecay) {
  auto p = heat(4);
  std::vector<double> dW(p.noise->modes(), 0.0);
  for (double dt : {1e-3, 0.1, 0.7}) {
    auto out = exp_euler_step(Field::mode(p.basis, 0), 0, dt, *p.drift, *p.noise, dW);
    EXPECT_NEAR(out[0], std::exp(-kPi * kPi * dt), 1e-15);
  }
}

TEST(Step, ExponentialEulerWithoutLinearPartIsEuler) {
  auto p = heat(6);
  PLaplaceDrift A(p.basis, 4.0);
  AdditiveNoise B(p.basis, {1, 0.5});
  Field u(p.basis, {0.3, -0.2, 0.1, 0.05, 0, 0.01});
  std::vector<double> dW{0.1, -0.2};
  auto a = em_step(u, 0, 1e-3, A, B, dW), b = exp_euler_step(u, 0, 1e-3, A, B, dW);
  for (std::size_t i = 0; i < u.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-12);
}

TEST(Stream, DeterministicAndTruncationConsistent) {
  NoiseIncrementStream s(42, 3, 1e-3);
  std::vector<double> a(5), b(3);
  s.increments(17, 1e-3, a);
  s.increments(17, 1e-3, b);
  for (int j = 0; j < 3; ++j) EXPECT_EQ(a[j], b[j]);
  NoiseIncrementStream other(42, 4, 1e-3);
  std::vector<double> c(5);
  other.increments(17, 1e-3, c);
  EXPECT_NE(a[0], c[0]);
}

TEST(Stream, CoarseIncrementIsSumOfFine) {
  NoiseIncrementStream s(1, 0, 1e-3);
  std::vector<double> f0(2), f1(2), coarse(2);
  s.increments(6, 1e-3, f0);
  s.increments(7, 1e-3, f1);
  s.increments(3, 2e-3, coarse);
  for (int j = 0; j < 2; ++j) EXPECT_NEAR(coarse[j], f0[j] + f1[j], 1e-15);
  EXPECT_THROW(s.increments(0, 1.5e-3, coarse), std::invalid_argument);
}

TEST(Stream, MomentsOfIncrements) {
  NoiseIncrementStream s(9, 0, 0.25);
  double m1 = 0, m2 = 0;
  const int n = 200000;
  std::vector<double> dW(1);
  for (int k = 0; k < n; ++k) {
    s.increments(k, 0.25, dW);
    m1 += dW[0];
    m2 += dW[0] * dW[0];
  }
  EXPECT_NEAR(m1 / n, 0.0, 4 * 0.5 / std::sqrt(n));
  EXPECT_NEAR(m2 / n, 0.25, 4 * 0.25 * std::sqrt(2.0 / n));
}

TEST(Path, ZeroStaysZero) {
  for (const auto& id : {"heat", "semilinear", "burgers", "plaplace", "nse2d"}) {
    OperatorParams op;
    op.id = id;
    op.modes = 4;
    op.forcing = 0;
    NoiseParams np;
    np.type = "multiplicative";
    auto p = make_problem(op, np);
    SolverConfig cfg;
    cfg.T = 0.05;
    cfg.dt = 1e-3;
    auto tr = simulate_path(cfg, *p.drift, *p.noise, NoiseIncrementStream(1, 0, cfg.dt));
    EXPECT_FALSE(tr.exploded) << id;
    EXPECT_EQ(tr.sup_h, 0.0) << id;
    EXPECT_EQ(tr.times.size(), 51u);
  }
}

TEST(Path, HeatDecayExact) {
  auto p = heat(8);
  SolverConfig cfg;
  cfg.T = 0.2;
  cfg.dt = 0.01;
  cfg.x0.kind = InitialCondition::Kind::Mode;
  auto tr = simulate_path(cfg, *p.drift, *p.noise, NoiseIncrementStream(0, 0, cfg.dt));
  EXPECT_NEAR(tr.h_norm.back(), std::exp(-kPi * kPi * 0.2), 1e-14);
  EXPECT_DOUBLE_EQ(tr.times.back(), 0.2);
}

TEST(Path, EulerConvergesToExactAtFirstOrder) {
  auto p = heat(3);
  SolverConfig cfg;
  cfg.T = 0.2;
  cfg.x0.kind = InitialCondition::Kind::Coefficients;
  cfg.x0.coeffs = {1.0, 0.5, 0.25};
  cfg.scheme = Scheme::EulerMaruyama;
  std::vector<double> err;
  for (double dt : {4e-4, 2e-4, 1e-4}) {
    cfg.dt = dt;
    auto em = simulate_path(cfg, *p.drift, *p.noise, NoiseIncrementStream(0, 0, dt));
    cfg.scheme = Scheme::ExpEuler;
    auto ex = simulate_path(cfg, *p.drift, *p.noise, NoiseIncrementStream(0, 0, dt));
    cfg.scheme = Scheme::EulerMaruyama;
    err.push_back(h_norm(*em.final_state - *ex.final_state));
  }
  EXPECT_GE(std::log2(err[0] / err[1]), 0.9);
  EXPECT_GE(std::log2(err[1] / err[2]), 0.9);
}

TEST(Path, DeterministicReplay) {
  OperatorParams op;
  op.id = "burgers";
  op.modes = 8;
  auto p = make_problem(op, {});
  SolverConfig cfg;
  cfg.T = 0.1;
  cfg.dt = 1e-3;
  cfg.x0.kind = InitialCondition::Kind::Random;
  cfg.seed = 77;
  auto a = simulate_path(cfg, *p.drift, *p.noise, NoiseIncrementStream(77, 2, cfg.dt));
  auto b = simulate_path(cfg, *p.drift, *p.noise, NoiseIncrementStream(77, 2, cfg.dt));
  EXPECT_TRUE(same(a, b));
  std::ostringstream sa, sb;
  write_trajectory_csv(sa, a);
  write_trajectory_csv(sb, b);
  EXPECT_EQ(sa.str(), sb.str());
}

TEST(Path, TruncationConsistencyWithZeroAmplitudes) {
  OperatorParams op;
  op.id = "burgers";
  op.modes = 8;
  NoiseParams small, padded;
  small.sigma = {1.0, 0.5};
  padded.sigma = {1.0, 0.5, 0, 0, 0};
  auto p1 = make_problem(op, small);
  auto padded_noise = make_noise(p1.basis, padded);
  SolverConfig cfg;
  cfg.T = 0.05;
  cfg.dt = 1e-3;
  cfg.x0.kind = InitialCondition::Kind::Mode;
  auto a = simulate_path(cfg, *p1.drift, *p1.noise, NoiseIncrementStream(5, 0, cfg.dt), cfg.x0.realize(p1.basis, 5, 0));
  auto b = simulate_path(cfg, *p1.drift, *padded_noise, NoiseIncrementStream(5, 0, cfg.dt), cfg.x0.realize(p1.basis, 5, 0));
  EXPECT_TRUE(same(a, b));
}

TEST(Couple, LinearDifferenceIsDeterministic) {
  auto p = heat(6, "additive");
  SolverConfig cfg;
  cfg.T = 0.1;
  cfg.dt = 1e-3;
  Field x0 = Field::mode(p.basis, 0), y0 = Field::zero(p.basis);
  auto [x, y] = couple_paths(cfg, *p.drift, *p.noise, NoiseIncrementStream(3, 0, cfg.dt), x0, y0);
  auto diff = *x.final_state - *y.final_state;
  EXPECT_NEAR(diff[0], std::exp(-kPi * kPi * 0.1), 1e-12);
  for (std::size_t i = 1; i < diff.size(); ++i) EXPECT_NEAR(diff[i], 0.0, 1e-12);
  auto [a, b] = couple_paths(cfg, *p.drift, *p.noise, NoiseIncrementStream(3, 0, cfg.dt), x0, x0);
  EXPECT_TRUE(same(a, b));
}

TEST(Path, ExplosionIsFlaggedNotThrown) {
  OperatorParams op;
  op.id = "plaplace";
  op.modes = 8;
  auto p = make_problem(op, {});
  SolverConfig cfg;
  cfg.T = 1.0;
  cfg.dt = 0.1;
  cfg.x0.kind = InitialCondition::Kind::Mode;
  cfg.x0.mode = 7;
  cfg.x0.amplitude = 100.0;
  auto tr = simulate_path(cfg, *p.drift, *p.noise, NoiseIncrementStream(0, 0, cfg.dt));
  EXPECT_TRUE(tr.exploded);
  EXPECT_LT(tr.times.back(), 1.0);
}

TEST(Config, Validation) {
  auto p = heat(4);
  SolverConfig cfg;
  cfg.dt = 0;
  EXPECT_THROW(validate(cfg, *p.drift), std::invalid_argument);
  cfg.dt = 2.0;
  EXPECT_THROW(validate(cfg, *p.drift), std::invalid_argument);
  cfg.dt = 0.3;
  EXPECT_THROW(validate(cfg, *p.drift), std::invalid_argument);
  cfg.dt = 0.1;
  cfg.scheme = Scheme::EulerMaruyama;
  EXPECT_THROW(validate(cfg, *p.drift), std::invalid_argument);
}

TEST(Embed, NestedBasesCompareByWaveIndex) {
  auto a = heat(4), b = heat(8);
  Field x(a.basis, {1, 2, 3, 4});
  Field y(b.basis, {1, 2, 3, 4, 0, 0, 0, 1});
  EXPECT_NEAR(embedded_distance(x, y), 1.0, 1e-15);
}
