#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "lmspde/operators.hpp"

using namespace lmspde;

namespace {

constexpr double kPi = std::numbers::pi;

BasisPtr make(Domain d, int cutoff) {
  BasisSpec s;
  s.domain = d;
  s.cutoff = cutoff;
  return Basis::make(s);
}

Field random_field(const BasisPtr& b, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> nd;
  std::vector<double> c(b->size());
  for (std::size_t i = 0; i < c.size(); ++i) c[i] = scale * nd(rng) * std::sqrt(b->eigenvalue(0) / b->eigenvalue(i));
  return Field(b, c);
}

}  // namespace

TEST(Drift, LaplaceIsDiagonal) {
  auto b = make(Domain::Interval, 8);
  auto e1 = Field::mode(b, 0);
  auto a = laplace_drift(e1);
  EXPECT_NEAR(a[0], -kPi * kPi, 1e-12);
  EXPECT_NEAR(pairing(a, e1), -std::pow(v_norm(e1), 2), 1e-10);
}

TEST(Drift, BurgersTermIsSkew) {
  auto b = make(Domain::Interval, 16);
  std::mt19937_64 rng(1);
  for (int s = 0; s < 20; ++s) {
    auto u = random_field(b, rng, 3.0);
    EXPECT_NEAR(pairing(burgers_nonlinearity(u), u), 0.0, 1e-10 * std::pow(h_norm(u), 3) * kPi * 16);
  }
}

TEST(Drift, BurgersOfFirstModeIsOnSecondMode) {
  // √2 sin(πx) · √2 π cos(πx) = π sin(2πx) = (π/√2) e_2
  auto b = make(Domain::Interval, 8);
  auto a = burgers_nonlinearity(Field::mode(b, 0));
  for (std::size_t i = 0; i < b->size(); ++i) EXPECT_NEAR(a[i], i == 1 ? kPi / std::sqrt(2.0) : 0.0, 1e-12);
}

TEST(Drift, PLaplacePairingIsMinusPNorm) {
  auto b = make(Domain::Interval, 8);
  std::mt19937_64 rng(2);
  auto u = random_field(b, rng);
  EXPECT_NEAR(pairing(p_laplace_drift(u, 4.0), u), -std::pow(v_norm(u, 4.0), 4), 1e-9);
  EXPECT_NEAR(pairing(p_laplace_drift(u, 2.0), u), -std::pow(v_norm(u), 2), 1e-9);
}

TEST(Drift, NSETrilinearIdentities) {
  for (auto d : {Domain::Torus2, Domain::Torus3}) {
    auto b = make(d, d == Domain::Torus2 ? 4 : 2);
    std::mt19937_64 rng(3);
    for (int s = 0; s < 20; ++s) {
      auto u = random_field(b, rng), v = random_field(b, rng), w = random_field(b, rng);
      const double scale = h_norm(u) * energy_norm(v) * h_norm(w) * 10;
      EXPECT_NEAR(pairing(nse_nonlinearity(v), v), 0.0, 1e-12 * scale);
      EXPECT_NEAR(pairing(nse_bilinear(u, v), w), -pairing(nse_bilinear(u, w), v), 1e-12 * scale);
    }
  }
}

TEST(Drift, NSEDualEstimates) {
  auto b = make(Domain::Torus2, 4);
  std::mt19937_64 rng(4);
  for (int s = 0; s < 100; ++s) {
    auto w = random_field(b, rng, 1 + s), v = random_field(b, rng);
    const double lhs = std::abs(pairing(nse_nonlinearity(w), v));
    EXPECT_LE(lhs, 2.0 * std::pow(lp_norm(w, 4.0), 2) * energy_norm(v) * (1 + 1e-8));
    EXPECT_LE(lhs, 2.0 * std::pow(energy_norm(w), 1.5) * std::sqrt(h_norm(w)) * lp_norm(v, 4.0) * (1 + 1e-8));
  }
}

TEST(Drift, SemilinearDimensionMismatchThrows) {
  auto b = make(Domain::Square, 4);
  std::vector<ScalarFunction> f{{[](double x) { return x; }, 1, 1, 0, "id"}};
  EXPECT_THROW(semilinear_drift(Field::zero(b), f, nullptr), DimensionError);
}

TEST(Taming, ShapeAndSlope) {
  const double nu = 0.5, N = 2.0;
  EXPECT_EQ(taming_function(1.0, N, nu), 0.0);
  EXPECT_NEAR(taming_function(N + 1.0, N, nu), 1.0 / nu, 1e-15);
  EXPECT_NEAR(taming_function(N + 3.0, N, nu), 3.0 / nu, 1e-15);
  EXPECT_NEAR(taming_derivative(N + 1.0, N, nu), 1.0 / nu, 1e-15);
  EXPECT_EQ(taming_derivative(N, N, nu), 0.0);
  double sup = 0.0;
  for (int i = 0; i <= 3000; ++i) {
    const double r = N + i / 1000.0;
    sup = std::max(sup, taming_derivative(r, N, nu));
    // derivative agrees with a central difference
    if (i > 0 && i < 3000 && i != 1000) {
      const double h = 1e-6;
      EXPECT_NEAR((taming_function(r + h, N, nu) - taming_function(r - h, N, nu)) / (2 * h), taming_derivative(r, N, nu), 1e-6);
    }
  }
  EXPECT_NEAR(sup, taming_slope_bound(nu), 1e-6);
  auto b = make(Domain::Torus3, 2);
  EXPECT_THROW(taming_term(Field::zero(b), 0.0, nu), std::invalid_argument);
}

TEST(Noise, SigmaValidation) {
  EXPECT_THROW(validate_sigma({1.0, 2.0}), std::invalid_argument);
  EXPECT_THROW(validate_sigma({-1.0}), std::invalid_argument);
  EXPECT_THROW(validate_sigma({NAN}), std::invalid_argument);
  EXPECT_NO_THROW(validate_sigma({1.0, 1.0, 0.5}));
}

TEST(Noise, MatrixAgreesWithApply) {
  auto b = make(Domain::Interval, 8);
  NoiseParams np;
  np.type = "multiplicative";
  np.modes = 5;
  auto B = make_noise(b, np);
  std::mt19937_64 rng(5);
  auto u = random_field(b, rng);
  std::vector<double> dW{0.3, -0.1, 0.7, 0.2, -0.4};
  auto direct = B->apply(0.0, u, dW);
  auto M = B->matrix(0.0, u);
  for (std::size_t i = 0; i < b->size(); ++i) {
    double s = 0.0;
    for (int j = 0; j < 5; ++j) s += M[i * 5 + j] * dW[j];
    EXPECT_NEAR(direct[i], s, 1e-12);
  }
}

TEST(Noise, LipschitzAndGrowthBoundsHold) {
  auto b = make(Domain::Interval, 8);
  NoiseParams np;
  np.type = "multiplicative";
  np.b = "identity";
  auto B = make_noise(b, np);
  const auto [a0, a1] = B->growth();
  std::mt19937_64 rng(6);
  for (int s = 0; s < 50; ++s) {
    auto u = random_field(b, rng, 1 + s), v = random_field(b, rng);
    EXPECT_LE(B->hs_distance_sq(0, u, v), B->lipschitz_sq() * std::pow(h_norm(u - v), 2) * (1 + 1e-10));
    EXPECT_LE(B->hs_norm_sq(0, u), (a0 + a1 * std::pow(h_norm(u), 2)) * (1 + 1e-10));
  }
}

TEST(Noise, AdditiveDiagonal) {
  auto b = make(Domain::Interval, 4);
  AdditiveNoise B(b, {1.0, 0.5});
  std::vector<double> dW{0.5, 0.2};
  auto out = B.apply(0, Field::zero(b), dW);
  EXPECT_DOUBLE_EQ(out[0], 0.5);
  EXPECT_DOUBLE_EQ(out[1], 0.1);
  EXPECT_DOUBLE_EQ(B.growth().first, 1.25);
}

TEST(Catalog, AllOperatorsBuildAndVanishAtZero) {
  for (const auto& id : catalog_ids()) {
    OperatorParams op;
    op.id = id;
    op.modes = id == "tamed-nse3d-static" ? 2 : 6;
    op.forcing = 0.0;
    auto prob = make_problem(op, {});
    auto a = prob.drift->evaluate(0.0, Field::zero(prob.basis));
    for (double x : a.pairings()) EXPECT_EQ(x, 0.0) << id;
    EXPECT_NO_THROW(validate(prob.drift->spec(), 1.0)) << id;
  }
  OperatorParams bad;
  bad.id = "nope";
  EXPECT_THROW(make_problem(bad, {}), std::invalid_argument);
}

TEST(Catalog, LinearSplitReproducesDrift) {
  std::mt19937_64 rng(8);
  for (const auto& id : {"heat", "semilinear", "burgers", "nse2d"}) {
    OperatorParams op;
    op.id = id;
    op.modes = 6;
    auto prob = make_problem(op, {});
    auto u = random_field(prob.basis, rng, 2.0);
    auto full = prob.drift->evaluate(0.3, u);
    auto rem = prob.drift->remainder(0.3, u);
    auto rates = prob.drift->linear_rates();
    for (std::size_t i = 0; i < u.size(); ++i) EXPECT_NEAR(full[i], rem[i] - rates[i] * u[i], 1e-9 * (1 + std::abs(full[i]))) << id;
  }
}

TEST(Catalog, BurgersConstant) { EXPECT_NEAR(burgers_monotonicity_constant(), 27.0 / (4.0 * kPi), 1e-15); }
