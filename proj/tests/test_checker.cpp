#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "lmspde/checker.hpp"

using namespace lmspde;

namespace {

constexpr double kPi = std::numbers::pi;

Problem problem(const std::string& id, int modes, const std::string& noise = "none", int dim = 1) {
  OperatorParams op;
  op.id = id;
  op.modes = modes;
  op.dim = dim;
  NoiseParams np;
  np.type = noise;
  return make_problem(op, np);
}

AuditOptions quick(int samples = 300) {
  AuditOptions o;
  o.sampler.samples = samples;
  o.sampler.restarts = 8;
  o.sampler.steps = 60;
  return o;
}

}  // namespace

TEST(Gaps, LaplaceMonotonicityOnFirstMode) {
  auto p = problem("heat", 8);
  auto e1 = Field::mode(p.basis, 0), zero = Field::zero(p.basis);
  auto g = local_mono_gap(*p.drift, *p.noise, e1, zero, 0.0, Rho());
  EXPECT_NEAR(g.gap(), -2 * kPi * kPi, 1e-10);
  EXPECT_EQ(local_mono_gap(*p.drift, *p.noise, e1, e1, 0.0, Rho()).gap(), 0.0);
}

TEST(Gaps, CoercivityCancelsAtThetaTwo) {
  auto p = problem("heat", 8);
  auto e1 = Field::mode(p.basis, 0);
  auto g = coercivity_gap(*p.drift, *p.noise, e1, 0.0, 2.0, 0.0, 0.0);
  EXPECT_NEAR(g.gap(), 0.0, 1e-10);
  EXPECT_LE(coercivity_gap(*p.drift, *p.noise, Field::zero(p.basis), 0, 2, 0, 0.7).gap(), -0.7 + 1e-15);
}

TEST(Gaps, GrowthIsRieszIsometryForLaplace) {
  // With β = 0 the factor (1 + ‖v‖^β) equals 2, so the gap is -K‖v‖_V².
  auto p = problem("heat", 8);
  auto e1 = Field::mode(p.basis, 0);
  auto g = growth_gap(*p.drift, e1, 0, 2, 0, 1, 0);
  EXPECT_NEAR(g.lhs, kPi * kPi, 1e-10);
  EXPECT_NEAR(g.gap(), -kPi * kPi, 1e-10);
  EXPECT_NEAR(growth_gap(*p.drift, Field::zero(p.basis), 0, 2, 0, 1, 0.5).gap(), -1.0, 1e-15);
}

TEST(Gaps, NoiseConstraintAdditive) {
  auto p = problem("heat", 8, "additive");
  const double s2 = p.noise->growth().first;
  auto g = noise_constraint_gap(*p.noise, Field::zero(p.basis), 1.0, s2);
  EXPECT_NEAR(g.gap(), 0.0, 1e-14);
  EXPECT_TRUE(g.pass());
}

TEST(Gaps, RhoConstraintLadyzhenskaya) {
  auto p = problem("nse2d", 4);
  Rho rho(0.0, {{RhoTerm::Norm::Lq, 4.0, 4.0, 1.0}});
  SamplerSpec s;
  for (int i = 0; i < 200; ++i) {
    auto v = sample_field(p.basis, s, 9, i, 1e-2, 1e2);
    EXPECT_TRUE(rho_constraint_gap(rho, v, 2, 2, 2, 2.0).pass());
  }
  EXPECT_LE(rho_constraint_gap(rho, Field::zero(p.basis), 2, 2, 2).gap(), 0.0);
}

TEST(Gaps, SymmetryForLinearOperators) {
  auto p = problem("heat", 8, "additive");
  SamplerSpec s;
  auto u = sample_field(p.basis, s, 1, 0, 1, 10), v = sample_field(p.basis, s, 1, 1, 1, 10);
  Rho rho(3.0, {});
  EXPECT_NEAR(local_mono_gap(*p.drift, *p.noise, u, v, 1, rho).gap(),
              local_mono_gap(*p.drift, *p.noise, v, u, 1, rho).gap(), 1e-9);
}

TEST(Hemi, LinearHalvesExactly) {
  auto p = problem("heat", 8);
  SamplerSpec s;
  auto a = sample_field(p.basis, s, 2, 0, 1, 2), b = sample_field(p.basis, s, 2, 1, 1, 2),
       c = sample_field(p.basis, s, 2, 2, 1, 2);
  auto scan = hemicontinuity_scan(*p.drift, a, b, c);
  EXPECT_NEAR(scan.ratio(), 0.5, 1e-9);
}

TEST(Hemi, BurgersIsQuadratic) {
  auto p = problem("burgers", 8);
  SamplerSpec s;
  auto a = sample_field(p.basis, s, 3, 0, 1, 2), b = sample_field(p.basis, s, 3, 1, 1, 2),
       c = sample_field(p.basis, s, 3, 2, 1, 2);
  auto scan = hemicontinuity_scan(*p.drift, a, b, c);
  EXPECT_NEAR(scan.ratio(), 0.5, 0.02);
  auto flat = hemicontinuity_scan(*p.drift, a, Field::zero(p.basis), c);
  EXPECT_EQ(flat.jumps.back(), 0.0);
}

TEST(Sampler, ScaleRangeAndDeterminism) {
  auto p = problem("heat", 8);
  SamplerSpec s;
  for (int i = 0; i < 100; ++i) {
    auto v = sample_field(p.basis, s, 4, i, 1e-2, 1e2);
    EXPECT_GE(h_norm(v), 1e-2 * (1 - 1e-12));
    EXPECT_LE(h_norm(v), 1e2 * (1 + 1e-12));
    EXPECT_TRUE(std::isfinite(energy_norm(v)));
  }
  EXPECT_EQ(sample_field(p.basis, s, 4, 3, 1, 1e3).coeffs()[2], sample_field(p.basis, s, 4, 3, 1, 1e3).coeffs()[2]);
  SamplerSpec narrow;
  narrow.scale_lo = 1;
  narrow.scale_hi = 10;
  EXPECT_THROW(narrow.validate(), std::invalid_argument);
}

TEST(Audit, HeatPassesEverything) {
  auto p = problem("heat", 8, "additive");
  auto reps = audit(p, default_conditions(p), quick());
  for (const auto& r : reps) EXPECT_TRUE(r.passed) << r.condition << " gap " << r.max_gap;
  EXPECT_TRUE(audit(p, {}, quick()).empty());
}

TEST(Audit, WitnessReproducesGap) {
  auto p = problem("burgers", 8, "multiplicative");
  for (auto c : {Condition::H1, Condition::H2, Condition::H3, Condition::H4, Condition::C3, Condition::A2}) {
    auto r = audit_condition(p, c, quick(100));
    auto g = reevaluate(p, c, r.witness);
    EXPECT_NEAR(g.gap(), r.at_max.gap(), 1e-12 * r.at_max.scale()) << r.condition;
  }
}

TEST(Audit, CatalogOperatorsPassLocalConditions) {
  struct Case {
    std::string id;
    int modes;
    int dim;
    std::string noise;
  };
  for (const auto& c : std::vector<Case>{{"semilinear", 8, 1, "multiplicative"},
                                         {"semilinear", 3, 2, "additive"},
                                         {"burgers", 8, 1, "multiplicative"},
                                         {"plaplace", 8, 1, "additive"},
                                         {"nse2d", 2, 2, "additive"}}) {
    auto p = problem(c.id, c.modes, c.noise, c.dim);
    auto reps = audit(p, {Condition::H1, Condition::H2, Condition::H3, Condition::H4, Condition::C3}, quick(200));
    for (const auto& r : reps) EXPECT_TRUE(r.passed) << c.id << " " << r.condition << " gap " << r.max_gap;
  }
}

TEST(Audit, TamedStaticConditions) {
  auto p = problem("tamed-nse3d-static", 1);
  auto reps = audit(p, default_conditions(p), quick(100));
  for (const auto& r : reps) EXPECT_TRUE(r.passed) << r.condition << " gap " << r.max_gap;
}

TEST(Counterexample, HeatIsExhausted) {
  auto p = problem("heat", 8, "additive");
  SamplerSpec s;
  s.scale_lo = 1e-1;
  s.scale_hi = 1e4;
  s.diff_lo = 1e-2;
  s.diff_hi = 1e1;
  s.samples = 500;
  s.restarts = 4;
  s.steps = 50;
  auto r = counterexample_search(p, Condition::A2, 0.0, 2000, s);
  EXPECT_FALSE(r.found);
  EXPECT_LE(r.best_relative, 1e-8);
}

TEST(Counterexample, NavierStokesAndBurgersViolateGlobalMonotonicity) {
  SamplerSpec s;
  s.scale_lo = 1e-1;
  s.scale_hi = 1e4;
  s.diff_lo = 1e-2;
  s.diff_hi = 1e1;
  s.samples = 2000;
  for (auto [id, modes] : std::vector<std::pair<std::string, int>>{{"nse2d", 3}, {"burgers", 16}}) {
    auto p = problem(id, modes);
    auto r = counterexample_search(p, Condition::A2, 1000.0, 100000, s);
    ASSERT_TRUE(r.found) << id;
    auto g = reevaluate(p, Condition::A2, r.witness, 1000.0);
    EXPECT_GT(g.gap(), 1e-4 * g.scale());
    // A witness for K = 1000 is a witness for every smaller K.
    EXPECT_GT(reevaluate(p, Condition::A2, r.witness, 1.0).gap(), g.gap());
  }
}
