#pragma once

// Numerical audits of the structural conditions on (A, B).
//
// Every evaluator returns a Gap {lhs, rhs}; the inequality lhs ≤ rhs passes when
// lhs - rhs ≤ tol · max(1, |lhs|, |rhs|). Sampling cannot prove a universally
// quantified inequality, so a passing report means "no violation found within
// the sample and ascent budget"; a failing one is conclusive.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "lmspde/operators.hpp"

namespace lmspde {

enum class Condition { H1, H2, H3, H4, C3, A2, A4 };

std::string to_string(Condition c);
Condition condition_from_string(const std::string& s);

constexpr double kGapTolerance = 1e-8;

struct Gap {
  double lhs = 0.0;
  double rhs = 0.0;

  double gap() const { return lhs - rhs; }
  double scale() const;
  double relative() const { return gap() / scale(); }
  bool pass(double tol = kGapTolerance) const { return gap() <= tol * scale(); }
};

// 2<A(u)-A(v), u-v> + ‖B(u)-B(v)‖₂² + margin·‖u-v‖_V² ≤ (K + ρ(v))‖u-v‖_H²
// margin = 0 is the plain local monotonicity condition.
Gap local_mono_gap(const DriftOperator& A, const NoiseOperator& B, const Field& u, const Field& v, double K,
                   const Rho& rho, double t = 0.0, double v_margin = 0.0);
// ρ ≡ 0
Gap classical_mono_gap(const DriftOperator& A, const NoiseOperator& B, const Field& u, const Field& v, double K,
                       double t = 0.0);
// 2<A(t,v),v> + ‖B(t,v)‖₂² + θ‖v‖_V^α ≤ f_t + K‖v‖_H²
Gap coercivity_gap(const DriftOperator& A, const NoiseOperator& B, const Field& v, double t, double theta, double K,
                   double f, double alpha = 2.0, double v_exponent = 2.0);
// ‖A(t,v)‖_{V*}^{α/(α-1)} ≤ (f_t + K‖v‖_V^α)(1 + ‖v‖_H^β). For α ≠ 2 the dual norm is a lower bound.
Gap growth_gap(const DriftOperator& A, const Field& v, double t, double alpha, double beta, double K, double f,
               double v_exponent = 2.0);
// ‖A(t,v)‖_{V*} ≤ f_t^{(α-1)/α} + K‖v‖_V^{α-1}
Gap classical_growth_gap(const DriftOperator& A, const Field& v, double t, double alpha, double K, double f,
                         double v_exponent = 2.0);
// ‖B(t,v)‖₂² ≤ C(f_t + ‖v‖_H²)
Gap noise_constraint_gap(const NoiseOperator& B, const Field& v, double f, double C, double t = 0.0);
// ρ(v) ≤ C(1 + ‖v‖_V^α)(1 + ‖v‖_H^β)
Gap rho_constraint_gap(const Rho& rho, const Field& v, double alpha, double beta, double C, double v_exponent = 2.0);

struct HemiScan {
  std::vector<int> points;    // grid sizes on [-1, 1]
  std::vector<double> jumps;  // max |φ(s_{i+1}) - φ(s_i)| per grid
  // jumps[last]/jumps[last-1]; 0 when φ is numerically constant.
  double ratio() const;
};

// φ(s) = <A(t, v1 + s v2), v> on uniform grids of 2^k + 1 points, k = levels.
HemiScan hemicontinuity_scan(const DriftOperator& A, const Field& v1, const Field& v2, const Field& v, double t = 0.0,
                             std::vector<int> levels = {6, 7, 8});
// Continuity evidence: the jump estimate must shrink at least by this factor per halving.
constexpr double kHemiRatio = 0.6;

// Random fields with Gaussian coefficients of amplitude (λ_i/λ_1)^{-decay/2},
// rescaled to an H-norm drawn log-uniformly from [scale_lo, scale_hi].
struct SamplerSpec {
  double decay = 1.0;
  double scale_lo = 1e-2;
  double scale_hi = 1e2;
  // Separate range for the difference w = u - v in pair samples.
  double diff_lo = 1e-3;
  double diff_hi = 1e1;
  int samples = 1000;
  std::uint64_t seed = 1;
  // Ascent: restarts × steps coordinate-perturbation moves.
  int restarts = 64;
  int steps = 200;

  void validate() const;
};

Field sample_field(const BasisPtr& basis, const SamplerSpec& spec, std::uint64_t stream, std::uint64_t index,
                   double lo, double hi);

struct Witness {
  std::vector<double> u;  // first argument (unused for single-field conditions)
  std::vector<double> v;
  std::vector<double> w;  // H1 only: the test direction
  double t = 0.0;
};

struct Constants {
  double alpha = 2.0, beta = 0.0, theta = 1.0, K = 0.0, C = 0.0, f = 0.0;
  std::string rho;
};

struct ConditionReport {
  std::string condition;  // H1..A4 or a named variant
  bool expected_pass = true;
  bool passed = true;
  long samples = 0;
  long evaluations = 0;
  double max_gap = 0.0;  // largest relative gap (gap / scale)
  Gap at_max;
  Witness witness;
  Constants constants;
  std::string note;
};

// Named inequality variants with a margin, an F-only form or a different constant.
struct MonoVariant {
  std::string name;
  // Evaluates the operator whose differences are tested.
  std::function<DualField(double, const Field&)> op;
  double pair_coef = 2.0;  // multiplies <op(u)-op(v), u-v>
  bool with_noise = true;
  double v_margin = 0.0;   // + margin‖w‖_V² on the left
  double K = 0.0;
  Rho rho;
};

std::vector<MonoVariant> catalog_variants(const Problem& prob);
// Evaluates a variant; ‖B(u)-B(v)‖² included when with_noise.
Gap variant_gap(const MonoVariant& var, const NoiseOperator& B, const Field& u, const Field& v, double t = 0.0);

struct AuditOptions {
  SamplerSpec sampler;
  double t = 0.0;
  bool ascent = true;
  bool variants = true;
};

// Default condition list for a catalog operator.
std::vector<Condition> default_conditions(const Problem& prob);
// Whether the catalog claims `c` for this operator (A2/A4 are expected to fail
// for the locally monotone examples).
bool expected_to_hold(const Problem& prob, Condition c);

ConditionReport audit_condition(const Problem& prob, Condition c, const AuditOptions& opts);
ConditionReport audit_variant(const Problem& prob, const MonoVariant& var, const AuditOptions& opts);
std::vector<ConditionReport> audit(const Problem& prob, const std::vector<Condition>& conditions,
                                   const AuditOptions& opts);

// Re-evaluates the gap at a witness.
Gap reevaluate(const Problem& prob, Condition c, const Witness& w, double K_override = -1.0);

struct SearchResult {
  bool found = false;
  Condition condition = Condition::A2;
  double K = 0.0;
  long evaluations = 0;
  double best_relative = -1e300;  // max over (gap / scale) seen
  Gap at_best;
  Witness witness;
};

// Searches for a violation of A2 or A4 with constant K: random multi-start then
// coordinate ascent. Stops at the first gap > threshold · scale.
SearchResult counterexample_search(const Problem& prob, Condition c, double K, long budget, const SamplerSpec& sampler,
                                   double threshold = 1e-4);

}  // namespace lmspde
