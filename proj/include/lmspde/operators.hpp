#pragma once

// Drift operators A: V -> V* and noise operators B: V -> L_2(U; H), each
// carrying the structural constants (α, β, θ, K, ρ, f) under which the
// locally monotone framework applies.
//
// Drift values are returned as DualFields, i.e. the pairings <A(u), e_i>,
// which are the coordinates of P_n A(u). Nonlinear terms are formed by grid
// products followed by projection, so they are exact up to the quadrature
// guarantees of the basis.

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "lmspde/spaces.hpp"

namespace lmspde {

// ρ(v) = constant + Σ coef · ‖v‖_norm^exponent
struct RhoTerm {
  enum class Norm { V, H, Lq };
  Norm norm = Norm::H;
  double q = 2.0;  // for Lq
  double exponent = 2.0;
  double coef = 1.0;
};

class Rho {
 public:
  Rho() = default;
  Rho(double constant, std::vector<RhoTerm> terms) : constant_(constant), terms_(std::move(terms)) {}

  // v_exponent selects the V-norm: 2 is the H¹_0 norm, otherwise ‖∇v‖_{L^p}.
  double operator()(const Field& v, double v_exponent = 2.0) const;
  bool is_zero() const { return constant_ == 0.0 && terms_.empty(); }
  double constant() const { return constant_; }
  const std::vector<RhoTerm>& terms() const { return terms_; }
  std::string describe() const;

 private:
  double constant_ = 0.0;
  std::vector<RhoTerm> terms_;
};

struct OperatorSpec {
  double alpha = 2.0;
  double beta = 0.0;
  double theta = 1.0;
  double K = 0.0;
  // Exponent p of the V-norm ‖∇v‖_{L^p}; equals α for the p-Laplacian.
  double v_exponent = 2.0;
  Rho rho;
  // C in ρ(v) ≤ C(1+‖v‖_V^α)(1+‖v‖_H^β).
  double rho_growth_C = 0.0;
  // Deterministic nonnegative forcing magnitude f_t.
  std::function<double(double)> f = [](double) { return 1.0; };
  std::string f_description = "1";
};

// Validates α > 1, θ > 0, β ≥ 0 and integrability of f on [0, T].
void validate(const OperatorSpec& spec, double horizon);
// ∫_0^T f_t dt by composite Simpson.
double integrate_forcing(const OperatorSpec& spec, double horizon, int panels = 256);

struct ScalarFunction {
  std::function<double(double)> fn;
  double bound = 0.0;      // sup |fn|
  double lipschitz = 0.0;  // Lipschitz constant
  double at_zero = 0.0;    // fn(0)
  std::string name;
};

// g with |g(x)| ≤ C(|x|^r + 1) and (g(x)-g(y))(x-y) ≤ C(1+|y|^s)(x-y)².
struct GrowthFunction {
  std::function<double(double)> fn;
  double r = 1.0;
  double s = 1.0;
  double C = 0.0;
  std::string name;
};

class DriftOperator {
 public:
  virtual ~DriftOperator() = default;

  virtual std::string id() const = 0;
  virtual DualField evaluate(double t, const Field& u) const = 0;

  const OperatorSpec& spec() const { return spec_; }
  void set_spec(OperatorSpec spec) { spec_ = std::move(spec); }
  const BasisPtr& basis() const { return basis_; }

  // Rates λ_i ≥ 0 of the diagonal linear part, A(u) = -diag(λ) u + R(u).
  virtual std::vector<double> linear_rates() const;
  virtual DualField remainder(double t, const Field& u) const;

 protected:
  explicit DriftOperator(BasisPtr basis) : basis_(std::move(basis)) {}

  BasisPtr basis_;
  OperatorSpec spec_;
};

using DriftPtr = std::shared_ptr<const DriftOperator>;

// --- pointwise building blocks ------------------------------------------------

// ν Δ u, diagonal on both families.
DualField laplace_drift(const Field& u, double nu = 1.0);
// Σ f_i(u) D_i u + g(u); pass g = nullptr to omit.
DualField semilinear_terms(const Field& u, const std::vector<ScalarFunction>& f, const GrowthFunction* g);
DualField semilinear_drift(const Field& u, const std::vector<ScalarFunction>& f, const GrowthFunction* g);
// u ∂u/∂x on the interval.
DualField burgers_nonlinearity(const Field& u);
DualField burgers_drift(const Field& u);
// div(|∇u|^{p-2} ∇u)
DualField p_laplace_drift(const Field& u, double p);
// F(u, v) = -P_H[(u·∇) v] on the divergence-free torus basis.
DualField nse_bilinear(const Field& u, const Field& v);
inline DualField nse_nonlinearity(const Field& u) { return nse_bilinear(u, u); }

struct NSEParams {
  double nu = 1.0;
  std::function<DualField(double)> forcing;  // empty means f ≡ 0
};

DualField nse_drift(double t, const Field& u, const NSEParams& params);

// Taming function: 0 on [0, N], (r-N)/ν on [N+1, ∞), cubic Hermite blend between.
double taming_function(double r, double N, double nu);
double taming_derivative(double r, double N, double nu);
// sup g_N' = 4/(3ν), attained inside the blend.
double taming_slope_bound(double nu);
// P_H[g_N(|u|²) u]
DualField taming_term(const Field& u, double N, double nu);
// F(u) - P_H[g_N(|u|²) u]
DualField tamed_nse3d_nonlinearity(const Field& u, double N, double nu);

// --- catalog drifts ----------------------------------------------------------

class HeatDrift final : public DriftOperator {
 public:
  HeatDrift(BasisPtr basis, double nu = 1.0);
  std::string id() const override { return "heat"; }
  DualField evaluate(double t, const Field& u) const override;
  std::vector<double> linear_rates() const override;
  DualField remainder(double t, const Field& u) const override;
  double nu() const { return nu_; }

 private:
  double nu_;
};

class SemilinearDrift final : public DriftOperator {
 public:
  SemilinearDrift(BasisPtr basis, std::vector<ScalarFunction> f, GrowthFunction g);
  std::string id() const override { return "semilinear"; }
  DualField evaluate(double t, const Field& u) const override;
  std::vector<double> linear_rates() const override;
  DualField remainder(double t, const Field& u) const override;
  const std::vector<ScalarFunction>& transport() const { return f_; }
  const GrowthFunction& reaction() const { return g_; }

 private:
  std::vector<ScalarFunction> f_;
  GrowthFunction g_;
};

class BurgersDrift final : public DriftOperator {
 public:
  explicit BurgersDrift(BasisPtr basis);
  std::string id() const override { return "burgers"; }
  DualField evaluate(double t, const Field& u) const override;
  std::vector<double> linear_rates() const override;
  DualField remainder(double t, const Field& u) const override;
};

class PLaplaceDrift final : public DriftOperator {
 public:
  PLaplaceDrift(BasisPtr basis, double p);
  std::string id() const override { return "plaplace"; }
  DualField evaluate(double t, const Field& u) const override;
  double p() const { return p_; }

 private:
  double p_;
};

class NavierStokes2dDrift final : public DriftOperator {
 public:
  NavierStokes2dDrift(BasisPtr basis, NSEParams params);
  std::string id() const override { return "nse2d"; }
  DualField evaluate(double t, const Field& u) const override;
  std::vector<double> linear_rates() const override;
  DualField remainder(double t, const Field& u) const override;
  const NSEParams& params() const { return params_; }

 private:
  NSEParams params_;
};

// Static-only: evaluated for inequality audits, never time-stepped.
class TamedNavierStokes3dDrift final : public DriftOperator {
 public:
  TamedNavierStokes3dDrift(BasisPtr basis, double nu, double N);
  std::string id() const override { return "tamed-nse3d-static"; }
  DualField evaluate(double t, const Field& u) const override;
  double nu() const { return nu_; }
  double N() const { return N_; }

 private:
  double nu_;
  double N_;
};

// --- noise -------------------------------------------------------------------

// B(t, u): truncated U (noise modes g_j = e_j, j < m) -> H_n.
class NoiseOperator {
 public:
  virtual ~NoiseOperator() = default;

  virtual std::string id() const = 0;
  int modes() const { return m_; }
  const BasisPtr& basis() const { return basis_; }

  // B(t,u) dW as a coefficient vector.
  virtual std::vector<double> apply(double t, const Field& u, std::span<const double> dW) const = 0;
  // Row-major n × m matrix of B(t,u).
  virtual std::vector<double> matrix(double t, const Field& u) const = 0;
  virtual bool additive() const { return false; }
  // L² with ‖B(u) - B(v)‖₂² ≤ L² ‖u - v‖_H².
  virtual double lipschitz_sq() const = 0;
  // (a0, a1) with ‖B(u)‖₂² ≤ a0 + a1 ‖u‖_H².
  virtual std::pair<double, double> growth() const = 0;

  double hs_norm_sq(double t, const Field& u) const;
  double hs_norm(double t, const Field& u) const;
  // ‖B(u) - B(v)‖₂²
  double hs_distance_sq(double t, const Field& u, const Field& v) const;

 protected:
  NoiseOperator(BasisPtr basis, int m) : basis_(std::move(basis)), m_(m) {}

  BasisPtr basis_;
  int m_;
};

using NoisePtr = std::shared_ptr<const NoiseOperator>;

class ZeroNoise final : public NoiseOperator {
 public:
  ZeroNoise(BasisPtr basis, int m = 1);
  std::string id() const override { return "none"; }
  std::vector<double> apply(double, const Field&, std::span<const double>) const override;
  std::vector<double> matrix(double, const Field&) const override;
  bool additive() const override { return true; }
  double lipschitz_sq() const override { return 0.0; }
  std::pair<double, double> growth() const override { return {0.0, 0.0}; }
};

// B ≡ diag(σ_1, …, σ_m).
class AdditiveNoise final : public NoiseOperator {
 public:
  AdditiveNoise(BasisPtr basis, std::vector<double> sigma);
  std::string id() const override { return "additive"; }
  std::vector<double> apply(double, const Field&, std::span<const double> dW) const override;
  std::vector<double> matrix(double, const Field&) const override;
  bool additive() const override { return true; }
  double lipschitz_sq() const override { return 0.0; }
  std::pair<double, double> growth() const override;
  const std::vector<double>& sigma() const { return sigma_; }

 private:
  std::vector<double> sigma_;
};

// B(u) g_j = σ_j P_n[b(u) e_j], b applied pointwise (componentwise for vector fields).
class MultiplicativeNoise final : public NoiseOperator {
 public:
  MultiplicativeNoise(BasisPtr basis, ScalarFunction b, std::vector<double> sigma);
  std::string id() const override { return "multiplicative"; }
  std::vector<double> apply(double, const Field& u, std::span<const double> dW) const override;
  std::vector<double> matrix(double, const Field& u) const override;
  double lipschitz_sq() const override;
  std::pair<double, double> growth() const override;
  const std::vector<double>& sigma() const { return sigma_; }

 private:
  ScalarFunction b_;
  std::vector<double> sigma_;
};

// Rejects negative, non-finite or growing amplitudes.
void validate_sigma(const std::vector<double>& sigma);

// --- catalog -----------------------------------------------------------------

struct OperatorParams {
  std::string id = "heat";
  int modes = 16;     // cutoff per axis
  int grid = 0;       // 0: basis default
  double nu = 1.0;
  double p = 4.0;     // p-Laplace exponent
  int dim = 1;        // semilinear spatial dimension (1 or 2)
  double taming_N = 1.0;
  double forcing = 1.0;  // nse2d: amplitude of the constant force on mode 0
};

struct NoiseParams {
  std::string type = "additive";  // none | additive | multiplicative
  int modes = 0;                  // m; 0 means n
  double amplitude = 1.0;         // σ_j = amplitude · j^{-decay}
  double decay = 1.0;
  std::vector<double> sigma;      // explicit σ overrides amplitude/decay
  std::string b = "sin";          // multiplicative: identity | sin | one
};

struct Problem {
  BasisPtr basis;
  DriftPtr drift;
  NoisePtr noise;
  OperatorParams op;
  NoiseParams noise_params;
};

const std::vector<std::string>& catalog_ids();
// Builds basis, drift and noise and derives the structural constants for the pair.
Problem make_problem(const OperatorParams& op, const NoiseParams& noise);
NoisePtr make_noise(const BasisPtr& basis, const NoiseParams& params);
// Amplitudes σ_1..σ_m from params (explicit list or amplitude · j^{-decay}).
std::vector<double> noise_amplitudes(const NoiseParams& params, int m);
// Burgers local-monotonicity constant: 2<A(u)-A(v),w> ≤ -(3/2)‖w‖_V² + 2K‖v‖⁴_{L⁴}‖w‖².
double burgers_monotonicity_constant();
// Monotonicity constant for Σ f_i(u) D_i u, plus g with constant C (0 to omit):
// 2<A(u)-A(v),w> ≤ -‖w‖_V² + K(1 + ‖v‖_V² + ‖v‖_{L^{2s}}^{2s})‖w‖².
double semilinear_monotonicity_constant(const std::vector<ScalarFunction>& f, double g_C, int dim);

}  // namespace lmspde
