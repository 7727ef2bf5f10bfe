#include "lmspde/operators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace lmspde {

namespace {

constexpr double kPi = std::numbers::pi;

double norm_value(const Field& v, const RhoTerm& term, double v_exponent) {
  switch (term.norm) {
    case RhoTerm::Norm::V:
      return v_exponent == 2.0 ? energy_norm(v) : v_norm(v, v_exponent);
    case RhoTerm::Norm::H:
      return h_norm(v);
    case RhoTerm::Norm::Lq:
      return lp_norm(v, term.q);
  }
  return 0.0;
}

void require_family(const Field& u, Family fam, int dim, const char* what) {
  const Basis& b = *u.basis();
  if (b.family() != fam || (dim > 0 && b.dim() != dim)) {
    throw DimensionError(std::string(what) + ": unsupported basis for this operator");
  }
}

double sum_sq(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s;
}

}  // namespace

// --- Rho -----------------------------------------------------------------------

double Rho::operator()(const Field& v, double v_exponent) const {
  double s = constant_;
  for (const auto& t : terms_) {
    const double n = norm_value(v, t, v_exponent);
    s += t.coef * std::pow(n, t.exponent);
  }
  return s;
}

std::string Rho::describe() const {
  if (is_zero()) return "0";
  std::ostringstream os;
  os.precision(6);
  bool first = true;
  if (constant_ != 0.0) {
    os << constant_;
    first = false;
  }
  for (const auto& t : terms_) {
    if (!first) os << " + ";
    first = false;
    os << t.coef << "*|v|_";
    switch (t.norm) {
      case RhoTerm::Norm::V: os << "V"; break;
      case RhoTerm::Norm::H: os << "H"; break;
      case RhoTerm::Norm::Lq: os << "L" << t.q; break;
    }
    os << "^" << t.exponent;
  }
  return os.str();
}

double integrate_forcing(const OperatorSpec& spec, double horizon, int panels) {
  if (panels % 2 != 0) ++panels;
  const double h = horizon / panels;
  double s = spec.f(0.0) + spec.f(horizon);
  for (int i = 1; i < panels; ++i) s += (i % 2 ? 4.0 : 2.0) * spec.f(i * h);
  return s * h / 3.0;
}

void validate(const OperatorSpec& spec, double horizon) {
  if (!(spec.alpha > 1.0)) throw std::invalid_argument("operator spec: alpha must exceed 1");
  if (!(spec.theta > 0.0)) throw std::invalid_argument("operator spec: theta must be positive");
  if (!(spec.beta >= 0.0)) throw std::invalid_argument("operator spec: beta must be nonnegative");
  if (!std::isfinite(spec.K)) throw std::invalid_argument("operator spec: K must be finite");
  if (!spec.f) throw std::invalid_argument("operator spec: forcing f missing");
  for (int i = 0; i <= 16; ++i) {
    const double ft = spec.f(horizon * i / 16.0);
    if (!(ft >= 0.0) || !std::isfinite(ft)) throw std::invalid_argument("operator spec: f must be finite and nonnegative");
  }
  if (!std::isfinite(integrate_forcing(spec, horizon))) {
    throw std::invalid_argument("operator spec: f is not integrable on [0,T]");
  }
}

// --- building blocks ---------------------------------------------------------------

DualField laplace_drift(const Field& u, double nu) {
  const auto eig = u.basis()->eigenvalues();
  std::vector<double> out(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) out[i] = -nu * eig[i] * u[i];
  return DualField(u.basis(), std::move(out));
}

DualField semilinear_terms(const Field& u, const std::vector<ScalarFunction>& f, const GrowthFunction* g) {
  require_family(u, Family::Sine, 0, "semilinear_drift");
  const Basis& b = *u.basis();
  const int d = b.dim();
  if (static_cast<int>(f.size()) != d) {
    throw DimensionError("semilinear_drift: expected " + std::to_string(d) + " transport coefficients, got " +
                         std::to_string(f.size()));
  }
  const auto vals = b.synthesize(u.coeffs());
  const auto grad = b.synthesize_gradient(u.coeffs());
  std::vector<double> h(b.nodes(), 0.0);
  for (std::size_t q = 0; q < b.nodes(); ++q) {
    double s = 0.0;
    for (int a = 0; a < d; ++a) {
      if (f[a].fn) s += f[a].fn(vals[q]) * grad[q * d + a];
    }
    if (g && g->fn) s += g->fn(vals[q]);
    h[q] = s;
  }
  return DualField(u.basis(), b.analyze(h));
}

DualField semilinear_drift(const Field& u, const std::vector<ScalarFunction>& f, const GrowthFunction* g) {
  return laplace_drift(u) + semilinear_terms(u, f, g);
}

DualField burgers_nonlinearity(const Field& u) {
  require_family(u, Family::Sine, 1, "burgers_drift");
  const Basis& b = *u.basis();
  const auto vals = b.synthesize(u.coeffs());
  const auto grad = b.synthesize_gradient(u.coeffs());
  std::vector<double> h(b.nodes());
  for (std::size_t q = 0; q < b.nodes(); ++q) h[q] = vals[q] * grad[q];
  return DualField(u.basis(), b.analyze(h));
}

DualField burgers_drift(const Field& u) { return laplace_drift(u) + burgers_nonlinearity(u); }

DualField p_laplace_drift(const Field& u, double p) {
  if (!(p >= 2.0)) throw std::invalid_argument("p_laplace_drift: p must be >= 2");
  const Basis& b = *u.basis();
  auto grad = b.synthesize_gradient(u.coeffs());
  const std::size_t per = static_cast<std::size_t>(b.dim()) * b.components();
  for (std::size_t q = 0; q < b.nodes(); ++q) {
    double s = 0.0;
    for (std::size_t j = 0; j < per; ++j) s += grad[q * per + j] * grad[q * per + j];
    const double w = p == 2.0 ? 1.0 : (p == 4.0 ? s : std::pow(s, 0.5 * (p - 2.0)));
    for (std::size_t j = 0; j < per; ++j) grad[q * per + j] *= w;
  }
  auto pairings = b.analyze_gradient(grad);
  for (auto& x : pairings) x = -x;
  return DualField(u.basis(), std::move(pairings));
}

DualField nse_bilinear(const Field& u, const Field& v) {
  require_same_basis(u.basis(), v.basis());
  require_family(u, Family::DivFreeFourier, 0, "nse_bilinear");
  const Basis& b = *u.basis();
  const int d = b.dim();
  const auto uv = b.synthesize(u.coeffs());
  const auto gv = b.synthesize_gradient(v.coeffs());
  std::vector<double> h(b.nodes() * d, 0.0);
  for (std::size_t q = 0; q < b.nodes(); ++q) {
    for (int c = 0; c < d; ++c) {
      double s = 0.0;
      for (int a = 0; a < d; ++a) s += uv[q * d + a] * gv[(q * d + a) * d + c];
      h[q * d + c] = -s;
    }
  }
  return DualField(u.basis(), b.analyze(h));
}

DualField nse_drift(double t, const Field& u, const NSEParams& params) {
  auto out = laplace_drift(u, params.nu) + nse_nonlinearity(u);
  if (params.forcing) out += params.forcing(t);
  return out;
}

double taming_function(double r, double N, double nu) {
  if (r <= N) return 0.0;
  if (r >= N + 1.0) return (r - N) / nu;
  const double s = r - N;
  return (2.0 * s * s - s * s * s) / nu;
}

double taming_derivative(double r, double N, double nu) {
  if (r <= N) return 0.0;
  if (r >= N + 1.0) return 1.0 / nu;
  const double s = r - N;
  return (4.0 * s - 3.0 * s * s) / nu;
}

double taming_slope_bound(double nu) { return 4.0 / (3.0 * nu); }

DualField taming_term(const Field& u, double N, double nu) {
  if (!(N > 0.0)) throw std::invalid_argument("taming: N must be positive");
  require_family(u, Family::DivFreeFourier, 3, "tamed_nse3d_nonlinearity");
  const Basis& b = *u.basis();
  const int d = b.dim();
  auto vals = b.synthesize(u.coeffs());
  for (std::size_t q = 0; q < b.nodes(); ++q) {
    double r = 0.0;
    for (int c = 0; c < d; ++c) r += vals[q * d + c] * vals[q * d + c];
    const double g = taming_function(r, N, nu);
    for (int c = 0; c < d; ++c) vals[q * d + c] *= g;
  }
  return DualField(u.basis(), b.analyze(vals));
}

DualField tamed_nse3d_nonlinearity(const Field& u, double N, double nu) {
  return nse_nonlinearity(u) - taming_term(u, N, nu);
}

// --- drift classes ---------------------------------------------------------------

std::vector<double> DriftOperator::linear_rates() const { return std::vector<double>(basis_->size(), 0.0); }

DualField DriftOperator::remainder(double t, const Field& u) const {
  auto out = evaluate(t, u);
  const auto rates = linear_rates();
  auto& p = out.mutable_pairings();
  for (std::size_t i = 0; i < p.size(); ++i) p[i] += rates[i] * u[i];
  return out;
}

HeatDrift::HeatDrift(BasisPtr basis, double nu) : DriftOperator(std::move(basis)), nu_(nu) {
  if (!(nu > 0.0)) throw std::invalid_argument("heat: viscosity must be positive");
}

DualField HeatDrift::evaluate(double, const Field& u) const { return laplace_drift(u, nu_); }

std::vector<double> HeatDrift::linear_rates() const {
  std::vector<double> r(basis_->eigenvalues().begin(), basis_->eigenvalues().end());
  for (auto& x : r) x *= nu_;
  return r;
}

DualField HeatDrift::remainder(double, const Field& u) const { return DualField::zero(u.basis()); }

SemilinearDrift::SemilinearDrift(BasisPtr basis, std::vector<ScalarFunction> f, GrowthFunction g)
    : DriftOperator(std::move(basis)), f_(std::move(f)), g_(std::move(g)) {
  if (static_cast<int>(f_.size()) != basis_->dim()) {
    throw DimensionError("semilinear: transport coefficient count must equal the spatial dimension");
  }
}

DualField SemilinearDrift::evaluate(double, const Field& u) const { return semilinear_drift(u, f_, &g_); }

std::vector<double> SemilinearDrift::linear_rates() const {
  return {basis_->eigenvalues().begin(), basis_->eigenvalues().end()};
}

DualField SemilinearDrift::remainder(double, const Field& u) const { return semilinear_terms(u, f_, &g_); }

BurgersDrift::BurgersDrift(BasisPtr basis) : DriftOperator(std::move(basis)) {
  if (basis_->family() != Family::Sine || basis_->dim() != 1) {
    throw DimensionError("burgers: requires the 1-D sine basis");
  }
}

DualField BurgersDrift::evaluate(double, const Field& u) const { return burgers_drift(u); }

std::vector<double> BurgersDrift::linear_rates() const {
  return {basis_->eigenvalues().begin(), basis_->eigenvalues().end()};
}

DualField BurgersDrift::remainder(double, const Field& u) const { return burgers_nonlinearity(u); }

PLaplaceDrift::PLaplaceDrift(BasisPtr basis, double p) : DriftOperator(std::move(basis)), p_(p) {
  if (!(p >= 2.0)) throw std::invalid_argument("plaplace: p must be >= 2");
}

DualField PLaplaceDrift::evaluate(double, const Field& u) const { return p_laplace_drift(u, p_); }

NavierStokes2dDrift::NavierStokes2dDrift(BasisPtr basis, NSEParams params)
    : DriftOperator(std::move(basis)), params_(std::move(params)) {
  if (basis_->family() != Family::DivFreeFourier || basis_->dim() != 2) {
    throw DimensionError("nse2d: requires the 2-D divergence-free torus basis");
  }
  if (!(params_.nu > 0.0)) throw std::invalid_argument("nse2d: viscosity must be positive");
}

DualField NavierStokes2dDrift::evaluate(double t, const Field& u) const { return nse_drift(t, u, params_); }

std::vector<double> NavierStokes2dDrift::linear_rates() const {
  std::vector<double> r(basis_->eigenvalues().begin(), basis_->eigenvalues().end());
  for (auto& x : r) x *= params_.nu;
  return r;
}

DualField NavierStokes2dDrift::remainder(double t, const Field& u) const {
  auto out = nse_nonlinearity(u);
  if (params_.forcing) out += params_.forcing(t);
  return out;
}

TamedNavierStokes3dDrift::TamedNavierStokes3dDrift(BasisPtr basis, double nu, double N)
    : DriftOperator(std::move(basis)), nu_(nu), N_(N) {
  if (basis_->family() != Family::DivFreeFourier || basis_->dim() != 3) {
    throw DimensionError("tamed-nse3d-static: requires the 3-D divergence-free torus basis");
  }
  if (!(N > 0.0)) throw std::invalid_argument("tamed-nse3d-static: N must be positive");
  if (!(nu > 0.0)) throw std::invalid_argument("tamed-nse3d-static: viscosity must be positive");
}

DualField TamedNavierStokes3dDrift::evaluate(double, const Field& u) const {
  return laplace_drift(u, nu_) + tamed_nse3d_nonlinearity(u, N_, nu_);
}

// --- noise -------------------------------------------------------------------------

void validate_sigma(const std::vector<double>& sigma) {
  for (std::size_t j = 0; j < sigma.size(); ++j) {
    if (!std::isfinite(sigma[j]) || sigma[j] < 0.0) {
      throw std::invalid_argument("noise amplitudes must be finite and nonnegative");
    }
    if (j > 0 && sigma[j] > sigma[j - 1]) {
      throw std::invalid_argument("noise amplitudes must be nonincreasing (growing sigma is not trace class)");
    }
  }
}

double NoiseOperator::hs_norm_sq(double t, const Field& u) const {
  return sum_sq(matrix(t, u));
}

double NoiseOperator::hs_norm(double t, const Field& u) const { return std::sqrt(hs_norm_sq(t, u)); }

double NoiseOperator::hs_distance_sq(double t, const Field& u, const Field& v) const {
  if (additive()) return 0.0;
  auto a = matrix(t, u);
  const auto b = matrix(t, v);
  for (std::size_t i = 0; i < a.size(); ++i) a[i] -= b[i];
  return sum_sq(a);
}

ZeroNoise::ZeroNoise(BasisPtr basis, int m) : NoiseOperator(std::move(basis), m) {
  if (m < 1) throw std::invalid_argument("noise: mode count must be positive");
}

std::vector<double> ZeroNoise::apply(double, const Field& u, std::span<const double>) const {
  return std::vector<double>(u.size(), 0.0);
}

std::vector<double> ZeroNoise::matrix(double, const Field& u) const {
  return std::vector<double>(u.size() * m_, 0.0);
}

AdditiveNoise::AdditiveNoise(BasisPtr basis, std::vector<double> sigma)
    : NoiseOperator(std::move(basis), static_cast<int>(sigma.size())), sigma_(std::move(sigma)) {
  if (sigma_.empty()) throw std::invalid_argument("additive noise: at least one mode required");
  validate_sigma(sigma_);
}

std::vector<double> AdditiveNoise::apply(double, const Field& u, std::span<const double> dW) const {
  if (dW.size() != sigma_.size()) throw DimensionError("additive noise: increment length mismatch");
  std::vector<double> out(u.size(), 0.0);
  const std::size_t k = std::min(u.size(), sigma_.size());
  for (std::size_t j = 0; j < k; ++j) out[j] = sigma_[j] * dW[j];
  return out;
}

std::vector<double> AdditiveNoise::matrix(double, const Field& u) const {
  const std::size_t n = u.size(), m = sigma_.size();
  std::vector<double> out(n * m, 0.0);
  for (std::size_t j = 0; j < std::min(n, m); ++j) out[j * m + j] = sigma_[j];
  return out;
}

std::pair<double, double> AdditiveNoise::growth() const {
  double a0 = 0.0;
  const std::size_t k = std::min(basis_->size(), sigma_.size());
  for (std::size_t j = 0; j < k; ++j) a0 += sigma_[j] * sigma_[j];
  return {a0, 0.0};
}

MultiplicativeNoise::MultiplicativeNoise(BasisPtr basis, ScalarFunction b, std::vector<double> sigma)
    : NoiseOperator(std::move(basis), static_cast<int>(sigma.size())), b_(std::move(b)), sigma_(std::move(sigma)) {
  if (sigma_.empty()) throw std::invalid_argument("multiplicative noise: at least one mode required");
  if (sigma_.size() > basis_->size()) {
    throw DimensionError("multiplicative noise: noise modes cannot exceed state modes");
  }
  if (!b_.fn) throw std::invalid_argument("multiplicative noise: b missing");
  validate_sigma(sigma_);
}

std::vector<double> MultiplicativeNoise::apply(double, const Field& u, std::span<const double> dW) const {
  if (dW.size() != sigma_.size()) throw DimensionError("multiplicative noise: increment length mismatch");
  const Basis& b = *basis_;
  std::vector<double> w(u.size(), 0.0);
  for (std::size_t j = 0; j < sigma_.size(); ++j) w[j] = sigma_[j] * dW[j];
  auto noise = b.synthesize(w);
  const auto vals = b.synthesize(u.coeffs());
  for (std::size_t k = 0; k < noise.size(); ++k) noise[k] *= b_.fn(vals[k]);
  return b.analyze(noise);
}

std::vector<double> MultiplicativeNoise::matrix(double, const Field& u) const {
  const Basis& b = *basis_;
  const std::size_t n = u.size(), m = sigma_.size();
  auto bu = b.synthesize(u.coeffs());
  for (auto& x : bu) x = b_.fn(x);
  std::vector<double> out(n * m, 0.0);
  std::vector<double> e(n, 0.0);
  for (std::size_t j = 0; j < m; ++j) {
    if (sigma_[j] == 0.0) continue;
    std::fill(e.begin(), e.end(), 0.0);
    e[j] = 1.0;
    auto g = b.synthesize(e);
    for (std::size_t k = 0; k < g.size(); ++k) g[k] *= bu[k];
    const auto col = b.analyze(g);
    for (std::size_t i = 0; i < n; ++i) out[i * m + j] = sigma_[j] * col[i];
  }
  return out;
}

double MultiplicativeNoise::lipschitz_sq() const {
  const double sup = basis_->sup_norm_bound();
  return b_.lipschitz * b_.lipschitz * sup * sup * sum_sq(sigma_);
}

std::pair<double, double> MultiplicativeNoise::growth() const {
  const double sup2 = basis_->sup_norm_bound() * basis_->sup_norm_bound();
  const double s2 = sum_sq(sigma_);
  const double comps = basis_->components();
  return {2.0 * comps * b_.at_zero * b_.at_zero * sup2 * s2 * basis_->volume(),
          2.0 * b_.lipschitz * b_.lipschitz * sup2 * s2};
}

// --- catalog -----------------------------------------------------------------------

const std::vector<std::string>& catalog_ids() {
  static const std::vector<std::string> ids{"heat", "semilinear", "burgers", "plaplace", "nse2d", "tamed-nse3d-static"};
  return ids;
}

std::vector<double> noise_amplitudes(const NoiseParams& params, int m) {
  if (!params.sigma.empty()) {
    if (m > 0 && static_cast<int>(params.sigma.size()) != m) {
      throw std::invalid_argument("noise: explicit sigma length must equal the noise mode count");
    }
    return params.sigma;
  }
  std::vector<double> s(m);
  for (int j = 0; j < m; ++j) s[j] = params.amplitude * std::pow(static_cast<double>(j + 1), -params.decay);
  return s;
}

NoisePtr make_noise(const BasisPtr& basis, const NoiseParams& params) {
  int m = params.modes > 0 ? params.modes : static_cast<int>(params.sigma.empty() ? basis->size() : params.sigma.size());
  if (params.type == "none") return std::make_shared<ZeroNoise>(basis, m);
  auto sigma = noise_amplitudes(params, m);
  if (params.type == "additive") return std::make_shared<AdditiveNoise>(basis, std::move(sigma));
  if (params.type == "multiplicative") {
    ScalarFunction b;
    if (params.b == "identity") {
      b = {[](double x) { return x; }, std::numeric_limits<double>::infinity(), 1.0, 0.0, "identity"};
    } else if (params.b == "sin") {
      b = {[](double x) { return std::sin(x); }, 1.0, 1.0, 0.0, "sin"};
    } else if (params.b == "one") {
      b = {[](double) { return 1.0; }, 1.0, 0.0, 1.0, "one"};
    } else {
      throw std::invalid_argument("noise: unknown multiplicative coefficient '" + params.b + "'");
    }
    return std::make_shared<MultiplicativeNoise>(basis, std::move(b), std::move(sigma));
  }
  throw std::invalid_argument("noise: unknown type '" + params.type + "'");
}

double burgers_monotonicity_constant() {
  // 2|∫ v w w_x| ≤ 2‖v‖_{L⁴}‖w‖_{L⁴}‖w‖_V with ‖w‖_{L⁴}² ≤ π^{-1/2}‖w‖_H‖w‖_V, then
  // Young (exponents 4/3, 4) leaving -(3/2)‖w‖_V²: 2K = (27/8)·16·c⁴/4 with c⁴ = 1/π.
  return 27.0 / (4.0 * kPi);
}

double semilinear_monotonicity_constant(const std::vector<ScalarFunction>& f, double g_C, int dim) {
  double M = 0.0, L = 0.0;
  for (const auto& fi : f) {
    M = std::max(M, fi.bound);
    L = std::max(L, fi.lipschitz);
  }
  // Budget of ‖w‖_V² spent by Young: one share for the f_i(u) D_i w terms, one per
  // D_i v (f_i(u) - f_i(v)) term, one for g.
  const double shares = dim + 1 + (g_C > 0.0 ? 1 : 0);
  const double eps = 1.0 / shares;
  double K = std::max(dim * M * M / eps + 2.0 * g_C, 2.0 * L * L / eps);
  if (g_C > 0.0) K = std::max(K, 2.0 * g_C * g_C / eps);
  return K;
}

namespace {

OperatorSpec finish_spec(OperatorSpec s, double f_need) {
  const double f_value = f_need > 0.0 ? f_need : 1.0;
  s.f = [f_value](double) { return f_value; };
  std::ostringstream os;
  os.precision(17);
  os << f_value;
  s.f_description = os.str();
  return s;
}

}  // namespace

Problem make_problem(const OperatorParams& op, const NoiseParams& noise_params) {
  Problem prob;
  prob.op = op;
  prob.noise_params = noise_params;
  BasisSpec bs;
  bs.cutoff = op.modes;
  bs.grid = op.grid;

  if (op.id == "heat" || op.id == "burgers" || op.id == "plaplace") {
    bs.domain = Domain::Interval;
  } else if (op.id == "semilinear") {
    if (op.dim == 1) {
      bs.domain = Domain::Interval;
    } else if (op.dim == 2) {
      bs.domain = Domain::Square;
    } else {
      throw std::invalid_argument("semilinear: dim must be 1 or 2");
    }
  } else if (op.id == "nse2d") {
    bs.domain = Domain::Torus2;
  } else if (op.id == "tamed-nse3d-static") {
    bs.domain = Domain::Torus3;
  } else {
    throw std::invalid_argument("unknown operator '" + op.id + "'");
  }
  prob.basis = Basis::make(bs);
  prob.noise = make_noise(prob.basis, noise_params);

  const double LB2 = prob.noise->lipschitz_sq();
  const auto [a0, a1] = prob.noise->growth();
  const double lambda1 = prob.basis->eigenvalue(0);
  OperatorSpec s;

  if (op.id == "heat") {
    auto d = std::make_shared<HeatDrift>(prob.basis, op.nu);
    s.alpha = 2.0;
    s.beta = 0.0;
    s.theta = op.nu;
    // H2: K ≥ L_B²; H3: K ≥ a1; H4: ‖νΔv‖²_{V*} = ν²‖v‖_V²; the classical growth bound needs K ≥ ν.
    s.K = std::max({LB2, a1, op.nu * op.nu, op.nu});
    d->set_spec(finish_spec(s, a0));
    prob.drift = d;
  } else if (op.id == "semilinear") {
    const int dim = op.dim;
    std::vector<ScalarFunction> f;
    f.push_back({[](double x) { return 0.5 * std::sin(x); }, 0.5, 0.5, 0.0, "0.5 sin"});
    if (dim == 2) f.push_back({[](double x) { return 0.5 * std::cos(x); }, 0.5, 0.5, 0.5, "0.5 cos"});
    const double r = dim == 1 ? 3.0 : 7.0 / 3.0;
    GrowthFunction g{[r](double x) { return x - std::copysign(std::pow(std::abs(x), r), x); }, r, 2.0, 2.0,
                     "x - sign(x)|x|^r"};
    double M = 0.0;
    for (const auto& fi : f) M = std::max(M, fi.bound);
    const double Krho = semilinear_monotonicity_constant(f, g.C, dim);
    // Coercivity: Σ 2∫f_i(v) D_i v v ≤ ½‖v‖_V² + 2dM²‖v‖², 2∫g(v)v ≤ 2C‖v‖².
    const double K3 = 2.0 * dim * M * M + 2.0 * g.C + a1;
    // Growth: ‖A(v)‖_{V*} ≤ c1‖v‖_V + c2 + c3‖v‖_H^{β/2}‖v‖_V.
    const double c1 = 1.0 + M * std::sqrt(double(dim)) / std::sqrt(lambda1);
    double c2, c3;
    if (dim == 1) {
      c2 = g.C / std::sqrt(lambda1);
      c3 = c2;
      s.beta = 4.0;
    } else {
      c2 = g.C * std::pow(2.0, 0.25) * std::pow(lambda1, -0.25);
      c3 = c2 * std::pow(2.0, 5.0 / 12.0) * std::pow(lambda1, -1.0 / 12.0);
      s.beta = 8.0 / 3.0;
    }
    const double K4 = 3.0 * std::max(c1 * c1, c3 * c3);
    s.alpha = 2.0;
    s.theta = 1.0;
    s.K = std::max({Krho + LB2, K3, K4});
    s.rho = Rho(0.0, {{RhoTerm::Norm::V, 2.0, 2.0, Krho}, {RhoTerm::Norm::Lq, 2.0 * g.s, 2.0 * g.s, Krho}});
    s.rho_growth_C = 3.0 * Krho;
    auto d = std::make_shared<SemilinearDrift>(prob.basis, std::move(f), std::move(g));
    d->set_spec(finish_spec(s, std::max(a0, 3.0 * c2 * c2)));
    prob.drift = d;
  } else if (op.id == "burgers") {
    const double Kb = burgers_monotonicity_constant();
    s.alpha = 2.0;
    s.beta = 2.0;
    s.theta = 1.0;
    // Growth: ‖A(v)‖_{V*} ≤ ‖v‖_V + ½‖v‖²_{L⁴} ≤ ‖v‖_V(1 + ‖v‖_H/(2√π)).
    s.K = std::max({LB2, a1, 2.0});
    s.rho = Rho(0.0, {{RhoTerm::Norm::Lq, 4.0, 4.0, 2.0 * Kb}});
    s.rho_growth_C = 2.0 * Kb / kPi;
    auto d = std::make_shared<BurgersDrift>(prob.basis);
    d->set_spec(finish_spec(s, a0));
    prob.drift = d;
  } else if (op.id == "plaplace") {
    s.alpha = op.p;
    s.v_exponent = op.p;
    s.beta = 0.0;
    s.theta = 1.0;
    s.K = std::max({LB2, a1, 1.0});
    auto d = std::make_shared<PLaplaceDrift>(prob.basis, op.p);
    d->set_spec(finish_spec(s, a0));
    prob.drift = d;
  } else if (op.id == "nse2d") {
    NSEParams params;
    params.nu = op.nu;
    double force_dual_sq = 0.0;
    if (op.forcing != 0.0) {
      auto basis = prob.basis;
      const double amp = op.forcing;
      params.forcing = [basis, amp](double) { return DualField(DualField::of(Field::mode(basis, 0, amp))); };
      force_dual_sq = amp * amp / lambda1;
    }
    const double nu = op.nu;
    s.alpha = 2.0;
    s.beta = 2.0;
    s.theta = nu;
    s.K = std::max({LB2, a1, 3.0 * nu * nu, 24.0});
    s.rho = Rho(0.0, {{RhoTerm::Norm::Lq, 4.0, 4.0, 32.0 / (nu * nu * nu)}});
    s.rho_growth_C = 64.0 / (nu * nu * nu);
    auto d = std::make_shared<NavierStokes2dDrift>(prob.basis, std::move(params));
    d->set_spec(finish_spec(s, std::max(a0 + force_dual_sq / nu, 3.0 * force_dual_sq)));
    prob.drift = d;
  } else {
    const double nu = op.nu;
    s.alpha = 2.0;
    s.beta = 0.0;
    s.theta = nu;
    s.K = std::max(LB2, a1);
    // Twice the one-sided F estimate, since the condition carries the factor 2.
    s.rho = Rho(0.0, {{RhoTerm::Norm::Lq, 4.0, 8.0, std::pow(2.0, 13) / std::pow(nu, 7)}});
    auto d = std::make_shared<TamedNavierStokes3dDrift>(prob.basis, nu, op.taming_N);
    d->set_spec(finish_spec(s, a0));
    prob.drift = d;
  }
  return prob;
}

}  // namespace lmspde
