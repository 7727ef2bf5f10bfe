#include "lmspde/spaces.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace lmspde {

namespace {

constexpr double kPi = std::numbers::pi;

int domain_dim(Domain d) {
  switch (d) {
    case Domain::Interval: return 1;
    case Domain::Square: return 2;
    case Domain::Cube: return 3;
    case Domain::Torus2: return 2;
    case Domain::Torus3: return 3;
  }
  return 1;
}

bool is_torus(Domain d) { return d == Domain::Torus2 || d == Domain::Torus3; }

std::array<double, 3> cross(const std::array<double, 3>& a, const std::array<double, 3>& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

std::array<double, 3> normalized(std::array<double, 3> v) {
  const double n = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
  for (auto& x : v) x /= n;
  return v;
}

}  // namespace

std::string to_string(Domain d) {
  switch (d) {
    case Domain::Interval: return "interval";
    case Domain::Square: return "square";
    case Domain::Cube: return "cube";
    case Domain::Torus2: return "torus2";
    case Domain::Torus3: return "torus3";
  }
  return "interval";
}

Domain domain_from_string(const std::string& s) {
  if (s == "interval") return Domain::Interval;
  if (s == "square") return Domain::Square;
  if (s == "cube") return Domain::Cube;
  if (s == "torus2") return Domain::Torus2;
  if (s == "torus3") return Domain::Torus3;
  throw std::invalid_argument("unknown domain '" + s + "'");
}

std::shared_ptr<const Basis> Basis::make(const BasisSpec& spec) {
  if (spec.cutoff < 1) throw std::invalid_argument("basis cutoff must be positive");
  if (spec.oversample < 1.5) throw std::invalid_argument("oversample factor must be >= 3/2");
  std::shared_ptr<Basis> b(new Basis());
  b->spec_ = spec;
  b->dim_ = domain_dim(spec.domain);
  const bool torus = is_torus(spec.domain);
  // Largest retained mode index: the sine index itself, or the Fourier bandwidth 2c.
  const double max_index = torus ? 2.0 * spec.cutoff : spec.cutoff;
  int grid = spec.grid;
  if (grid == 0) grid = torus ? 4 * spec.cutoff + 2 : 2 * spec.cutoff + 2;
  if (grid <= spec.oversample * max_index) {
    throw std::invalid_argument("grid of " + std::to_string(grid) +
                                " points per axis is not alias-free for cutoff " +
                                std::to_string(spec.cutoff));
  }
  b->grid_ = grid;
  b->spec_.grid = grid;
  if (torus) {
    b->build_torus();
  } else {
    b->build_sine();
  }
  return b;
}

void Basis::build_sine() {
  family_ = Family::Sine;
  comps_ = 1;
  const int d = dim_;
  const int c = spec_.cutoff;
  const int m = grid_;
  const int pts = m + 1;
  const double h = 1.0 / m;

  std::vector<double> x(pts), w(pts);
  for (int q = 0; q < pts; ++q) {
    x[q] = q * h;
    w[q] = (q == 0 || q == m) ? 0.5 * h : h;
  }
  // Axis tables phi[k-1][q], dphi[k-1][q].
  std::vector<double> phi(c * pts), dphi(c * pts);
  for (int k = 1; k <= c; ++k) {
    for (int q = 0; q < pts; ++q) {
      phi[(k - 1) * pts + q] = std::sqrt(2.0) * std::sin(k * kPi * x[q]);
      dphi[(k - 1) * pts + q] = std::sqrt(2.0) * k * kPi * std::cos(k * kPi * x[q]);
    }
  }

  std::size_t nq = 1;
  for (int a = 0; a < d; ++a) nq *= pts;
  weights_.assign(nq, 1.0);
  coords_.assign(nq * d, 0.0);
  std::vector<int> qi(d);
  for (std::size_t q = 0; q < nq; ++q) {
    std::size_t r = q;
    for (int a = d - 1; a >= 0; --a) {
      qi[a] = static_cast<int>(r % pts);
      r /= pts;
    }
    for (int a = 0; a < d; ++a) {
      weights_[q] *= w[qi[a]];
      coords_[q * d + a] = x[qi[a]];
    }
  }

  std::size_t nm = 1;
  for (int a = 0; a < d; ++a) nm *= c;
  eig_.resize(nm);
  waves_.resize(nm * d);
  values_.assign(nm * nq, 0.0);
  gradients_.assign(nm * nq * d, 0.0);
  std::vector<int> ki(d);
  for (std::size_t i = 0; i < nm; ++i) {
    std::size_t r = i;
    for (int a = d - 1; a >= 0; --a) {
      ki[a] = static_cast<int>(r % c) + 1;
      r /= c;
    }
    double k2 = 0.0;
    for (int a = 0; a < d; ++a) {
      waves_[i * d + a] = ki[a];
      k2 += static_cast<double>(ki[a]) * ki[a];
    }
    eig_[i] = kPi * kPi * k2;
    for (std::size_t q = 0; q < nq; ++q) {
      std::size_t rq = q;
      for (int a = d - 1; a >= 0; --a) {
        qi[a] = static_cast<int>(rq % pts);
        rq /= pts;
      }
      double v = 1.0;
      for (int a = 0; a < d; ++a) v *= phi[(ki[a] - 1) * pts + qi[a]];
      values_[i * nq + q] = v;
      for (int a = 0; a < d; ++a) {
        double g = dphi[(ki[a] - 1) * pts + qi[a]];
        for (int b = 0; b < d; ++b) {
          if (b != a) g *= phi[(ki[b] - 1) * pts + qi[b]];
        }
        gradients_[(i * nq + q) * d + a] = g;
      }
    }
  }
  sup_bound_ = std::pow(2.0, 0.5 * d);
}

void Basis::build_torus() {
  family_ = Family::DivFreeFourier;
  const int d = dim_;
  comps_ = d;
  const int c = spec_.cutoff;
  const int m = grid_;

  std::size_t nq = 1;
  for (int a = 0; a < d; ++a) nq *= m;
  weights_.assign(nq, 1.0 / static_cast<double>(nq));
  coords_.assign(nq * d, 0.0);
  for (std::size_t q = 0; q < nq; ++q) {
    std::size_t r = q;
    for (int a = d - 1; a >= 0; --a) {
      coords_[q * d + a] = static_cast<double>(r % m) / m;
      r /= m;
    }
  }

  // Half-space of wavevectors: first nonzero component positive.
  std::vector<std::array<int, 3>> ks;
  const int span = 2 * c + 1;
  std::size_t total = 1;
  for (int a = 0; a < d; ++a) total *= span;
  for (std::size_t idx = 0; idx < total; ++idx) {
    std::array<int, 3> k{0, 0, 0};
    std::size_t r = idx;
    for (int a = d - 1; a >= 0; --a) {
      k[a] = static_cast<int>(r % span) - c;
      r /= span;
    }
    int first = 0;
    for (int a = 0; a < d; ++a) {
      if (k[a] != 0) {
        first = k[a];
        break;
      }
    }
    if (first > 0) ks.push_back(k);
  }
  std::stable_sort(ks.begin(), ks.end(), [](const auto& a, const auto& b) {
    return a[0] * a[0] + a[1] * a[1] + a[2] * a[2] < b[0] * b[0] + b[1] * b[1] + b[2] * b[2];
  });

  struct ModeDef {
    std::array<int, 3> k;
    std::array<double, 3> pol;
    bool is_sin;
  };
  std::vector<ModeDef> defs;
  for (const auto& k : ks) {
    std::vector<std::array<double, 3>> pols;
    if (d == 2) {
      const double n = std::hypot(k[0], k[1]);
      pols.push_back({-k[1] / n, k[0] / n, 0.0});
    } else {
      const std::array<double, 3> kd{double(k[0]), double(k[1]), double(k[2])};
      int axis = 0;
      for (int a = 1; a < 3; ++a) {
        if (std::abs(k[a]) < std::abs(k[axis])) axis = a;
      }
      std::array<double, 3> e{0.0, 0.0, 0.0};
      e[axis] = 1.0;
      const auto p1 = normalized(cross(kd, e));
      const auto p2 = normalized(cross(normalized(kd), p1));
      pols.push_back(p1);
      pols.push_back(p2);
    }
    for (const auto& p : pols) {
      defs.push_back({k, p, false});
      defs.push_back({k, p, true});
    }
  }

  const std::size_t nm = defs.size();
  const std::size_t cc = static_cast<std::size_t>(comps_);
  eig_.resize(nm);
  waves_.resize(nm * d);
  values_.assign(nm * nq * cc, 0.0);
  gradients_.assign(nm * nq * d * cc, 0.0);
  const double s2 = std::sqrt(2.0);
  for (std::size_t i = 0; i < nm; ++i) {
    const auto& def = defs[i];
    double k2 = 0.0;
    for (int a = 0; a < d; ++a) {
      waves_[i * d + a] = def.k[a];
      k2 += static_cast<double>(def.k[a]) * def.k[a];
    }
    eig_[i] = 4.0 * kPi * kPi * k2;
    for (std::size_t q = 0; q < nq; ++q) {
      double theta = 0.0;
      for (int a = 0; a < d; ++a) theta += def.k[a] * coords_[q * d + a];
      theta *= 2.0 * kPi;
      const double cs = std::cos(theta), sn = std::sin(theta);
      const double val = def.is_sin ? s2 * sn : s2 * cs;
      const double dval = def.is_sin ? s2 * cs : -s2 * sn;  // d/dθ
      for (std::size_t comp = 0; comp < cc; ++comp) {
        values_[(i * nq + q) * cc + comp] = val * def.pol[comp];
        for (int a = 0; a < d; ++a) {
          gradients_[((i * nq + q) * d + a) * cc + comp] =
              dval * 2.0 * kPi * def.k[a] * def.pol[comp];
        }
      }
    }
  }
  sup_bound_ = s2;
}

std::span<const int> Basis::wave(std::size_t i) const {
  return std::span<const int>(waves_).subspan(i * dim_, dim_);
}

std::vector<double> Basis::node(std::size_t q) const {
  return {coords_.begin() + q * dim_, coords_.begin() + (q + 1) * dim_};
}

std::vector<double> Basis::synthesize(std::span<const double> coeffs) const {
  if (coeffs.size() != size()) throw DimensionError("synthesize: coefficient length mismatch");
  const std::size_t len = nodes() * comps_;
  std::vector<double> out(len, 0.0);
  for (std::size_t i = 0; i < coeffs.size(); ++i) {
    const double ci = coeffs[i];
    if (ci == 0.0) continue;
    const double* row = values_.data() + i * len;
    for (std::size_t j = 0; j < len; ++j) out[j] += ci * row[j];
  }
  return out;
}

std::vector<double> Basis::synthesize_gradient(std::span<const double> coeffs) const {
  if (coeffs.size() != size()) throw DimensionError("synthesize_gradient: coefficient length mismatch");
  const std::size_t len = nodes() * dim_ * comps_;
  std::vector<double> out(len, 0.0);
  for (std::size_t i = 0; i < coeffs.size(); ++i) {
    const double ci = coeffs[i];
    if (ci == 0.0) continue;
    const double* row = gradients_.data() + i * len;
    for (std::size_t j = 0; j < len; ++j) out[j] += ci * row[j];
  }
  return out;
}

std::vector<double> Basis::analyze(std::span<const double> grid_values) const {
  const std::size_t len = nodes() * comps_;
  if (grid_values.size() != len) throw DimensionError("analyze: grid shape mismatch");
  std::vector<double> weighted(len);
  for (std::size_t q = 0; q < nodes(); ++q) {
    for (int c = 0; c < comps_; ++c) weighted[q * comps_ + c] = weights_[q] * grid_values[q * comps_ + c];
  }
  std::vector<double> out(size(), 0.0);
  for (std::size_t i = 0; i < size(); ++i) {
    const double* row = values_.data() + i * len;
    double s = 0.0;
    for (std::size_t j = 0; j < len; ++j) s += weighted[j] * row[j];
    out[i] = s;
  }
  return out;
}

std::vector<double> Basis::analyze_gradient(std::span<const double> grid_tensor) const {
  const std::size_t per_node = static_cast<std::size_t>(dim_) * comps_;
  const std::size_t len = nodes() * per_node;
  if (grid_tensor.size() != len) throw DimensionError("analyze_gradient: grid shape mismatch");
  std::vector<double> weighted(len);
  for (std::size_t q = 0; q < nodes(); ++q) {
    for (std::size_t j = 0; j < per_node; ++j) weighted[q * per_node + j] = weights_[q] * grid_tensor[q * per_node + j];
  }
  std::vector<double> out(size(), 0.0);
  for (std::size_t i = 0; i < size(); ++i) {
    const double* row = gradients_.data() + i * len;
    double s = 0.0;
    for (std::size_t j = 0; j < len; ++j) s += weighted[j] * row[j];
    out[i] = s;
  }
  return out;
}

double Basis::integrate(std::span<const double> scalar_grid) const {
  if (scalar_grid.size() != nodes()) throw DimensionError("integrate: grid shape mismatch");
  double s = 0.0;
  for (std::size_t q = 0; q < nodes(); ++q) s += weights_[q] * scalar_grid[q];
  return s;
}

std::vector<double> Basis::divergence(std::span<const double> coeffs) const {
  const auto grad = synthesize_gradient(coeffs);
  std::vector<double> div(nodes(), 0.0);
  if (comps_ != dim_) return div;
  for (std::size_t q = 0; q < nodes(); ++q) {
    for (int a = 0; a < dim_; ++a) div[q] += grad[(q * dim_ + a) * comps_ + a];
  }
  return div;
}

// ---------------------------------------------------------------------------

void require_same_basis(const BasisPtr& a, const BasisPtr& b) {
  if (!a || !b || a.get() != b.get()) throw DimensionError("operands live on different bases");
}

Field::Field(BasisPtr basis, std::vector<double> coeffs) : basis_(std::move(basis)), coeffs_(std::move(coeffs)) {
  if (!basis_) throw std::invalid_argument("Field requires a basis");
  if (coeffs_.size() != basis_->size()) {
    throw DimensionError("Field: expected " + std::to_string(basis_->size()) + " coefficients, got " +
                         std::to_string(coeffs_.size()));
  }
}

Field Field::zero(BasisPtr basis) {
  const auto n = basis->size();
  return Field(std::move(basis), std::vector<double>(n, 0.0));
}

Field Field::mode(BasisPtr basis, std::size_t i, double amplitude) {
  Field f = zero(std::move(basis));
  f.coeffs_.at(i) = amplitude;
  return f;
}

bool Field::finite() const {
  return std::all_of(coeffs_.begin(), coeffs_.end(), [](double x) { return std::isfinite(x); });
}

Field& Field::operator+=(const Field& o) {
  require_same_basis(basis_, o.basis_);
  for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] += o.coeffs_[i];
  return *this;
}

Field& Field::operator-=(const Field& o) {
  require_same_basis(basis_, o.basis_);
  for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] -= o.coeffs_[i];
  return *this;
}

Field& Field::operator*=(double s) {
  for (auto& c : coeffs_) c *= s;
  return *this;
}

Field operator+(Field a, const Field& b) { return a += b; }
Field operator-(Field a, const Field& b) { return a -= b; }
Field operator*(double s, Field a) { return a *= s; }

DualField::DualField(BasisPtr basis, std::vector<double> pairings)
    : basis_(std::move(basis)), pairings_(std::move(pairings)) {
  if (!basis_) throw std::invalid_argument("DualField requires a basis");
  if (pairings_.size() != basis_->size()) throw DimensionError("DualField: pairing length mismatch");
}

DualField DualField::zero(BasisPtr basis) {
  const auto n = basis->size();
  return DualField(std::move(basis), std::vector<double>(n, 0.0));
}

DualField DualField::of(const Field& u) {
  return DualField(u.basis(), std::vector<double>(u.coeffs().begin(), u.coeffs().end()));
}

DualField& DualField::operator+=(const DualField& o) {
  require_same_basis(basis_, o.basis_);
  for (std::size_t i = 0; i < pairings_.size(); ++i) pairings_[i] += o.pairings_[i];
  return *this;
}

DualField& DualField::operator-=(const DualField& o) {
  require_same_basis(basis_, o.basis_);
  for (std::size_t i = 0; i < pairings_.size(); ++i) pairings_[i] -= o.pairings_[i];
  return *this;
}

DualField& DualField::operator*=(double s) {
  for (auto& c : pairings_) c *= s;
  return *this;
}

DualField operator+(DualField a, const DualField& b) { return a += b; }
DualField operator-(DualField a, const DualField& b) { return a -= b; }
DualField operator*(double s, DualField a) { return a *= s; }

double pairing(const DualField& y, const Field& v) {
  require_same_basis(y.basis(), v.basis());
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s += y[i] * v[i];
  return s;
}

double inner(const Field& u, const Field& v) {
  require_same_basis(u.basis(), v.basis());
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) s += u[i] * v[i];
  return s;
}

double h_norm(const Field& v) {
  double s = 0.0;
  for (double c : v.coeffs()) s += c * c;
  return std::sqrt(s);
}

double energy_norm(const Field& v) {
  const auto eig = v.basis()->eigenvalues();
  double s = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) s += eig[i] * v[i] * v[i];
  return std::sqrt(s);
}

double v_norm(const Field& v, double p, const Tolerances& tol) {
  if (!(p >= 1.0)) throw std::invalid_argument("v_norm: p must be >= 1");
  const Basis& b = *v.basis();
  const auto grad = b.synthesize_gradient(v.coeffs());
  const std::size_t per = static_cast<std::size_t>(b.dim()) * b.components();
  std::vector<double> integrand(b.nodes());
  for (std::size_t q = 0; q < b.nodes(); ++q) {
    double s = 0.0;
    for (std::size_t j = 0; j < per; ++j) s += grad[q * per + j] * grad[q * per + j];
    integrand[q] = p == 2.0 ? s : std::pow(s, 0.5 * p);
  }
  const double grid_value = std::pow(b.integrate(integrand), 1.0 / p);
  if (p == 2.0) {
    const double spectral = energy_norm(v);
    if (std::abs(grid_value - spectral) > tol.identity * spectral + 1e-300) {
      throw ConsistencyError("v_norm: grid and spectral V-norms disagree");
    }
    return spectral;
  }
  return grid_value;
}

double dual_norm(const DualField& y, double alpha) {
  const Basis& b = *y.basis();
  const auto eig = b.eigenvalues();
  if (alpha == 2.0) {
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) s += y[i] * y[i] / eig[i];
    return std::sqrt(s);
  }
  double best = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] == 0.0) continue;
    const double nv = v_norm(Field::mode(y.basis(), i), alpha);
    best = std::max(best, std::abs(y[i]) / nv);
  }
  std::vector<double> riesz(y.size()), plain(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    riesz[i] = y[i] / eig[i];
    plain[i] = y[i];
  }
  for (auto* dir : {&riesz, &plain}) {
    Field probe(y.basis(), *dir);
    const double nv = v_norm(probe, alpha);
    if (nv > 0.0) best = std::max(best, std::abs(pairing(y, probe)) / nv);
  }
  return best;
}

double lp_norm(const Field& v, double p) {
  if (!(p >= 1.0)) throw std::invalid_argument("lp_norm: p must be >= 1");
  const Basis& b = *v.basis();
  const auto vals = b.synthesize(v.coeffs());
  const int cc = b.components();
  std::vector<double> integrand(b.nodes());
  for (std::size_t q = 0; q < b.nodes(); ++q) {
    double s = 0.0;
    for (int c = 0; c < cc; ++c) s += vals[q * cc + c] * vals[q * cc + c];
    if (p == 2.0) {
      integrand[q] = s;
    } else if (p == 4.0) {
      integrand[q] = s * s;
    } else {
      integrand[q] = std::pow(s, 0.5 * p);
    }
  }
  return std::pow(b.integrate(integrand), 1.0 / p);
}

std::vector<double> synthesize(const Field& v) { return v.basis()->synthesize(v.coeffs()); }

Field analyze(const BasisPtr& basis, std::span<const double> grid_values) {
  return Field(basis, basis->analyze(grid_values));
}

std::vector<double> gram_matrix(const Basis& basis) {
  const std::size_t n = basis.size();
  std::vector<double> g(n * n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    std::vector<double> e(n, 0.0);
    e[j] = 1.0;
    const auto col = basis.analyze(basis.synthesize(e));
    for (std::size_t i = 0; i < n; ++i) g[i * n + j] = col[i];
  }
  return g;
}

double max_basis_divergence(const Basis& basis) {
  double worst = 0.0;
  const std::size_t n = basis.size();
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> e(n, 0.0);
    e[i] = 1.0;
    for (double d : basis.divergence(e)) worst = std::max(worst, std::abs(d));
  }
  return worst;
}

}  // namespace lmspde
