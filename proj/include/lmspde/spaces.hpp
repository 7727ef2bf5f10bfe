#pragma once

// Finite-resolution Gelfand triple V ⊂ H ⊂ V*.
//
// A Basis is a truncated H-orthonormal family {e_i} ⊂ V together with the
// quadrature grid used for pseudospectral products. States are coefficient
// vectors (Field); elements of V* are stored through their pairings against
// the basis (DualField), so P_n y = Σ <y, e_i> e_i is the pairing vector itself.
//
// Supported families:
//   * real sine basis on (0,1)^d with Dirichlet data, d = 1, 2, 3
//       e_k(x) = Π_a √2 sin(k_a π x_a),            -Δ e_k = π²|k|² e_k
//   * divergence-free Fourier vector basis on the unit torus T^d, d = 2, 3
//       e = √2 cos(2π k·x) p,  √2 sin(2π k·x) p,   p ⊥ k, |p| = 1
//
// Quadrature is the composite trapezoid rule on a uniform grid. For the sine
// basis this is exact for trigonometric integrands cos(lπx) with l < 2M, and
// on the torus for wavenumbers below M; the default grids make quartic
// integrands alias-free.

#include <cstddef>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace lmspde {

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class ConsistencyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Domain { Interval, Square, Cube, Torus2, Torus3 };
enum class Family { Sine, DivFreeFourier };

std::string to_string(Domain d);
Domain domain_from_string(const std::string& s);

struct Tolerances {
  double identity = 1e-8;    // relative, for identities checked by quadrature
  double exact_zero = 1e-10; // absolute, for quantities that vanish exactly
};

struct BasisSpec {
  Domain domain = Domain::Interval;
  // Sine: modes per axis (1..cutoff). Fourier: max |k_a| per axis.
  int cutoff = 16;
  // Sine: intervals per axis. Torus: nodes per axis. 0 picks the default
  // (alias-free for quartic integrands).
  int grid = 0;
  double oversample = 1.5;
};

class Basis {
 public:
  static std::shared_ptr<const Basis> make(const BasisSpec& spec);

  const BasisSpec& spec() const { return spec_; }
  Family family() const { return family_; }
  int dim() const { return dim_; }
  int components() const { return comps_; }
  std::size_t size() const { return eig_.size(); }
  std::size_t nodes() const { return weights_.size(); }
  int grid_per_axis() const { return grid_; }

  std::span<const double> weights() const { return weights_; }
  std::span<const double> eigenvalues() const { return eig_; }
  double eigenvalue(std::size_t i) const { return eig_.at(i); }
  // Integer wave index of mode i (length dim).
  std::span<const int> wave(std::size_t i) const;
  // sup_x |e_i(x)| over all modes (pointwise Euclidean magnitude).
  double sup_norm_bound() const { return sup_bound_; }
  // |Λ|
  double volume() const { return 1.0; }
  std::vector<double> node(std::size_t q) const;

  // Grid values, layout [q * C + c].
  std::vector<double> synthesize(std::span<const double> coeffs) const;
  // Grid gradient, layout [(q * d + a) * C + c] = ∂_a u_c(x_q).
  std::vector<double> synthesize_gradient(std::span<const double> coeffs) const;
  // H-orthogonal projection of gridded values (layout [q * C + c]) onto H_n.
  std::vector<double> analyze(std::span<const double> grid_values) const;
  // Pairings ∫ Σ_{a,c} G_{q,a,c} ∂_a e_i,c for a gridded tensor G (gradient layout).
  std::vector<double> analyze_gradient(std::span<const double> grid_tensor) const;
  double integrate(std::span<const double> scalar_grid) const;
  // Pointwise divergence of a vector field (spectral derivative of the basis).
  std::vector<double> divergence(std::span<const double> coeffs) const;

  bool same_as(const Basis& other) const { return this == &other; }

 private:
  Basis() = default;
  void build_sine();
  void build_torus();

  BasisSpec spec_;
  Family family_ = Family::Sine;
  int dim_ = 1;
  int comps_ = 1;
  int grid_ = 0;
  double sup_bound_ = 0.0;
  std::vector<double> weights_;
  std::vector<double> coords_;      // [q * d + a]
  std::vector<double> eig_;
  std::vector<int> waves_;          // [i * d + a]
  std::vector<double> values_;      // [(i * Q + q) * C + c]
  std::vector<double> gradients_;   // [((i * Q + q) * d + a) * C + c]
};

using BasisPtr = std::shared_ptr<const Basis>;

// An element of H_n, stored as its coefficients w.r.t. {e_i}.
class Field {
 public:
  Field(BasisPtr basis, std::vector<double> coeffs);
  static Field zero(BasisPtr basis);
  static Field mode(BasisPtr basis, std::size_t i, double amplitude = 1.0);

  const BasisPtr& basis() const { return basis_; }
  std::span<const double> coeffs() const { return coeffs_; }
  std::vector<double>& mutable_coeffs() { return coeffs_; }
  std::size_t size() const { return coeffs_.size(); }
  double operator[](std::size_t i) const { return coeffs_[i]; }
  bool finite() const;

  Field& operator+=(const Field& o);
  Field& operator-=(const Field& o);
  Field& operator*=(double s);

 private:
  BasisPtr basis_;
  std::vector<double> coeffs_;
};

Field operator+(Field a, const Field& b);
Field operator-(Field a, const Field& b);
Field operator*(double s, Field a);

// An element of V* restricted to H_n: entry i is <y, e_i>.
class DualField {
 public:
  DualField(BasisPtr basis, std::vector<double> pairings);
  static DualField zero(BasisPtr basis);
  // Riesz image of an H element (pairings equal its coefficients).
  static DualField of(const Field& u);

  const BasisPtr& basis() const { return basis_; }
  std::span<const double> pairings() const { return pairings_; }
  std::vector<double>& mutable_pairings() { return pairings_; }
  std::size_t size() const { return pairings_.size(); }
  double operator[](std::size_t i) const { return pairings_[i]; }

  DualField& operator+=(const DualField& o);
  DualField& operator-=(const DualField& o);
  DualField& operator*=(double s);

 private:
  BasisPtr basis_;
  std::vector<double> pairings_;
};

DualField operator+(DualField a, const DualField& b);
DualField operator-(DualField a, const DualField& b);
DualField operator*(double s, DualField a);

void require_same_basis(const BasisPtr& a, const BasisPtr& b);

double pairing(const DualField& y, const Field& v);
double inner(const Field& u, const Field& v);
double h_norm(const Field& v);
// ‖∇u‖_{L^p} by quadrature. At p = 2 the grid value is cross-checked against
// the spectral value √Σ λ_i v_i²; a mismatch throws ConsistencyError.
double v_norm(const Field& v, double p = 2.0, const Tolerances& tol = {});
// √Σ λ_i v_i², the exact V-norm for p = 2 without quadrature.
double energy_norm(const Field& v);
// α = 2: exact discrete V*-norm √Σ y_i²/λ_i.
// α ≠ 2: lower bound sup_{probe} |<y, probe>| over unit W^{1,α}-norm probes
// {e_i / ‖e_i‖_{1,α}} ∪ {Riesz direction of y}. Never overestimates.
double dual_norm(const DualField& y, double alpha = 2.0);
double lp_norm(const Field& v, double p);

std::vector<double> synthesize(const Field& v);
Field analyze(const BasisPtr& basis, std::span<const double> grid_values);

// Gram matrix of the basis under quadrature (row-major n × n).
std::vector<double> gram_matrix(const Basis& basis);
// max |div e_i| over grid nodes and modes; zero for the scalar families.
double max_basis_divergence(const Basis& basis);

}  // namespace lmspde
