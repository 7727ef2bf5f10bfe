#pragma once

// Time stepping for the Galerkin system dX = P_n A(t,X) dt + P_n B(t,X) dW⁽ᵐ⁾.
//
// Noise increments come from a counter-based stream keyed by
// (seed, path, mode, fine step), so runs that differ only in n, m, dt (by an
// integer factor) or initial data see the same Brownian path.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lmspde/operators.hpp"
#include "lmspde/spaces.hpp"

namespace lmspde {

enum class Scheme { EulerMaruyama, ExpEuler };

std::string to_string(Scheme s);
Scheme scheme_from_string(const std::string& s);

struct InitialCondition {
  enum class Kind { Zero, Mode, Coefficients, Random };
  Kind kind = Kind::Zero;
  std::size_t mode = 0;        // Mode
  double amplitude = 1.0;      // Mode; Random: per-mode std = amplitude · (i+1)^{-decay}
  double decay = 1.0;          // Random
  std::vector<double> coeffs;  // Coefficients; truncated or zero-padded to n

  // P_n X_0. Random draws are keyed by (seed, path) and independent of the noise.
  Field realize(const BasisPtr& basis, std::uint64_t seed, std::uint64_t path) const;
};

std::string to_string(InitialCondition::Kind k);

struct SolverConfig {
  double T = 1.0;
  double dt = 1e-3;
  Scheme scheme = Scheme::ExpEuler;
  std::uint64_t seed = 0;
  InitialCondition x0;
  // Fine step of the noise stream; 0 means dt. dt must be an integer multiple.
  double noise_dt = 0.0;
  // Store one sample every `record_every` steps (the final time is always kept).
  int record_every = 1;
  bool keep_states = false;
  // Explicit Euler–Maruyama only: reject dt > 0.1 / max linear rate.
  bool stability_guard = true;
  // ‖X‖_H beyond this counts as explosion.
  double blowup = 1e100;

  std::int64_t steps() const;
};

// Throws std::invalid_argument on 0 < dt ≤ T violations, non-integral T/dt, etc.
void validate(const SolverConfig& cfg, const DriftOperator& drift);

// Independent N(0, dt) increments for noise mode j at fine step k.
class NoiseIncrementStream {
 public:
  NoiseIncrementStream(std::uint64_t seed, std::uint64_t path, double fine_dt);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t path() const { return path_; }
  double fine_dt() const { return fine_dt_; }

  // Standard normal attached to (seed, path, j, k).
  double standard_normal(int j, std::int64_t k) const;
  // Increments over coarse step k of length dt = r · fine_dt, for modes 0..out.size()-1.
  void increments(std::int64_t k, double dt, std::span<double> out) const;
  int ratio(double dt) const;

 private:
  std::uint64_t seed_;
  std::uint64_t path_;
  double fine_dt_;
};

// Uniform in (0,1) and standard normal from a 64-bit key; shared by samplers.
double hash_uniform(std::uint64_t key);
std::uint64_t mix_key(std::initializer_list<std::uint64_t> parts);
double hash_normal(std::uint64_t key);

Field em_step(const Field& u, double t, double dt, const DriftOperator& A, const NoiseOperator& B,
              std::span<const double> dW);
Field exp_euler_step(const Field& u, double t, double dt, const DriftOperator& A, const NoiseOperator& B,
                     std::span<const double> dW);
Field step(Scheme s, const Field& u, double t, double dt, const DriftOperator& A, const NoiseOperator& B,
           std::span<const double> dW);

struct Trajectory {
  std::vector<double> times;
  std::vector<double> h_norm;
  std::vector<double> v_norm;
  std::vector<double> l4_norm;
  std::vector<double> int_v_alpha;  // ∫_0^t ‖X‖_V^α ds, left Riemann
  std::vector<double> int_k_rho;    // ∫_0^t (K + ρ(X)) ds, left Riemann
  std::vector<Field> states;        // when keep_states
  double sup_h = 0.0;               // max over every solver step, not only recorded ones
  std::optional<Field> final_state;
  bool exploded = false;
  double explosion_time = 0.0;

  std::size_t size() const { return times.size(); }
};

// Called after every step with (k, t_k, X_k, X_{k+1}, dW_k).
using StepObserver =
    std::function<void(std::int64_t, double, const Field&, const Field&, std::span<const double>)>;

Trajectory simulate_path(const SolverConfig& cfg, const DriftOperator& A, const NoiseOperator& B,
                         const NoiseIncrementStream& stream, const Field& x0, const StepObserver& observer = {});
Trajectory simulate_path(const SolverConfig& cfg, const DriftOperator& A, const NoiseOperator& B,
                         const NoiseIncrementStream& stream);

std::pair<Trajectory, Trajectory> couple_paths(const SolverConfig& cfg, const DriftOperator& A,
                                               const NoiseOperator& B, const NoiseIncrementStream& stream,
                                               const Field& x0, const Field& y0);

// ‖a - b‖_H for fields on nested bases of the same family, matching modes by wave index.
double embedded_distance(const Field& a, const Field& b);

// Columns: t, h_norm, v_norm, l4_norm, int_v_alpha, int_k_rho[, c0 … c{n-1}].
void write_trajectory_csv(std::ostream& os, const Trajectory& traj, bool coefficients = false);

}  // namespace lmspde
