#include "lmspde/solver.hpp"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <map>
#include <numbers>
#include <ostream>
#include <stdexcept>

namespace lmspde {

namespace {

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t kNoiseTag = 0x4e4f495345ULL;
constexpr std::uint64_t kInitTag = 0x494e4954ULL;

double v_norm_for(const Field& u, double v_exponent) {
  return v_exponent == 2.0 ? energy_norm(u) : v_norm(u, v_exponent);
}

}  // namespace

std::uint64_t mix_key(std::initializer_list<std::uint64_t> parts) {
  std::uint64_t h = 0x243f6a8885a308d3ULL;
  for (auto p : parts) h = splitmix(h ^ splitmix(p));
  return h;
}

double hash_uniform(std::uint64_t key) {
  // 53 random bits, shifted off zero.
  return (static_cast<double>(splitmix(key) >> 11) + 0.5) * 0x1.0p-53;
}

double hash_normal(std::uint64_t key) {
  const double u1 = hash_uniform(key);
  const double u2 = hash_uniform(key ^ 0xda942042e4dd58b5ULL);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::string to_string(Scheme s) { return s == Scheme::EulerMaruyama ? "em" : "exp_euler"; }

Scheme scheme_from_string(const std::string& s) {
  if (s == "em" || s == "euler_maruyama") return Scheme::EulerMaruyama;
  if (s == "exp_euler" || s == "semi_implicit") return Scheme::ExpEuler;
  throw std::invalid_argument("unknown scheme '" + s + "' (expected em | exp_euler)");
}

std::string to_string(InitialCondition::Kind k) {
  switch (k) {
    case InitialCondition::Kind::Zero: return "zero";
    case InitialCondition::Kind::Mode: return "mode";
    case InitialCondition::Kind::Coefficients: return "coefficients";
    case InitialCondition::Kind::Random: return "random";
  }
  return "zero";
}

Field InitialCondition::realize(const BasisPtr& basis, std::uint64_t seed, std::uint64_t path) const {
  std::vector<double> c(basis->size(), 0.0);
  switch (kind) {
    case Kind::Zero:
      break;
    case Kind::Mode:
      if (mode >= c.size()) throw DimensionError("initial condition: mode index beyond n");
      c[mode] = amplitude;
      break;
    case Kind::Coefficients:
      std::copy_n(coeffs.begin(), std::min(coeffs.size(), c.size()), c.begin());
      break;
    case Kind::Random:
      for (std::size_t i = 0; i < c.size(); ++i) {
        c[i] = amplitude * std::pow(static_cast<double>(i + 1), -decay) * hash_normal(mix_key({kInitTag, seed, path, i}));
      }
      break;
  }
  return Field(basis, std::move(c));
}

std::int64_t SolverConfig::steps() const { return static_cast<std::int64_t>(std::llround(T / dt)); }

void validate(const SolverConfig& cfg, const DriftOperator& drift) {
  if (!(cfg.dt > 0.0) || !(cfg.T > 0.0) || cfg.dt > cfg.T) {
    throw std::invalid_argument("solver: need 0 < dt <= T");
  }
  const double ratio = cfg.T / cfg.dt;
  if (ratio > 9.0e15) throw std::invalid_argument("solver: T/dt exceeds the integer range");
  if (std::abs(ratio - std::round(ratio)) > 1e-9 * ratio) {
    throw std::invalid_argument("solver: T must be an integer multiple of dt");
  }
  if (cfg.record_every < 1) throw std::invalid_argument("solver: record_every must be >= 1");
  if (cfg.noise_dt < 0.0) throw std::invalid_argument("solver: noise_dt must be nonnegative");
  if (cfg.noise_dt > 0.0) NoiseIncrementStream(cfg.seed, 0, cfg.noise_dt).ratio(cfg.dt);
  if (cfg.scheme == Scheme::EulerMaruyama && cfg.stability_guard) {
    const auto rates = drift.linear_rates();
    const double lmax = rates.empty() ? 0.0 : *std::max_element(rates.begin(), rates.end());
    if (lmax > 0.0 && cfg.dt > 0.1 / lmax) {
      throw std::invalid_argument("solver: explicit scheme needs dt <= 0.1/lambda_max = " + std::to_string(0.1 / lmax));
    }
  }
}

NoiseIncrementStream::NoiseIncrementStream(std::uint64_t seed, std::uint64_t path, double fine_dt)
    : seed_(seed), path_(path), fine_dt_(fine_dt) {
  if (!(fine_dt > 0.0)) throw std::invalid_argument("noise stream: fine step must be positive");
}

double NoiseIncrementStream::standard_normal(int j, std::int64_t k) const {
  return hash_normal(mix_key({kNoiseTag, seed_, path_, static_cast<std::uint64_t>(j), static_cast<std::uint64_t>(k)}));
}

int NoiseIncrementStream::ratio(double dt) const {
  const double r = dt / fine_dt_;
  const double rr = std::round(r);
  if (rr < 1.0 || std::abs(r - rr) > 1e-9 * rr) {
    throw std::invalid_argument("noise stream: dt must be an integer multiple of the fine step");
  }
  return static_cast<int>(rr);
}

void NoiseIncrementStream::increments(std::int64_t k, double dt, std::span<double> out) const {
  const int r = ratio(dt);
  const double sd = std::sqrt(fine_dt_);
  for (std::size_t j = 0; j < out.size(); ++j) {
    double s = 0.0;
    for (int f = 0; f < r; ++f) s += standard_normal(static_cast<int>(j), k * r + f);
    out[j] = sd * s;
  }
}

Field em_step(const Field& u, double t, double dt, const DriftOperator& A, const NoiseOperator& B,
              std::span<const double> dW) {
  if (static_cast<int>(dW.size()) != B.modes()) throw DimensionError("em_step: dW length must equal noise modes");
  const auto a = A.evaluate(t, u);
  const auto noise = B.apply(t, u, dW);
  std::vector<double> out(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) out[i] = u[i] + dt * a[i] + noise[i];
  return Field(u.basis(), std::move(out));
}

Field exp_euler_step(const Field& u, double t, double dt, const DriftOperator& A, const NoiseOperator& B,
                     std::span<const double> dW) {
  if (static_cast<int>(dW.size()) != B.modes()) throw DimensionError("exp_euler_step: dW length must equal noise modes");
  const auto rates = A.linear_rates();
  const auto r = A.remainder(t, u);
  const auto noise = B.apply(t, u, dW);
  std::vector<double> out(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double damp = rates[i] == 0.0 ? 1.0 : std::exp(-rates[i] * dt);
    out[i] = damp * (u[i] + dt * r[i] + noise[i]);
  }
  return Field(u.basis(), std::move(out));
}

Field step(Scheme s, const Field& u, double t, double dt, const DriftOperator& A, const NoiseOperator& B,
           std::span<const double> dW) {
  return s == Scheme::EulerMaruyama ? em_step(u, t, dt, A, B, dW) : exp_euler_step(u, t, dt, A, B, dW);
}

Trajectory simulate_path(const SolverConfig& cfg, const DriftOperator& A, const NoiseOperator& B,
                         const NoiseIncrementStream& stream, const Field& x0, const StepObserver& observer) {
  validate(cfg, A);
  require_same_basis(A.basis(), x0.basis());
  const auto& spec = A.spec();
  const std::int64_t N = cfg.steps();
  Trajectory tr;
  const std::size_t expected = static_cast<std::size_t>(N / cfg.record_every + 2);
  tr.times.reserve(expected);

  Field x = x0;
  double iv = 0.0, ik = 0.0;
  std::vector<double> dW(B.modes());

  auto record = [&](double t, double h, double v, double l4) {
    tr.times.push_back(t);
    tr.h_norm.push_back(h);
    tr.v_norm.push_back(v);
    tr.l4_norm.push_back(l4);
    tr.int_v_alpha.push_back(iv);
    tr.int_k_rho.push_back(ik);
    if (cfg.keep_states) tr.states.push_back(x);
  };

  for (std::int64_t k = 0;; ++k) {
    const double t = k * cfg.dt;
    const double h = h_norm(x);
    const double v = v_norm_for(x, spec.v_exponent);
    const double l4 = lp_norm(x, 4.0);
    if (!x.finite() || !std::isfinite(h) || !std::isfinite(v) || !std::isfinite(l4) || h > cfg.blowup) {
      tr.exploded = true;
      tr.explosion_time = t;
      break;
    }
    tr.sup_h = std::max(tr.sup_h, h);
    if (k % cfg.record_every == 0 || k == N) record(t, h, v, l4);
    if (k == N) break;

    const double rho = spec.rho.is_zero() ? 0.0 : spec.rho(x, spec.v_exponent);
    iv += std::pow(v, spec.alpha) * cfg.dt;
    ik += (spec.K + rho) * cfg.dt;

    stream.increments(k, cfg.dt, dW);
    Field next = step(cfg.scheme, x, t, cfg.dt, A, B, dW);
    if (observer) observer(k, t, x, next, dW);
    x = std::move(next);
  }
  tr.final_state = x;
  return tr;
}

Trajectory simulate_path(const SolverConfig& cfg, const DriftOperator& A, const NoiseOperator& B,
                         const NoiseIncrementStream& stream) {
  return simulate_path(cfg, A, B, stream, cfg.x0.realize(A.basis(), cfg.seed, stream.path()));
}

std::pair<Trajectory, Trajectory> couple_paths(const SolverConfig& cfg, const DriftOperator& A,
                                               const NoiseOperator& B, const NoiseIncrementStream& stream,
                                               const Field& x0, const Field& y0) {
  return {simulate_path(cfg, A, B, stream, x0), simulate_path(cfg, A, B, stream, y0)};
}

double embedded_distance(const Field& a, const Field& b) {
  const Basis& ba = *a.basis();
  const Basis& bb = *b.basis();
  if (ba.same_as(bb)) return h_norm(a - b);
  if (ba.family() != bb.family() || ba.dim() != bb.dim()) {
    throw DimensionError("embedded_distance: bases of different families");
  }
  std::map<std::vector<int>, std::vector<std::size_t>> index;
  for (std::size_t i = 0; i < bb.size(); ++i) {
    auto w = bb.wave(i);
    index[std::vector<int>(w.begin(), w.end())].push_back(i);
  }
  std::vector<bool> used(bb.size(), false);
  double s = 0.0;
  for (std::size_t i = 0; i < ba.size(); ++i) {
    auto w = ba.wave(i);
    auto it = index.find(std::vector<int>(w.begin(), w.end()));
    double other = 0.0;
    if (it != index.end()) {
      // Modes sharing a wave index appear in the same order in both bases.
      for (auto j : it->second) {
        if (!used[j]) {
          used[j] = true;
          other = b[j];
          break;
        }
      }
    }
    s += (a[i] - other) * (a[i] - other);
  }
  for (std::size_t j = 0; j < bb.size(); ++j) {
    if (!used[j]) s += b[j] * b[j];
  }
  return std::sqrt(s);
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj, bool coefficients) {
  os << "t,h_norm,v_norm,l4_norm,int_v_alpha,int_k_rho";
  const std::size_t n = coefficients && !traj.states.empty() ? traj.states.front().size() : 0;
  for (std::size_t i = 0; i < n; ++i) os << ",c" << i;
  os << '\n';
  char buf[32];
  auto put = [&](double x) {
    std::snprintf(buf, sizeof buf, "%.17g", x);
    os << buf;
  };
  for (std::size_t r = 0; r < traj.size(); ++r) {
    put(traj.times[r]);
    for (const auto* col : {&traj.h_norm, &traj.v_norm, &traj.l4_norm, &traj.int_v_alpha, &traj.int_k_rho}) {
      os << ',';
      put((*col)[r]);
    }
    for (std::size_t i = 0; i < n; ++i) {
      os << ',';
      put(traj.states[r][i]);
    }
    os << '\n';
  }
}

}  // namespace lmspde
