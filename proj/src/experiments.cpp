#include "lmspde/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace lmspde {

namespace {

double fine_dt(const SolverConfig& cfg) { return cfg.noise_dt > 0.0 ? cfg.noise_dt : cfg.dt; }

NoiseIncrementStream stream_for(const SolverConfig& cfg, long path) {
  return NoiseIncrementStream(cfg.seed, static_cast<std::uint64_t>(path), fine_dt(cfg));
}

double v_power(const Field& x, const OperatorSpec& spec) {
  const double v = spec.v_exponent == 2.0 ? energy_norm(x) : v_norm(x, spec.v_exponent);
  return std::pow(v, spec.alpha);
}

double fraction(long bad, long total) { return total > 0 ? static_cast<double>(bad) / total : 0.0; }

// Same matching rule as embedded_distance, computed once per pair of bases.
std::vector<long> embedding_map(const Basis& coarse, const Basis& fine) {
  std::map<std::vector<int>, std::vector<std::size_t>> index;
  for (std::size_t j = 0; j < fine.size(); ++j) {
    auto w = fine.wave(j);
    index[std::vector<int>(w.begin(), w.end())].push_back(j);
  }
  std::vector<bool> used(fine.size(), false);
  std::vector<long> map(coarse.size(), -1);
  for (std::size_t i = 0; i < coarse.size(); ++i) {
    auto w = coarse.wave(i);
    auto it = index.find(std::vector<int>(w.begin(), w.end()));
    if (it == index.end()) continue;
    for (auto j : it->second) {
      if (!used[j]) {
        used[j] = true;
        map[i] = static_cast<long>(j);
        break;
      }
    }
  }
  return map;
}

double mapped_distance(const Field& a, const Field& b, const std::vector<long>& map) {
  CompensatedSum s;
  std::vector<bool> hit(b.size(), false);
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double other = map[i] >= 0 ? b[static_cast<std::size_t>(map[i])] : 0.0;
    if (map[i] >= 0) hit[static_cast<std::size_t>(map[i])] = true;
    s.add((a[i] - other) * (a[i] - other));
  }
  for (std::size_t j = 0; j < b.size(); ++j)
    if (!hit[j]) s.add(b[j] * b[j]);
  return std::sqrt(s.value());
}

bool agree(const MeanSE& a, const MeanSE& b) {
  const double d = std::abs(a.mean - b.mean);
  return d <= 2.0 * std::hypot(a.se, b.se) + 1e-9 * std::max({1.0, std::abs(a.mean), std::abs(b.mean)});
}

// Checks shared by every experiment; the moment exponent only matters for mc_moments.
void validate_ensemble(const ExperimentConfig& cfg, const OperatorSpec& spec) {
  if (cfg.paths < 2) throw std::invalid_argument("experiment: at least 2 paths are needed for a standard error");
  if (cfg.ladder.empty()) throw std::invalid_argument("experiment: empty ladder");
  for (int n : cfg.ladder)
    if (n < 1) throw std::invalid_argument("experiment: ladder entries must be positive");
  validate(spec, cfg.solver.T);
}

}  // namespace

void validate(const ExperimentConfig& cfg, const OperatorSpec& spec) {
  validate_ensemble(cfg, spec);
  if (!(cfg.p >= spec.beta + 2.0)) throw std::invalid_argument("experiment: moment exponent p must satisfy p >= beta + 2");
}

void CompensatedSum::add(double x) {
  const double t = sum_ + x;
  if (std::abs(sum_) >= std::abs(x)) {
    comp_ += (sum_ - t) + x;
  } else {
    comp_ += (x - t) + sum_;
  }
  sum_ = t;
}

MeanSE mean_se(const std::vector<double>& xs) {
  MeanSE r;
  r.count = static_cast<long>(xs.size());
  if (xs.empty()) return r;
  CompensatedSum s;
  for (double x : xs) s.add(x);
  r.mean = s.value() / r.count;
  if (r.count < 2) return r;
  CompensatedSum q;
  for (double x : xs) q.add((x - r.mean) * (x - r.mean));
  r.se = std::sqrt(q.value() / (r.count - 1) / r.count);
  return r;
}

MomentEstimate mc_moments(const ExperimentConfig& cfg, const Problem& prob) {
  const DriftOperator& A = *prob.drift;
  const OperatorSpec& spec = A.spec();
  validate(cfg, spec);
  validate(cfg.solver, A);

  SolverConfig sc = cfg.solver;
  sc.keep_states = false;
  sc.record_every = static_cast<int>(std::max<std::int64_t>(1, sc.steps()));
  const double dt = sc.dt;
  const double p = cfg.p;

  std::vector<double> sup_p, int_v, mixed, final_h2, x0_p;
  long exploded = 0;
  for (long i = 0; i < cfg.paths; ++i) {
    const Field x0 = sc.x0.realize(prob.basis, sc.seed, static_cast<std::uint64_t>(i));
    x0_p.push_back(std::pow(h_norm(x0), p));
    CompensatedSum mix;
    auto obs = [&](std::int64_t, double, const Field& x, const Field&, std::span<const double>) {
      mix.add(std::pow(h_norm(x), p - 2.0) * v_power(x, spec) * dt);
    };
    auto tr = simulate_path(sc, A, *prob.noise, stream_for(sc, i), x0, obs);
    if (tr.exploded) {
      ++exploded;
      continue;
    }
    sup_p.push_back(std::pow(tr.sup_h, p));
    int_v.push_back(tr.int_v_alpha.back());
    mixed.push_back(mix.value());
    const double hT = h_norm(*tr.final_state);
    final_h2.push_back(hT * hT);
  }

  MomentEstimate r;
  r.n = static_cast<int>(prob.basis->size());
  r.paths = cfg.paths;
  r.p = p;
  r.sup_h_p = mean_se(sup_p);
  r.int_v_alpha = mean_se(int_v);
  r.mixed = mean_se(mixed);
  r.final_h2 = mean_se(final_h2);
  OperatorSpec fp = spec;
  fp.f = [f = spec.f, p](double t) { return std::pow(f(t), p / 2.0); };
  r.bound_rhs = mean_se(x0_p).mean + integrate_forcing(fp, sc.T);
  r.ratio = r.bound_rhs > 0.0 ? (r.sup_h_p.mean + r.mixed.mean) / r.bound_rhs : 0.0;
  r.explosion_fraction = fraction(exploded, cfg.paths);
  r.valid = r.explosion_fraction <= 0.5;
  return r;
}

LadderMoments mc_moments_ladder(const ExperimentConfig& cfg, const OperatorParams& op, const NoiseParams& noise) {
  LadderMoments out;
  for (int n : cfg.ladder) {
    OperatorParams o = op;
    o.modes = n;
    out.rungs.push_back(mc_moments(cfg, make_problem(o, noise)));
  }
  for (std::size_t k = 0; k + 1 < out.rungs.size(); ++k) {
    const auto& a = out.rungs[k];
    const auto& b = out.rungs[k + 1];
    if (!agree(a.sup_h_p, b.sup_h_p) || !agree(a.mixed, b.mixed)) out.stable = false;
  }
  return out;
}

double ou_second_moment(const std::vector<double>& sigma, const std::vector<double>& rates, double T) {
  CompensatedSum s;
  for (std::size_t k = 0; k < sigma.size() && k < rates.size(); ++k) {
    const double r = rates[k];
    const double s2 = sigma[k] * sigma[k];
    s.add(r > 0.0 ? s2 * -std::expm1(-2.0 * r * T) / (2.0 * r) : s2 * T);
  }
  return s.value();
}

UniquenessResult uniqueness_decay(const ExperimentConfig& cfg, const Problem& prob, const InitialCondition& x0,
                                  const InitialCondition& y0) {
  const DriftOperator& A = *prob.drift;
  validate_ensemble(cfg, A.spec());
  SolverConfig sc = cfg.solver;
  sc.keep_states = true;
  validate(sc, A);

  std::vector<std::vector<double>> D;  // [path][time]
  UniquenessResult r;
  long exploded = 0;
  for (long i = 0; i < cfg.paths; ++i) {
    const auto path = static_cast<std::uint64_t>(i);
    auto [x, y] = couple_paths(sc, A, *prob.noise, stream_for(sc, i), x0.realize(prob.basis, sc.seed, path),
                               y0.realize(prob.basis, sc.seed, path));
    if (x.exploded || y.exploded) {
      ++exploded;
      continue;
    }
    if (r.times.empty()) r.times = x.times;
    std::vector<double> d(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) {
      const double dist = h_norm(x.states[k] - y.states[k]);
      d[k] = std::exp(-y.int_k_rho[k]) * dist * dist;
    }
    D.push_back(std::move(d));
  }
  r.explosion_fraction = fraction(exploded, cfg.paths);
  if (D.empty()) return r;

  const std::size_t nt = r.times.size();
  r.max_excess = -INFINITY;
  std::vector<double> col(D.size()), diff(D.size());
  for (std::size_t k = 0; k < nt; ++k) {
    for (std::size_t j = 0; j < D.size(); ++j) {
      col[j] = D[j][k];
      diff[j] = D[j][k] - D[j][0];
    }
    r.D.push_back(mean_se(col));
    auto e = mean_se(diff);
    if (e.mean > r.max_excess) {
      r.max_excess = e.mean;
      r.se_at_max = e.se;
      r.argmax = k;
    }
  }
  return r;
}

ConvergenceTable galerkin_convergence(const ExperimentConfig& cfg, const OperatorParams& op, const NoiseParams& noise) {
  std::vector<int> ladder = cfg.ladder;
  std::sort(ladder.begin(), ladder.end());
  ladder.erase(std::unique(ladder.begin(), ladder.end()), ladder.end());
  if (ladder.size() < 2) throw std::invalid_argument("galerkin_convergence: ladder needs at least two cutoffs");

  std::vector<Problem> probs;
  for (int n : ladder) {
    OperatorParams o = op;
    o.modes = n;
    probs.push_back(make_problem(o, noise));
  }
  SolverConfig sc = cfg.solver;
  sc.keep_states = true;
  for (const auto& pr : probs) {
    validate_ensemble(cfg, pr.drift->spec());
    validate(sc, *pr.drift);
  }
  std::vector<std::vector<long>> maps;
  for (std::size_t k = 0; k + 1 < probs.size(); ++k) maps.push_back(embedding_map(*probs[k].basis, *probs[k + 1].basis));

  std::vector<std::vector<double>> sups(probs.size() - 1);
  long exploded = 0;
  for (long i = 0; i < cfg.paths; ++i) {
    const auto path = static_cast<std::uint64_t>(i);
    std::vector<Trajectory> trs;
    bool bad = false;
    for (const auto& pr : probs) {
      trs.push_back(simulate_path(sc, *pr.drift, *pr.noise, stream_for(sc, i), sc.x0.realize(pr.basis, sc.seed, path)));
      bad = bad || trs.back().exploded;
    }
    if (bad) {
      ++exploded;
      continue;
    }
    for (std::size_t k = 0; k + 1 < trs.size(); ++k) {
      double s = 0.0;
      for (std::size_t t = 0; t < trs[k].size(); ++t)
        s = std::max(s, mapped_distance(trs[k].states[t], trs[k + 1].states[t], maps[k]));
      sups[k].push_back(s);
    }
  }

  ConvergenceTable table;
  for (std::size_t k = 0; k + 1 < probs.size(); ++k) {
    table.rows.push_back({ladder[k], ladder[k + 1], mean_se(sups[k])});
  }
  for (std::size_t k = 0; k + 1 < table.rows.size(); ++k)
    if (!(table.rows[k + 1].sup_diff.mean < table.rows[k].sup_diff.mean)) table.decreasing = false;
  table.explosion_fraction = fraction(exploded, cfg.paths);
  return table;
}

EnergyResidual energy_identity_residual(const ExperimentConfig& cfg, const Problem& prob) {
  const DriftOperator& A = *prob.drift;
  const NoiseOperator& B = *prob.noise;
  validate_ensemble(cfg, A.spec());
  SolverConfig sc = cfg.solver;
  sc.keep_states = false;
  validate(sc, A);

  const double dt = sc.dt;
  const bool expo = sc.scheme == Scheme::ExpEuler;
  std::vector<double> decay;
  if (expo) {
    for (double r : A.linear_rates()) decay.push_back(std::expm1(-2.0 * r * dt));
  }
  const std::int64_t N = sc.steps();
  const int every = std::max(1, sc.record_every);

  EnergyResidual out;
  std::vector<std::vector<double>> series;  // [path][record]
  long exploded = 0;
  for (long i = 0; i < cfg.paths; ++i) {
    CompensatedSum cum;
    std::vector<double> rec{0.0};
    std::vector<double> times{0.0};
    auto obs = [&](std::int64_t k, double t, const Field& x, const Field& next, std::span<const double> dW) {
      const double h0 = h_norm(x), h1 = h_norm(next);
      double drift_part;
      if (expo) {
        CompensatedSum lin;
        for (std::size_t j = 0; j < x.size(); ++j) lin.add(decay[j] * x[j] * x[j]);
        drift_part = lin.value() + 2.0 * dt * pairing(A.remainder(t, x), x);
      } else {
        drift_part = 2.0 * dt * pairing(A.evaluate(t, x), x);
      }
      const auto bdw = B.apply(t, x, dW);
      CompensatedSum mart;
      for (std::size_t j = 0; j < x.size(); ++j) mart.add(x[j] * bdw[j]);
      cum.add((h1 * h1 - h0 * h0) - drift_part - B.hs_norm_sq(t, x) * dt - 2.0 * mart.value());
      if ((k + 1) % every == 0 || k + 1 == N) {
        rec.push_back(cum.value());
        times.push_back(static_cast<double>(k + 1) * dt);
      }
    };
    auto tr = simulate_path(sc, A, B, stream_for(sc, i), sc.x0.realize(prob.basis, sc.seed, static_cast<std::uint64_t>(i)),
                            obs);
    if (tr.exploded) {
      ++exploded;
      continue;
    }
    if (out.times.empty()) out.times = times;
    series.push_back(std::move(rec));
  }
  out.explosion_fraction = fraction(exploded, cfg.paths);
  if (series.empty()) return out;

  std::vector<double> col(series.size());
  for (std::size_t k = 0; k < out.times.size(); ++k) {
    for (std::size_t j = 0; j < series.size(); ++j) col[j] = series[j][k];
    out.residual.push_back(mean_se(col));
  }
  out.at_T = out.residual.back();
  for (auto& c : col) c = std::abs(c);
  out.abs_at_T = mean_se(col);
  return out;
}

}  // namespace lmspde
