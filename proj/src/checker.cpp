#include "lmspde/checker.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "lmspde/solver.hpp"

namespace lmspde {

namespace {

constexpr std::uint64_t kPairStream = 0x50414952ULL;
constexpr std::uint64_t kSingleStream = 0x53494e47ULL;
constexpr std::uint64_t kHemiStream = 0x48454d49ULL;
constexpr std::uint64_t kAscentStream = 0x41534345ULL;

double vnorm(const Field& v, double v_exponent) {
  return v_exponent == 2.0 ? energy_norm(v) : v_norm(v, v_exponent);
}

double dual(const DualField& y, double alpha) { return dual_norm(y, alpha); }

// A candidate point of the search: one field (v) or a pair stored as (w, v), u = v + w.
struct Point {
  std::vector<double> w;
  std::vector<double> v;
  Gap gap;
  double rel = -1e300;
  long index = 0;
};

using PointEval = std::function<Gap(const Field& u, const Field& v)>;

struct Search {
  BasisPtr basis;
  bool pair = true;
  PointEval eval;
  long evaluations = 0;

  void score(Point& p) {
    Field v(basis, p.v);
    if (pair) {
      Field u = v + Field(basis, p.w);
      p.gap = eval(u, v);
    } else {
      p.gap = eval(v, v);
    }
    ++evaluations;
    const double r = p.gap.relative();
    p.rel = std::isnan(r) ? 1e300 : r;
  }

  Point draw(const SamplerSpec& s, std::uint64_t stream, long i) {
    Point p;
    p.index = i;
    auto v = sample_field(basis, s, stream, 2 * i, s.scale_lo, s.scale_hi);
    p.v.assign(v.coeffs().begin(), v.coeffs().end());
    if (pair) {
      auto w = sample_field(basis, s, stream, 2 * i + 1, s.diff_lo, s.diff_hi);
      p.w.assign(w.coeffs().begin(), w.coeffs().end());
    }
    score(p);
    return p;
  }

  // Coordinate-perturbation hill climb on the relative gap. Returns early once
  // the relative gap exceeds stop.
  void ascend(Point& p, const SamplerSpec& s, std::uint64_t tag, int restart, double stop) {
    const std::size_t n = basis->size();
    const std::size_t dims = pair ? 2 * n : n;
    std::vector<double> amp(n);
    for (std::size_t i = 0; i < n; ++i) amp[i] = std::pow(basis->eigenvalue(i) / basis->eigenvalue(0), -0.5 * s.decay);
    const double amp_norm = std::sqrt(std::inner_product(amp.begin(), amp.end(), amp.begin(), 0.0));
    double step = 0.5;
    for (int k = 0; k < s.steps && p.rel <= stop; ++k) {
      const std::uint64_t key = mix_key({s.seed, kAscentStream, tag, static_cast<std::uint64_t>(restart),
                                         static_cast<std::uint64_t>(k)});
      const std::size_t c = static_cast<std::size_t>(hash_uniform(key) * dims) % dims;
      const bool in_w = pair && c < n;
      std::vector<double>& vec = in_w ? p.w : p.v;
      const std::size_t i = pair ? c % n : c;
      const double norm = std::sqrt(std::inner_product(vec.begin(), vec.end(), vec.begin(), 0.0));
      const double size = std::max(std::abs(vec[i]), norm * amp[i] / amp_norm);
      const double delta = step * hash_normal(key ^ 0x5bd1e995ULL) * size;
      Point trial = p;
      (in_w ? trial.w : trial.v)[i] += delta;
      score(trial);
      if (trial.rel > p.rel) {
        trial.index = p.index;
        p = std::move(trial);
      } else {
        step *= 0.5;
        if (step < 1e-6) step = 0.5;
      }
    }
  }
};

Witness witness_of(const Point& p, double t) {
  Witness w;
  w.v = p.v;
  if (!p.w.empty()) {
    w.u = p.v;
    for (std::size_t i = 0; i < w.u.size(); ++i) w.u[i] += p.w[i];
  }
  w.t = t;
  return w;
}

bool better(const Point& a, const Point& b) {
  if (a.rel != b.rel) return a.rel > b.rel;
  return a.index < b.index;
}

double noise_C(const Problem& prob) {
  const auto [a0, a1] = prob.noise->growth();
  const double f = prob.drift->spec().f(0.0);
  return std::max(f > 0.0 ? a0 / f : 0.0, a1);
}

Constants constants_of(const Problem& prob, double C) {
  const auto& s = prob.drift->spec();
  Constants c;
  c.alpha = s.alpha;
  c.beta = s.beta;
  c.theta = s.theta;
  c.K = s.K;
  c.C = C;
  c.f = s.f(0.0);
  c.rho = s.rho.describe();
  return c;
}

Gap worse(const Gap& a, const Gap& b) { return a.relative() >= b.relative() ? a : b; }

PointEval evaluator(const Problem& prob, Condition c, double t, double K_override) {
  const auto& A = *prob.drift;
  const auto& B = *prob.noise;
  const auto& s = A.spec();
  const double K = K_override >= 0.0 ? K_override : s.K;
  const double f = s.f(t);
  switch (c) {
    case Condition::H2:
      return [&A, &B, K, &s, t](const Field& u, const Field& v) { return local_mono_gap(A, B, u, v, K, s.rho, t); };
    case Condition::A2:
      return [&A, &B, K, t](const Field& u, const Field& v) { return classical_mono_gap(A, B, u, v, K, t); };
    case Condition::H3:
      return [&A, &B, K, &s, f, t](const Field&, const Field& v) {
        return coercivity_gap(A, B, v, t, s.theta, K, f, s.alpha, s.v_exponent);
      };
    case Condition::H4:
      return [&A, K, &s, f, t](const Field&, const Field& v) {
        return growth_gap(A, v, t, s.alpha, s.beta, K, f, s.v_exponent);
      };
    case Condition::A4:
      return [&A, K, &s, f, t](const Field&, const Field& v) {
        return classical_growth_gap(A, v, t, s.alpha, K, f, s.v_exponent);
      };
    case Condition::C3: {
      const double Cn = noise_C(prob);
      return [&B, &s, f, Cn, t](const Field&, const Field& v) {
        return worse(noise_constraint_gap(B, v, f, Cn, t),
                     rho_constraint_gap(s.rho, v, s.alpha, s.beta, s.rho_growth_C, s.v_exponent));
      };
    }
    case Condition::H1:
      break;
  }
  throw std::invalid_argument("no pointwise evaluator for H1");
}

bool is_pair(Condition c) { return c == Condition::H2 || c == Condition::A2; }

ConditionReport run_search(const Problem& prob, const std::string& name, bool pair, const PointEval& eval,
                           const AuditOptions& opts, std::uint64_t tag) {
  const auto& s = opts.sampler;
  Search search{prob.basis, pair, eval};
  std::vector<Point> pool;
  pool.reserve(s.samples);
  Point best;
  for (long i = 0; i < s.samples; ++i) {
    pool.push_back(search.draw(s, mix_key({tag, pair ? kPairStream : kSingleStream}), i));
    if (i == 0 || better(pool.back(), best)) best = pool.back();
  }
  if (opts.ascent && s.restarts > 0) {
    std::sort(pool.begin(), pool.end(), better);
    const int r = std::min<int>(s.restarts, static_cast<int>(pool.size()));
    for (int k = 0; k < r; ++k) {
      Point p = pool[k];
      search.ascend(p, s, tag, k, 1e300);
      if (better(p, best)) best = p;
    }
  }
  ConditionReport rep;
  rep.condition = name;
  rep.samples = s.samples;
  rep.evaluations = search.evaluations;
  rep.max_gap = best.rel;
  rep.at_max = best.gap;
  rep.passed = best.gap.pass();
  rep.witness = witness_of(best, opts.t);
  return rep;
}

std::uint64_t name_tag(const std::string& name) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : name) h = (h ^ ch) * 1099511628211ULL;
  return h;
}

}  // namespace

std::string to_string(Condition c) {
  switch (c) {
    case Condition::H1: return "H1";
    case Condition::H2: return "H2";
    case Condition::H3: return "H3";
    case Condition::H4: return "H4";
    case Condition::C3: return "C3";
    case Condition::A2: return "A2";
    case Condition::A4: return "A4";
  }
  return "H1";
}

Condition condition_from_string(const std::string& s) {
  for (auto c : {Condition::H1, Condition::H2, Condition::H3, Condition::H4, Condition::C3, Condition::A2,
                 Condition::A4}) {
    if (s == to_string(c)) return c;
  }
  throw std::invalid_argument("unknown condition '" + s + "' (expected H1|H2|H3|H4|C3|A2|A4)");
}

double Gap::scale() const { return std::max({1.0, std::abs(lhs), std::abs(rhs)}); }

Gap local_mono_gap(const DriftOperator& A, const NoiseOperator& B, const Field& u, const Field& v, double K,
                   const Rho& rho, double t, double v_margin) {
  const Field w = u - v;
  const auto& spec = A.spec();
  Gap g;
  g.lhs = 2.0 * pairing(A.evaluate(t, u) - A.evaluate(t, v), w) + B.hs_distance_sq(t, u, v);
  if (v_margin != 0.0) g.lhs += v_margin * std::pow(vnorm(w, spec.v_exponent), 2);
  const double r = rho.is_zero() ? 0.0 : rho(v, spec.v_exponent);
  g.rhs = (K + r) * std::pow(h_norm(w), 2);
  return g;
}

Gap classical_mono_gap(const DriftOperator& A, const NoiseOperator& B, const Field& u, const Field& v, double K,
                       double t) {
  return local_mono_gap(A, B, u, v, K, Rho(), t);
}

Gap coercivity_gap(const DriftOperator& A, const NoiseOperator& B, const Field& v, double t, double theta, double K,
                   double f, double alpha, double v_exponent) {
  Gap g;
  g.lhs = 2.0 * pairing(A.evaluate(t, v), v) + B.hs_norm_sq(t, v) + theta * std::pow(vnorm(v, v_exponent), alpha);
  g.rhs = f + K * std::pow(h_norm(v), 2);
  return g;
}

Gap growth_gap(const DriftOperator& A, const Field& v, double t, double alpha, double beta, double K, double f,
               double v_exponent) {
  Gap g;
  g.lhs = std::pow(dual(A.evaluate(t, v), alpha), alpha / (alpha - 1.0));
  g.rhs = (f + K * std::pow(vnorm(v, v_exponent), alpha)) * (1.0 + std::pow(h_norm(v), beta));
  return g;
}

Gap classical_growth_gap(const DriftOperator& A, const Field& v, double t, double alpha, double K, double f,
                         double v_exponent) {
  Gap g;
  g.lhs = dual(A.evaluate(t, v), alpha);
  g.rhs = std::pow(f, (alpha - 1.0) / alpha) + K * std::pow(vnorm(v, v_exponent), alpha - 1.0);
  return g;
}

Gap noise_constraint_gap(const NoiseOperator& B, const Field& v, double f, double C, double t) {
  return {B.hs_norm_sq(t, v), C * (f + std::pow(h_norm(v), 2))};
}

Gap rho_constraint_gap(const Rho& rho, const Field& v, double alpha, double beta, double C, double v_exponent) {
  return {rho(v, v_exponent),
          C * (1.0 + std::pow(vnorm(v, v_exponent), alpha)) * (1.0 + std::pow(h_norm(v), beta))};
}

double HemiScan::ratio() const {
  if (jumps.size() < 2) return 0.0;
  const double prev = jumps[jumps.size() - 2];
  const double last = jumps.back();
  if (prev <= 0.0) return last <= 0.0 ? 0.0 : 1.0;
  return last / prev;
}

HemiScan hemicontinuity_scan(const DriftOperator& A, const Field& v1, const Field& v2, const Field& v, double t,
                             std::vector<int> levels) {
  HemiScan scan;
  for (int L : levels) {
    const int m = (1 << L) + 1;
    double prev = 0.0, jump = 0.0, mag = 0.0;
    for (int i = 0; i < m; ++i) {
      const double s = -1.0 + 2.0 * i / (m - 1);
      Field x = v1;
      x += s * v2;
      const double phi = pairing(A.evaluate(t, x), v);
      mag = std::max(mag, std::abs(phi));
      if (i > 0) jump = std::max(jump, std::abs(phi - prev));
      prev = phi;
    }
    // Rounding noise in a constant φ is not a jump.
    if (jump <= 1e-13 * std::max(1.0, mag)) jump = 0.0;
    scan.points.push_back(m);
    scan.jumps.push_back(jump);
  }
  return scan;
}

void SamplerSpec::validate() const {
  if (!(decay >= 1.0)) throw std::invalid_argument("sampler: decay must be >= 1");
  if (!(scale_lo > 0.0) || !(scale_hi / scale_lo >= 1e3 * (1 - 1e-12))) {
    throw std::invalid_argument("sampler: scale range must cover at least three decades");
  }
  if (!(diff_lo > 0.0) || !(diff_hi > diff_lo)) throw std::invalid_argument("sampler: bad difference range");
  if (samples < 1 || restarts < 0 || steps < 0) throw std::invalid_argument("sampler: counts must be positive");
}

Field sample_field(const BasisPtr& basis, const SamplerSpec& spec, std::uint64_t stream, std::uint64_t index,
                   double lo, double hi) {
  const std::size_t n = basis->size();
  std::vector<double> c(n);
  double norm = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double amp = std::pow(basis->eigenvalue(i) / basis->eigenvalue(0), -0.5 * spec.decay);
    c[i] = amp * hash_normal(mix_key({spec.seed, stream, index, i}));
    norm += c[i] * c[i];
  }
  norm = std::sqrt(norm);
  const double u = hash_uniform(mix_key({spec.seed, stream, index, ~0ULL}));
  const double scale = std::exp(std::log(lo) + u * (std::log(hi) - std::log(lo)));
  for (auto& x : c) x *= scale / norm;
  return Field(basis, std::move(c));
}

std::vector<MonoVariant> catalog_variants(const Problem& prob) {
  std::vector<MonoVariant> out;
  const auto drift = prob.drift;
  const std::string id = drift->id();
  if (id == "semilinear") {
    const auto* sl = static_cast<const SemilinearDrift*>(drift.get());
    const auto f = sl->transport();
    const int d = prob.basis->dim();
    MonoVariant var;
    var.name = "transport-bound";
    var.op = [f](double, const Field& u) { return semilinear_drift(u, f, nullptr); };
    var.with_noise = false;
    var.v_margin = 1.0;
    var.K = semilinear_monotonicity_constant(f, 0.0, d);
    var.rho = Rho(0.0, {{RhoTerm::Norm::V, 2.0, 2.0, var.K}});
    out.push_back(var);

    std::vector<ScalarFunction> constant(d);
    for (int a = 0; a < d; ++a) {
      const double c = 0.5;
      constant[a] = {[c](double) { return c; }, c, 0.0, c, "const"};
    }
    MonoVariant cv;
    cv.name = "constant-transport";
    cv.op = [constant](double, const Field& u) { return semilinear_drift(u, constant, nullptr); };
    cv.with_noise = false;
    cv.v_margin = 1.0;
    cv.K = semilinear_monotonicity_constant(constant, 0.0, d);
    out.push_back(cv);
  } else if (id == "burgers") {
    MonoVariant var;
    var.name = "burgers-margin";
    var.op = [](double, const Field& u) { return burgers_drift(u); };
    var.with_noise = false;
    var.v_margin = 1.5;
    var.rho = Rho(0.0, {{RhoTerm::Norm::Lq, 4.0, 4.0, 2.0 * burgers_monotonicity_constant()}});
    out.push_back(var);
  } else if (id == "nse2d") {
    const double nu = prob.op.nu;
    const auto* ns = static_cast<const NavierStokes2dDrift*>(drift.get());
    NSEParams params = ns->params();
    auto op = [params](double t, const Field& u) { return nse_drift(t, u, params); };
    MonoVariant ex;
    ex.name = "nse-margin-32";
    ex.op = op;
    ex.with_noise = false;
    ex.v_margin = nu / 2.0;
    ex.rho = Rho(0.0, {{RhoTerm::Norm::Lq, 4.0, 4.0, 32.0 / (nu * nu * nu)}});
    out.push_back(ex);
    MonoVariant rem = ex;
    rem.name = "nse-margin-16";
    rem.K = nu;
    rem.rho = Rho(0.0, {{RhoTerm::Norm::Lq, 4.0, 4.0, 16.0 / (nu * nu * nu)}});
    out.push_back(rem);
  } else if (id == "tamed-nse3d-static") {
    const auto* tm = static_cast<const TamedNavierStokes3dDrift*>(drift.get());
    const double nu = tm->nu();
    MonoVariant var;
    var.name = "nse3d-convection";
    var.op = [](double, const Field& u) { return nse_nonlinearity(u); };
    var.pair_coef = 1.0;
    var.with_noise = false;
    var.v_margin = -nu / 2.0;
    var.rho = Rho(0.0, {{RhoTerm::Norm::Lq, 4.0, 8.0, std::pow(2.0, 12) / std::pow(nu, 7)}});
    out.push_back(var);
  }
  return out;
}

Gap variant_gap(const MonoVariant& var, const NoiseOperator& B, const Field& u, const Field& v, double t) {
  const Field w = u - v;
  Gap g;
  g.lhs = var.pair_coef * pairing(var.op(t, u) - var.op(t, v), w);
  if (var.with_noise) g.lhs += B.hs_distance_sq(t, u, v);
  if (var.v_margin != 0.0) g.lhs += var.v_margin * std::pow(energy_norm(w), 2);
  const double r = var.rho.is_zero() ? 0.0 : var.rho(v);
  g.rhs = (var.K + r) * std::pow(h_norm(w), 2);
  return g;
}

std::vector<Condition> default_conditions(const Problem& prob) {
  if (prob.drift->id() == "tamed-nse3d-static") return {Condition::H1, Condition::H2, Condition::H3};
  return {Condition::H1, Condition::H2, Condition::H3, Condition::H4, Condition::C3, Condition::A2, Condition::A4};
}

bool expected_to_hold(const Problem& prob, Condition c) {
  const std::string id = prob.drift->id();
  const bool globally_monotone = id == "heat" || id == "plaplace";
  if (c == Condition::A2 || c == Condition::A4) return globally_monotone;
  if (id == "tamed-nse3d-static") return c == Condition::H1 || c == Condition::H2 || c == Condition::H3;
  return true;
}

ConditionReport audit_condition(const Problem& prob, Condition c, const AuditOptions& opts) {
  opts.sampler.validate();
  const auto& spec = prob.drift->spec();
  ConditionReport rep;
  if (c == Condition::H1) {
    // Each scan costs hundreds of drift evaluations; a smaller set of
    // moderate-size lines is used.
    const auto& s = opts.sampler;
    const long count = std::min<long>(s.samples, 64);
    const double hi = std::min(s.scale_hi, 10.0);
    const double lo = std::min(s.scale_lo, hi / 1e3);
    const std::uint64_t stream = mix_key({kHemiStream, name_tag("H1")});
    double worst = -1e300;
    Gap worst_gap;
    long evals = 0;
    for (long i = 0; i < count; ++i) {
      auto v1 = sample_field(prob.basis, s, stream, 3 * i, lo, hi);
      auto v2 = sample_field(prob.basis, s, stream, 3 * i + 1, lo, hi);
      auto v = sample_field(prob.basis, s, stream, 3 * i + 2, lo, hi);
      auto scan = hemicontinuity_scan(*prob.drift, v1, v2, v, opts.t);
      for (int p : scan.points) evals += p;
      Gap g{scan.ratio(), kHemiRatio};
      if (scan.jumps.back() == 0.0) g.lhs = -1.0;
      if (g.relative() > worst) {
        worst = g.relative();
        worst_gap = g;
        rep.witness.u.assign(v1.coeffs().begin(), v1.coeffs().end());
        rep.witness.v.assign(v2.coeffs().begin(), v2.coeffs().end());
        rep.witness.w.assign(v.coeffs().begin(), v.coeffs().end());
        rep.witness.t = opts.t;
      }
    }
    rep.condition = "H1";
    rep.samples = count;
    rep.evaluations = evals;
    rep.max_gap = worst;
    rep.at_max = worst_gap;
    rep.passed = worst_gap.pass();
    rep.note = "jump ratio under grid halving; continuity evidence, not proof";
  } else {
    rep = run_search(prob, to_string(c), is_pair(c), evaluator(prob, c, opts.t, -1.0), opts, name_tag(to_string(c)));
    if (c == Condition::H4 && spec.alpha != 2.0) {
      rep.note = "dual norm is a probe lower bound for alpha != 2; violations may be under-reported";
    }
    if (c == Condition::C3) rep.note = "worse of the noise and rho growth constraints";
  }
  rep.expected_pass = expected_to_hold(prob, c);
  rep.constants = constants_of(prob, c == Condition::C3 ? std::max(noise_C(prob), spec.rho_growth_C) : 0.0);
  return rep;
}

ConditionReport audit_variant(const Problem& prob, const MonoVariant& var, const AuditOptions& opts) {
  opts.sampler.validate();
  const NoiseOperator& B = *prob.noise;
  const double t = opts.t;
  auto rep = run_search(prob, var.name, true,
                        [&var, &B, t](const Field& u, const Field& v) { return variant_gap(var, B, u, v, t); }, opts,
                        name_tag(var.name));
  rep.expected_pass = true;
  rep.constants = constants_of(prob, 0.0);
  rep.constants.K = var.K;
  rep.constants.rho = var.rho.describe();
  rep.note = "margin " + std::to_string(var.v_margin) + " on |u-v|_V^2";
  return rep;
}

std::vector<ConditionReport> audit(const Problem& prob, const std::vector<Condition>& conditions,
                                   const AuditOptions& opts) {
  std::vector<ConditionReport> out;
  for (auto c : conditions) out.push_back(audit_condition(prob, c, opts));
  if (opts.variants && !conditions.empty()) {
    for (const auto& var : catalog_variants(prob)) out.push_back(audit_variant(prob, var, opts));
  }
  return out;
}

Gap reevaluate(const Problem& prob, Condition c, const Witness& w, double K_override) {
  if (c == Condition::H1) {
    auto scan = hemicontinuity_scan(*prob.drift, Field(prob.basis, w.u), Field(prob.basis, w.v),
                                    Field(prob.basis, w.w), w.t);
    Gap g{scan.ratio(), kHemiRatio};
    if (scan.jumps.back() == 0.0) g.lhs = -1.0;
    return g;
  }
  auto eval = evaluator(prob, c, w.t, K_override);
  Field v(prob.basis, w.v);
  if (is_pair(c)) return eval(Field(prob.basis, w.u), v);
  return eval(v, v);
}

SearchResult counterexample_search(const Problem& prob, Condition c, double K, long budget, const SamplerSpec& sampler,
                                   double threshold) {
  if (c != Condition::A2 && c != Condition::A4) {
    throw std::invalid_argument("counterexample search supports A2 and A4 only");
  }
  sampler.validate();
  SearchResult res;
  res.condition = c;
  res.K = K;
  Search search{prob.basis, is_pair(c), evaluator(prob, c, 0.0, K)};
  const std::uint64_t tag = mix_key({name_tag("counterexample"), name_tag(to_string(c))});
  const std::uint64_t stream = mix_key({tag, search.pair ? kPairStream : kSingleStream});

  auto finish = [&](const Point& p) {
    res.evaluations = search.evaluations;
    res.best_relative = p.rel;
    res.at_best = p.gap;
    res.witness = witness_of(p, 0.0);
    res.found = p.rel > threshold;
    return res;
  };

  // Random phase: at most half the budget, leaving room for the ascent.
  const long random_budget = std::max<long>(1, std::min<long>(sampler.samples, budget / 2));
  std::vector<Point> pool;
  Point best;
  for (long i = 0; i < random_budget; ++i) {
    pool.push_back(search.draw(sampler, stream, i));
    if (i == 0 || better(pool.back(), best)) best = pool.back();
    if (best.rel > threshold) return finish(best);
  }
  std::sort(pool.begin(), pool.end(), better);
  const int restarts = std::min<int>(sampler.restarts, static_cast<int>(pool.size()));
  for (int k = 0; k < restarts && search.evaluations < budget; ++k) {
    Point p = pool[k];
    search.ascend(p, sampler, tag, k, threshold);
    if (better(p, best)) best = p;
    if (best.rel > threshold) break;
  }
  return finish(best);
}

}  // namespace lmspde
