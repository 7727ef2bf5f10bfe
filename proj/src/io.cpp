#include "lmspde/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

namespace lmspde {

using nlohmann::json;

namespace {

// Strict reader for one JSON object: typed getters record the keys they
// consume, finish() rejects whatever is left.
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail(path_.empty() ? "top level" : path_, "expected an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  void number(const std::string& key, double& out) {
    if (auto v = take(key)) {
      if (!v->is_number()) fail(name(key), "expected a number");
      out = v->get<double>();
    }
  }
  void integer(const std::string& key, int& out) {
    if (auto v = take(key)) {
      if (!v->is_number_integer()) fail(name(key), "expected an integer");
      out = v->get<int>();
    }
  }
  void integer(const std::string& key, long& out) {
    if (auto v = take(key)) {
      if (!v->is_number_integer()) fail(name(key), "expected an integer");
      out = v->get<long>();
    }
  }
  void unsigned_integer(const std::string& key, std::uint64_t& out) {
    if (auto v = take(key)) {
      if (!v->is_number_unsigned()) fail(name(key), "expected a nonnegative integer");
      out = v->get<std::uint64_t>();
    }
  }
  void boolean(const std::string& key, bool& out) {
    if (auto v = take(key)) {
      if (!v->is_boolean()) fail(name(key), "expected true or false");
      out = v->get<bool>();
    }
  }
  void string(const std::string& key, std::string& out) {
    if (auto v = take(key)) {
      if (!v->is_string()) fail(name(key), "expected a string");
      out = v->get<std::string>();
    }
  }
  template <class T>
  void list(const std::string& key, std::vector<T>& out) {
    if (auto v = take(key)) {
      if (!v->is_array()) fail(name(key), "expected an array");
      out.clear();
      for (const auto& e : *v) {
        if constexpr (std::is_same_v<T, std::string>) {
          if (!e.is_string()) fail(name(key), "expected an array of strings");
        } else if constexpr (std::is_integral_v<T>) {
          if (!e.is_number_integer()) fail(name(key), "expected an array of integers");
        } else {
          if (!e.is_number()) fail(name(key), "expected an array of numbers");
        }
        out.push_back(e.get<T>());
      }
    }
  }
  std::optional<Reader> object(const std::string& key) {
    if (auto v = take(key)) return Reader(*v, name(key));
    return std::nullopt;
  }
  void require(const std::string& key) const {
    if (!j_.contains(key)) fail(name(key), "required field is missing");
  }
  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) fail(name(it.key()), "unknown key");
  }

  [[noreturn]] static void fail(const std::string& field, const std::string& what) {
    throw ConfigError("config: " + field + ": " + what);
  }
  std::string name(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

 private:
  const json* take(const std::string& key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

InitialCondition::Kind kind_from_string(const std::string& s, const std::string& field) {
  for (auto k : {InitialCondition::Kind::Zero, InitialCondition::Kind::Mode, InitialCondition::Kind::Coefficients,
                 InitialCondition::Kind::Random})
    if (to_string(k) == s) return k;
  Reader::fail(field, "unknown initial condition kind '" + s + "'");
}

void read_initial(Reader& r, InitialCondition& ic) {
  std::string kind = to_string(ic.kind);
  r.string("kind", kind);
  ic.kind = kind_from_string(kind, r.name("kind"));
  long mode = static_cast<long>(ic.mode);
  r.integer("mode", mode);
  if (mode < 0) Reader::fail(r.name("mode"), "must be nonnegative");
  ic.mode = static_cast<std::size_t>(mode);
  r.number("amplitude", ic.amplitude);
  r.number("decay", ic.decay);
  r.list("coeffs", ic.coeffs);
  r.finish();
}

json initial_json(const InitialCondition& ic) {
  return {{"kind", to_string(ic.kind)},
          {"mode", ic.mode},
          {"amplitude", ic.amplitude},
          {"decay", ic.decay},
          {"coeffs", ic.coeffs}};
}

int line_of(const std::string& text, std::size_t byte, int& column) {
  int line = 1;
  column = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      column = 1;
    } else {
      ++column;
    }
  }
  return line;
}

}  // namespace

ExperimentConfig RunConfig::experiment() const {
  ExperimentConfig e;
  e.solver = solver;
  e.solver.seed = seed;
  e.paths = paths;
  e.p = p;
  e.ladder = ladder;
  return e;
}

AuditOptions RunConfig::audit_options() const {
  AuditOptions o;
  o.sampler = sampler;
  o.sampler.seed = seed;
  o.t = audit_t;
  o.ascent = ascent;
  o.variants = variants;
  return o;
}

int default_modes(const std::string& id, int dim) {
  if (id == "nse2d") return 3;
  if (id == "tamed-nse3d-static") return 1;
  if (id == "semilinear" && dim == 2) return 4;
  return 16;
}

RunConfig parse_run_config(const std::string& text, bool require_solver) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    int col = 0;
    const int line = line_of(text, e.byte > 0 ? e.byte - 1 : 0, col);
    throw ConfigError("config:" + std::to_string(line) + ":" + std::to_string(col) + ": syntax error: " + e.what());
  }
  RunConfig c;
  Reader top(j, "");
  bool modes_given = false;
  if (auto r = top.object("operator")) {
    r->string("id", c.op.id);
    modes_given = r->has("modes");
    r->integer("modes", c.op.modes);
    r->integer("grid", c.op.grid);
    r->number("nu", c.op.nu);
    r->number("p", c.op.p);
    r->integer("dim", c.op.dim);
    r->number("taming_N", c.op.taming_N);
    r->number("forcing", c.op.forcing);
    r->finish();
  }
  if (!modes_given) c.op.modes = default_modes(c.op.id, c.op.dim);
  if (auto r = top.object("noise")) {
    r->string("type", c.noise.type);
    r->integer("modes", c.noise.modes);
    r->number("amplitude", c.noise.amplitude);
    r->number("decay", c.noise.decay);
    r->list("sigma", c.noise.sigma);
    r->string("b", c.noise.b);
    r->finish();
  }
  auto solver = top.object("solver");
  if (!solver && require_solver) Reader::fail("solver", "required field is missing");
  if (solver) {
    solver->require("T");
    solver->require("dt");
    solver->number("T", c.solver.T);
    solver->number("dt", c.solver.dt);
    std::string scheme = to_string(c.solver.scheme);
    solver->string("scheme", scheme);
    try {
      c.solver.scheme = scheme_from_string(scheme);
    } catch (const std::exception&) {
      Reader::fail("solver.scheme", "unknown scheme '" + scheme + "'");
    }
    solver->number("noise_dt", c.solver.noise_dt);
    solver->integer("record_every", c.solver.record_every);
    solver->boolean("stability_guard", c.solver.stability_guard);
    solver->number("blowup", c.solver.blowup);
    if (auto x0 = solver->object("x0")) read_initial(*x0, c.solver.x0);
    solver->finish();
  }
  if (auto r = top.object("experiment")) {
    r->integer("paths", c.paths);
    r->number("p", c.p);
    r->list("ladder", c.ladder);
    r->number("allowance_C", c.allowance_C);
    if (auto y0 = r->object("y0")) read_initial(*y0, c.y0);
    r->finish();
  }
  if (auto r = top.object("sampler")) {
    r->number("decay", c.sampler.decay);
    r->number("scale_lo", c.sampler.scale_lo);
    r->number("scale_hi", c.sampler.scale_hi);
    r->number("diff_lo", c.sampler.diff_lo);
    r->number("diff_hi", c.sampler.diff_hi);
    r->integer("samples", c.sampler.samples);
    r->integer("restarts", c.sampler.restarts);
    r->integer("steps", c.sampler.steps);
    r->finish();
  }
  if (auto r = top.object("audit")) {
    r->list("conditions", c.conditions);
    r->number("t", c.audit_t);
    r->boolean("ascent", c.ascent);
    r->boolean("variants", c.variants);
    r->finish();
  }
  if (auto r = top.object("counterexample")) {
    auto& ce = c.counterexample;
    r->string("condition", ce.condition);
    r->list("K", ce.K);
    r->integer("budget", ce.budget);
    r->number("threshold", ce.threshold);
    r->number("scale_lo", ce.scale_lo);
    r->number("scale_hi", ce.scale_hi);
    r->number("diff_lo", ce.diff_lo);
    r->number("diff_hi", ce.diff_hi);
    r->integer("samples", ce.samples);
    r->finish();
  }
  top.unsigned_integer("seed", c.seed);
  if (auto r = top.object("output")) {
    r->string("dir", c.out_dir);
    r->finish();
  }
  std::uint64_t version = kSchemaVersion;
  top.unsigned_integer("schema_version", version);
  if (version != kSchemaVersion) Reader::fail("schema_version", "unsupported version " + std::to_string(version));
  top.finish();
  return c;
}

RunConfig load_run_config(const std::string& path, bool require_solver) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str(), require_solver);
}

json to_json(const RunConfig& c) {
  const auto& ce = c.counterexample;
  return {
      {"schema_version", kSchemaVersion},
      {"operator",
       {{"id", c.op.id},
        {"modes", c.op.modes},
        {"grid", c.op.grid},
        {"nu", c.op.nu},
        {"p", c.op.p},
        {"dim", c.op.dim},
        {"taming_N", c.op.taming_N},
        {"forcing", c.op.forcing}}},
      {"noise",
       {{"type", c.noise.type},
        {"modes", c.noise.modes},
        {"amplitude", c.noise.amplitude},
        {"decay", c.noise.decay},
        {"sigma", c.noise.sigma},
        {"b", c.noise.b}}},
      {"solver",
       {{"T", c.solver.T},
        {"dt", c.solver.dt},
        {"scheme", to_string(c.solver.scheme)},
        {"noise_dt", c.solver.noise_dt},
        {"record_every", c.solver.record_every},
        {"stability_guard", c.solver.stability_guard},
        {"blowup", c.solver.blowup},
        {"x0", initial_json(c.solver.x0)}}},
      {"experiment",
       {{"paths", c.paths},
        {"p", c.p},
        {"ladder", c.ladder},
        {"allowance_C", c.allowance_C},
        {"y0", initial_json(c.y0)}}},
      {"sampler",
       {{"decay", c.sampler.decay},
        {"scale_lo", c.sampler.scale_lo},
        {"scale_hi", c.sampler.scale_hi},
        {"diff_lo", c.sampler.diff_lo},
        {"diff_hi", c.sampler.diff_hi},
        {"samples", c.sampler.samples},
        {"restarts", c.sampler.restarts},
        {"steps", c.sampler.steps}}},
      {"audit", {{"conditions", c.conditions}, {"t", c.audit_t}, {"ascent", c.ascent}, {"variants", c.variants}}},
      {"counterexample",
       {{"condition", ce.condition},
        {"K", ce.K},
        {"budget", ce.budget},
        {"threshold", ce.threshold},
        {"scale_lo", ce.scale_lo},
        {"scale_hi", ce.scale_hi},
        {"diff_lo", ce.diff_lo},
        {"diff_hi", ce.diff_hi},
        {"samples", ce.samples}}},
      {"seed", c.seed},
      {"output", {{"dir", c.out_dir}}},
  };
}

json to_json(const ConditionReport& r) {
  return {{"condition", r.condition},
          {"expected_pass", r.expected_pass},
          {"passed", r.passed},
          {"samples", r.samples},
          {"evaluations", r.evaluations},
          {"max_gap", r.max_gap},
          {"lhs", r.at_max.lhs},
          {"rhs", r.at_max.rhs},
          {"witness", {{"u", r.witness.u}, {"v", r.witness.v}, {"w", r.witness.w}, {"t", r.witness.t}}},
          {"constants",
           {{"alpha", r.constants.alpha},
            {"beta", r.constants.beta},
            {"theta", r.constants.theta},
            {"K", r.constants.K},
            {"C", r.constants.C},
            {"f", r.constants.f},
            {"rho", r.constants.rho}}},
          {"note", r.note}};
}

ConditionReport report_from_json(const json& j) {
  ConditionReport r;
  r.condition = j.at("condition").get<std::string>();
  r.expected_pass = j.at("expected_pass").get<bool>();
  r.passed = j.at("passed").get<bool>();
  r.samples = j.at("samples").get<long>();
  r.evaluations = j.at("evaluations").get<long>();
  r.max_gap = j.at("max_gap").get<double>();
  r.at_max.lhs = j.at("lhs").get<double>();
  r.at_max.rhs = j.at("rhs").get<double>();
  const auto& w = j.at("witness");
  r.witness.u = w.at("u").get<std::vector<double>>();
  r.witness.v = w.at("v").get<std::vector<double>>();
  r.witness.w = w.at("w").get<std::vector<double>>();
  r.witness.t = w.at("t").get<double>();
  const auto& c = j.at("constants");
  r.constants.alpha = c.at("alpha").get<double>();
  r.constants.beta = c.at("beta").get<double>();
  r.constants.theta = c.at("theta").get<double>();
  r.constants.K = c.at("K").get<double>();
  r.constants.C = c.at("C").get<double>();
  r.constants.f = c.at("f").get<double>();
  r.constants.rho = c.at("rho").get<std::string>();
  r.note = j.at("note").get<std::string>();
  return r;
}

bool operator==(const ConditionReport& a, const ConditionReport& b) {
  auto same_c = [](const Constants& x, const Constants& y) {
    return x.alpha == y.alpha && x.beta == y.beta && x.theta == y.theta && x.K == y.K && x.C == y.C && x.f == y.f &&
           x.rho == y.rho;
  };
  return a.condition == b.condition && a.expected_pass == b.expected_pass && a.passed == b.passed &&
         a.samples == b.samples && a.evaluations == b.evaluations && a.max_gap == b.max_gap &&
         a.at_max.lhs == b.at_max.lhs && a.at_max.rhs == b.at_max.rhs && a.witness.u == b.witness.u &&
         a.witness.v == b.witness.v && a.witness.w == b.witness.w && a.witness.t == b.witness.t &&
         same_c(a.constants, b.constants) && a.note == b.note;
}

std::string format_report_text(const std::string& op_id, const std::vector<ConditionReport>& reports) {
  std::ostringstream os;
  os << "operator " << op_id << "\n";
  for (const auto& r : reports) {
    char line[256];
    std::snprintf(line, sizeof line, "  %-20s %-4s (expected %s)  samples %ld  evaluations %ld  max relative gap %.3e",
                  r.condition.c_str(), r.passed ? "pass" : "FAIL", r.expected_pass ? "pass" : "fail", r.samples,
                  r.evaluations, r.max_gap);
    os << line << "\n";
    if (!r.note.empty()) os << "    " << r.note << "\n";
  }
  os << "A pass means no violation was found within the sample and ascent budget.\n";
  return os.str();
}

std::string fmt_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string to_csv(const Table& t) {
  std::string s;
  auto row = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) s += ',';
      s += cells[i];
    }
    s += '\n';
  };
  row(t.header);
  for (const auto& r : t.rows) row(r);
  return s;
}

void write_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  std::error_code ec;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path(), ec);
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + path + "'");
    out << content;
    out.flush();
    if (!out) throw IoError("cannot write '" + path + "'");
  }
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError("cannot move output into place at '" + path + "'");
  }
}

std::string dump_json(const json& j) { return j.dump(2) + "\n"; }

// --- dispatcher -------------------------------------------------------------

const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> s{"simulate", "audit", "moments", "uniqueness", "converge", "counterexample",
                                          "residual"};
  return s;
}

namespace {

struct Outcome {
  bool pass = true;
  // More than half of the paths exploded: recorded as data, not a failure.
  bool invalid = false;
  Table table;
  std::optional<std::string> raw_csv;
  json summary;
  std::string text;  // human-readable report, also printed unless quiet
};

std::string col(double x) { return fmt_double(x); }
std::string col(long x) { return std::to_string(x); }
std::string col(int x) { return std::to_string(x); }
std::string col(bool x) { return x ? "1" : "0"; }

json mse(const MeanSE& m) { return {{"mean", m.mean}, {"se", m.se}, {"count", m.count}}; }

double fine_step(const SolverConfig& s) { return s.noise_dt > 0.0 ? s.noise_dt : s.dt; }

Outcome do_simulate(const RunConfig& c, const Problem& prob) {
  SolverConfig sc = c.solver;
  sc.seed = c.seed;
  auto tr = simulate_path(sc, *prob.drift, *prob.noise, NoiseIncrementStream(c.seed, 0, fine_step(sc)),
                          sc.x0.realize(prob.basis, c.seed, 0));
  Outcome o;
  std::ostringstream csv;
  write_trajectory_csv(csv, tr, true);
  o.raw_csv = csv.str();
  const auto fc = tr.final_state->coeffs();
  o.summary = {{"steps", sc.steps()},
               {"recorded", tr.size()},
               {"exploded", tr.exploded},
               {"explosion_time", tr.explosion_time},
               {"sup_h", tr.sup_h},
               {"final_time", tr.times.back()},
               {"final_h", tr.h_norm.back()},
               {"final_coefficients", std::vector<double>(fc.begin(), fc.end())}};
  return o;
}

std::vector<Condition> parse_conditions(const std::vector<std::string>& names) {
  std::vector<Condition> out;
  for (const auto& n : names) {
    try {
      out.push_back(condition_from_string(n));
    } catch (const std::exception&) {
      throw ConfigError("config: audit.conditions: unknown condition '" + n + "'");
    }
  }
  return out;
}

Outcome do_audit(const RunConfig& c, const Problem& prob) {
  auto conds = c.conditions.empty() ? default_conditions(prob) : parse_conditions(c.conditions);
  auto reports = audit(prob, conds, c.audit_options());
  Outcome o;
  o.table.header = {"condition", "expected_pass", "passed", "samples", "evaluations", "max_relative_gap", "lhs", "rhs"};
  json arr = json::array();
  for (const auto& r : reports) {
    o.table.rows.push_back({r.condition, col(r.expected_pass), col(r.passed), col(r.samples), col(r.evaluations),
                            col(r.max_gap), col(r.at_max.lhs), col(r.at_max.rhs)});
    arr.push_back(to_json(r));
    if (r.expected_pass && !r.passed) o.pass = false;
  }
  o.summary = {{"reports", arr}, {"tolerance", kGapTolerance}};
  o.text = format_report_text(prob.drift->id(), reports);
  return o;
}

Outcome do_moments(const RunConfig& c) {
  auto lad = mc_moments_ladder(c.experiment(), c.op, c.noise);
  Outcome o;
  o.table.header = {"n",      "paths",        "p",          "sup_h_p",     "sup_h_p_se", "int_v_alpha", "int_v_alpha_se",
                    "mixed",  "mixed_se",     "final_h2",   "final_h2_se", "bound_rhs",  "ratio",       "explosion_fraction",
                    "valid"};
  json rungs = json::array();
  // Closed-form second moment when the problem is the linear OU benchmark.
  const bool ou = c.op.id == "heat" && c.noise.type == "additive" && c.solver.x0.kind == InitialCondition::Kind::Zero;
  bool ou_ok = true;
  for (const auto& m : lad.rungs) {
    o.invalid = o.invalid || !m.valid;
    o.table.rows.push_back({col(m.n), col(m.paths), col(m.p), col(m.sup_h_p.mean), col(m.sup_h_p.se),
                            col(m.int_v_alpha.mean), col(m.int_v_alpha.se), col(m.mixed.mean), col(m.mixed.se),
                            col(m.final_h2.mean), col(m.final_h2.se), col(m.bound_rhs), col(m.ratio),
                            col(m.explosion_fraction), col(m.valid)});
    json r = {{"n", m.n},
              {"sup_h_p", mse(m.sup_h_p)},
              {"int_v_alpha", mse(m.int_v_alpha)},
              {"mixed", mse(m.mixed)},
              {"final_h2", mse(m.final_h2)},
              {"bound_rhs", m.bound_rhs},
              {"ratio", m.ratio},
              {"explosion_fraction", m.explosion_fraction},
              {"valid", m.valid}};
    if (ou) {
      OperatorParams op = c.op;
      op.modes = m.n;
      auto prob = make_problem(op, c.noise);
      const auto& sigma = dynamic_cast<const AdditiveNoise&>(*prob.noise).sigma();
      const double exact = ou_second_moment(sigma, prob.drift->linear_rates(), c.solver.T);
      const bool ok = std::abs(m.final_h2.mean - exact) <= 3.0 * m.final_h2.se;
      ou_ok = ou_ok && ok;
      r["ou_reference"] = {{"exact", exact}, {"within_3se", ok}};
    }
    rungs.push_back(r);
  }
  o.pass = lad.stable && ou_ok;
  o.summary = {{"rungs", rungs}, {"stable", lad.stable}};
  if (ou) o.summary["ou_within_3se"] = ou_ok;
  return o;
}

// Runs at dt and dt/2 on one fine noise grid.
std::pair<SolverConfig, SolverConfig> halving_pair(const SolverConfig& s) {
  SolverConfig a = s, b = s;
  b.dt = s.dt / 2.0;
  const double fine = s.noise_dt > 0.0 ? s.noise_dt : b.dt;
  a.noise_dt = b.noise_dt = fine;
  if (b.record_every > 1) b.record_every *= 2;
  return {a, b};
}

Outcome do_uniqueness(const RunConfig& c, const Problem& prob) {
  auto [a, b] = halving_pair(c.solver);
  Outcome o;
  o.table.header = {"dt", "t", "mean_D", "se_D"};
  json runs = json::array();
  for (const auto& sc : {a, b}) {
    ExperimentConfig e = c.experiment();
    e.solver = sc;
    e.solver.seed = c.seed;
    auto r = uniqueness_decay(e, prob, c.solver.x0, c.y0);
    for (std::size_t k = 0; k < r.times.size(); ++k)
      o.table.rows.push_back({col(sc.dt), col(r.times[k]), col(r.D[k].mean), col(r.D[k].se)});
    const double allowance = c.allowance_C * sc.dt;
    const bool ok = r.D.empty() ? false : r.max_excess <= 3.0 * r.se_at_max + allowance;
    o.pass = o.pass && ok;
    o.invalid = o.invalid || r.explosion_fraction > 0.5;
    runs.push_back({{"dt", sc.dt},
                    {"max_excess", r.max_excess},
                    {"se_at_max", r.se_at_max},
                    {"t_at_max", r.times.empty() ? 0.0 : r.times[r.argmax]},
                    {"allowance", allowance},
                    {"explosion_fraction", r.explosion_fraction},
                    {"pass", ok}});
  }
  o.summary = {{"runs", runs}, {"allowance_C", c.allowance_C}};
  return o;
}

Outcome do_converge(const RunConfig& c) {
  auto t = galerkin_convergence(c.experiment(), c.op, c.noise);
  Outcome o;
  o.table.header = {"n", "n_fine", "sup_diff", "sup_diff_se"};
  json rows = json::array();
  // Heat without noise: the difference is the tail of the initial state, attained at t = 0.
  const bool tail = c.op.id == "heat" && c.noise.type == "none";
  bool tail_ok = true;
  for (const auto& r : t.rows) {
    o.table.rows.push_back({col(r.n), col(r.n_fine), col(r.sup_diff.mean), col(r.sup_diff.se)});
    json row = {{"n", r.n}, {"n_fine", r.n_fine}, {"sup_diff", mse(r.sup_diff)}};
    if (tail) {
      OperatorParams op = c.op;
      op.modes = r.n_fine;
      auto fine = make_problem(op, c.noise);
      std::vector<double> ref;
      for (std::uint64_t i = 0; i < static_cast<std::uint64_t>(c.paths); ++i) {
        const Field x = c.solver.x0.realize(fine.basis, c.seed, i);
        double s = 0.0;
        for (std::size_t k = static_cast<std::size_t>(r.n); k < x.size(); ++k) s += x[k] * x[k];
        ref.push_back(std::sqrt(s));
      }
      const double expect = mean_se(ref).mean;
      const bool ok = std::abs(r.sup_diff.mean - expect) <= 0.1 * expect;
      tail_ok = tail_ok && ok;
      row["tail_reference"] = {{"expected", expect}, {"within_10pct", ok}};
    }
    rows.push_back(row);
  }
  o.pass = t.decreasing && tail_ok;
  o.invalid = t.explosion_fraction > 0.5;
  o.summary = {{"rows", rows},
               {"decreasing", t.decreasing},
               {"explosion_fraction", t.explosion_fraction},
               {"note", t.note}};
  return o;
}

Outcome do_counterexample(const RunConfig& c, const Problem& prob) {
  const auto& ce = c.counterexample;
  Condition cond;
  try {
    cond = condition_from_string(ce.condition);
  } catch (const std::exception&) {
    throw ConfigError("config: counterexample.condition: unknown condition '" + ce.condition + "'");
  }
  if (cond != Condition::A2 && cond != Condition::A4)
    throw ConfigError("config: counterexample.condition: search supports A2 and A4");
  SamplerSpec s = c.sampler;
  s.seed = c.seed;
  s.scale_lo = ce.scale_lo;
  s.scale_hi = ce.scale_hi;
  s.diff_lo = ce.diff_lo;
  s.diff_hi = ce.diff_hi;
  s.samples = ce.samples;
  Outcome o;
  o.table.header = {"K", "found", "evaluations", "best_relative_gap", "lhs", "rhs"};
  json arr = json::array();
  for (double K : ce.K) {
    auto r = counterexample_search(prob, cond, K, ce.budget, s, ce.threshold);
    o.pass = o.pass && r.found;
    o.table.rows.push_back({col(K), col(r.found), col(r.evaluations), col(r.best_relative), col(r.at_best.lhs),
                            col(r.at_best.rhs)});
    arr.push_back({{"K", K},
                   {"found", r.found},
                   {"evaluations", r.evaluations},
                   {"best_relative_gap", r.best_relative},
                   {"lhs", r.at_best.lhs},
                   {"rhs", r.at_best.rhs},
                   {"witness", {{"u", r.witness.u}, {"v", r.witness.v}, {"t", r.witness.t}}}});
  }
  o.summary = {{"condition", to_string(cond)}, {"threshold", ce.threshold}, {"results", arr}};
  return o;
}

Outcome do_residual(const RunConfig& c, const Problem& prob) {
  auto [a, b] = halving_pair(c.solver);
  Outcome o;
  o.table.header = {"dt", "t", "mean_residual", "se_residual"};
  json runs = json::array();
  double means[2] = {0.0, 0.0};
  int k = 0;
  for (const auto& sc : {a, b}) {
    ExperimentConfig e = c.experiment();
    e.solver = sc;
    e.solver.seed = c.seed;
    auto r = energy_identity_residual(e, prob);
    for (std::size_t i = 0; i < r.times.size(); ++i)
      o.table.rows.push_back({col(sc.dt), col(r.times[i]), col(r.residual[i].mean), col(r.residual[i].se)});
    means[k++] = r.at_T.mean;
    o.invalid = o.invalid || r.explosion_fraction > 0.5;
    runs.push_back({{"dt", sc.dt},
                    {"mean_at_T", r.at_T.mean},
                    {"se_at_T", r.at_T.se},
                    {"mean_abs_at_T", r.abs_at_T.mean},
                    {"explosion_fraction", r.explosion_fraction}});
  }
  const double ratio = means[0] != 0.0 ? std::abs(means[1] / means[0]) : 0.0;
  o.pass = ratio >= 0.35 && ratio <= 0.65;
  o.summary = {{"runs", runs}, {"halving_ratio", ratio}, {"accepted_range", {0.35, 0.65}}};
  return o;
}

std::string resolve_out_dir(const RunConfig& c, const CliOptions& opts) {
  if (opts.out) return *opts.out;
  if (!c.out_dir.empty()) return c.out_dir;
  if (const char* env = std::getenv("LMSPDE_OUT"); env && *env) return env;
  return "lmspde-out";
}

}  // namespace

int run(const std::string& sub, const CliOptions& opts, std::ostream& out, std::ostream& err) {
  RunConfig c;
  Problem prob;
  std::string dir;
  try {
    if (std::find(subcommands().begin(), subcommands().end(), sub) == subcommands().end())
      throw ConfigError("unknown subcommand '" + sub + "'");
    // The static checks never step in time, so they accept configs without a solver block.
    if (opts.config) c = load_run_config(*opts.config, sub != "audit" && sub != "counterexample");
    if (opts.op) {
      c.op.id = *opts.op;
      c.op.modes = default_modes(c.op.id, c.op.dim);
    }
    if (opts.seed) c.seed = *opts.seed;
    if (opts.paths) c.paths = *opts.paths;
    if (opts.condition) {
      c.counterexample.condition = *opts.condition;
      if (sub == "audit") c.conditions = {*opts.condition};
    }
    dir = resolve_out_dir(c, opts);
    c.out_dir = dir;

    // Everything below must succeed before any computation starts.
    prob = make_problem(c.op, c.noise);
    SolverConfig sc = c.solver;
    validate(sc, *prob.drift);
    if (sub == "audit") {
      c.sampler.validate();
      if (!c.conditions.empty()) parse_conditions(c.conditions);
    }
    if (sub == "counterexample") {
      SamplerSpec s = c.sampler;
      s.scale_lo = c.counterexample.scale_lo;
      s.scale_hi = c.counterexample.scale_hi;
      s.diff_lo = c.counterexample.diff_lo;
      s.diff_hi = c.counterexample.diff_hi;
      s.samples = c.counterexample.samples;
      s.validate();
      if (c.counterexample.budget < 1) throw ConfigError("config: counterexample.budget: must be positive");
    }
    if (sub == "moments") validate(c.experiment(), prob.drift->spec());
    if (sub == "uniqueness" || sub == "residual" || sub == "converge") {
      if (c.paths < 2) throw ConfigError("config: experiment.paths: at least 2 paths are required");
      auto [a, b] = halving_pair(c.solver);
      if (sub != "converge") {
        validate(a, *prob.drift);
        validate(b, *prob.drift);
      }
    }
  } catch (const std::exception& e) {
    err << "lmspde: " << e.what() << "\n";
    return 2;
  }

  Outcome o;
  try {
    if (sub == "simulate") o = do_simulate(c, prob);
    if (sub == "audit") o = do_audit(c, prob);
    if (sub == "moments") o = do_moments(c);
    if (sub == "uniqueness") o = do_uniqueness(c, prob);
    if (sub == "converge") o = do_converge(c);
    if (sub == "counterexample") o = do_counterexample(c, prob);
    if (sub == "residual") o = do_residual(c, prob);
  } catch (const ConfigError& e) {
    err << "lmspde: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    err << "lmspde: " << e.what() << "\n";
    return 2;
  }

  const std::string verdict = o.invalid ? "invalid" : o.pass ? "pass" : "fail";
  const std::string stem = (std::filesystem::path(dir) / (sub + "-" + c.op.id + "-" + std::to_string(c.seed))).string();
  json summary = {{"schema_version", kSchemaVersion},
                  {"experiment", sub},
                  {"operator", c.op.id},
                  {"seed", c.seed},
                  {"verdict", verdict},
                  {"result", o.summary}};
  try {
    write_atomic(stem + ".config.json", dump_json(to_json(c)));
    write_atomic(stem + ".csv", o.raw_csv ? *o.raw_csv : to_csv(o.table));
    write_atomic(stem + ".json", dump_json(summary));
    if (sub == "audit") write_atomic(stem + ".txt", o.text);
  } catch (const std::exception& e) {
    err << "lmspde: " << e.what() << "\n";
    return 2;
  }
  if (!opts.quiet) {
    if (sub == "audit") out << o.text;
    out << sub << " " << c.op.id << " seed " << c.seed << ": " << verdict << " -> " << stem
        << ".{csv,json}\n";
  }
  return o.pass || o.invalid ? 0 : 1;
}

}  // namespace lmspde
