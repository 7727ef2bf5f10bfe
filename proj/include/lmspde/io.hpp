#pragma once

// Run configuration, report serialization and the batch dispatcher behind the
// command-line tool. Configuration is JSON; every run echoes the fully resolved
// configuration next to its artifacts.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "lmspde/checker.hpp"
#include "lmspde/experiments.hpp"

namespace lmspde {

constexpr int kSchemaVersion = 1;

// Malformed or inconsistent configuration; the message names the offending field.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An artifact could not be written.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CounterexampleOptions {
  std::string condition = "A2";
  std::vector<double> K{0.0, 1.0, 10.0, 100.0, 1000.0};
  long budget = 100000;
  double threshold = 1e-4;
  // Large states are where the violations live, so the search samples wider than the audit.
  double scale_lo = 1e-1;
  double scale_hi = 1e4;
  double diff_lo = 1e-2;
  double diff_hi = 1e1;
  int samples = 2000;
};

struct RunConfig {
  OperatorParams op;
  NoiseParams noise;
  SolverConfig solver;
  int paths = 256;
  double p = 4.0;
  std::vector<int> ladder{16, 32, 64};
  InitialCondition y0;          // second initial state for uniqueness
  double allowance_C = 1.0;     // uniqueness: bias allowance C·dt
  SamplerSpec sampler;
  double audit_t = 0.0;
  bool ascent = true;
  bool variants = true;
  std::vector<std::string> conditions;  // empty: catalog defaults
  CounterexampleOptions counterexample;
  std::uint64_t seed = 0;
  std::string out_dir;  // empty: --out, then $LMSPDE_OUT, then "lmspde-out"

  ExperimentConfig experiment() const;
  AuditOptions audit_options() const;
};

// Desk-scale cutoff used when the configuration leaves operator.modes unset.
int default_modes(const std::string& id, int dim);

// Parses and validates. Unknown keys, wrong types and missing solver.T / solver.dt
// (when a "solver" object is given or `require_solver`) throw ConfigError.
RunConfig parse_run_config(const std::string& text, bool require_solver = true);
RunConfig load_run_config(const std::string& path, bool require_solver = true);
nlohmann::json to_json(const RunConfig& cfg);

nlohmann::json to_json(const ConditionReport& r);
ConditionReport report_from_json(const nlohmann::json& j);
bool operator==(const ConditionReport& a, const ConditionReport& b);
std::string format_report_text(const std::string& op_id, const std::vector<ConditionReport>& reports);

// Header-only when rows is empty. Numbers are printed with %.17g.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

std::string fmt_double(double x);
std::string to_csv(const Table& t);

// Writes through a temporary file in the same directory and renames it into place.
void write_atomic(const std::string& path, const std::string& content);
std::string dump_json(const nlohmann::json& j);

struct CliOptions {
  std::optional<std::string> config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> paths;
  std::optional<std::string> op;
  std::optional<std::string> condition;
  bool quiet = false;
};

const std::vector<std::string>& subcommands();

// Exit status: 0 all verdicts pass, 1 a verdict failed, 2 configuration or I/O error.
int run(const std::string& subcommand, const CliOptions& opts, std::ostream& out, std::ostream& err);

}  // namespace lmspde
