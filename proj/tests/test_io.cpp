#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "lmspde/io.hpp"

using namespace lmspde;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("lmspde-io-" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string config_error(const std::string& text) {
  try {
    parse_run_config(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

int run_quiet(const std::string& sub, CliOptions o, std::string* err_text = nullptr) {
  o.quiet = true;
  std::ostringstream out, err;
  const int code = run(sub, o, out, err);
  if (err_text) *err_text = err.str();
  return code;
}

}  // namespace

TEST(Config, DefaultsAreMaterialized) {
  auto c = parse_run_config(R"({"solver": {"T": 1, "dt": 0.01}})");
  EXPECT_EQ(c.op.id, "heat");
  EXPECT_EQ(c.op.modes, 16);
  EXPECT_EQ(c.solver.dt, 0.01);
  auto nse = parse_run_config(R"({"operator": {"id": "nse2d"}, "solver": {"T": 1, "dt": 0.01}})");
  EXPECT_EQ(nse.op.modes, 3);
}

TEST(Config, RejectsUnknownKeysWithFieldName) {
  EXPECT_NE(config_error(R"({"solver": {"T": 1, "dt": 0.01}, "bogus": 1})").find("bogus: unknown key"),
            std::string::npos);
  EXPECT_NE(config_error(R"({"solver": {"T": 1, "dt": 0.01, "x0": {"kind": "mode", "amp": 2}}})")
                .find("solver.x0.amp"),
            std::string::npos);
}

TEST(Config, MissingDtNamesTheField) {
  EXPECT_NE(config_error(R"({"solver": {"T": 1}})").find("solver.dt"), std::string::npos);
  EXPECT_NE(config_error(R"({"operator": {"id": "heat"}})").find("solver"), std::string::npos);
}

TEST(Config, TypeAndSyntaxDiagnostics) {
  EXPECT_NE(config_error(R"({"solver": {"T": "one", "dt": 0.01}})").find("solver.T: expected a number"),
            std::string::npos);
  EXPECT_NE(config_error("{\n  \"solver\": {\"T\": 1,\n  \"dt\": }\n}").find("config:3:"), std::string::npos);
  EXPECT_NE(config_error(R"({"solver": {"T": 1, "dt": 0.01, "scheme": "rk4"}})").find("solver.scheme"),
            std::string::npos);
}

TEST(Config, ResolvedEchoRoundTrips) {
  auto c = parse_run_config(R"({"operator": {"id": "burgers", "modes": 8}, "noise": {"sigma": [1, 0.5]},
                                "solver": {"T": 0.5, "dt": 0.001, "x0": {"kind": "coefficients", "coeffs": [1, 2]}},
                                "experiment": {"ladder": [8, 16]}, "seed": 9})");
  auto j = to_json(c);
  auto back = parse_run_config(dump_json(j));
  EXPECT_EQ(to_json(back), j);
}

TEST(Report, JsonRoundTrip) {
  OperatorParams op;
  op.modes = 6;
  auto p = make_problem(op, {});
  AuditOptions o;
  o.sampler.samples = 50;
  o.sampler.restarts = 2;
  o.sampler.steps = 10;
  for (auto c : {Condition::H1, Condition::H2, Condition::C3}) {
    auto r = audit_condition(p, c, o);
    auto parsed = report_from_json(nlohmann::json::parse(dump_json(to_json(r))));
    EXPECT_TRUE(parsed == r) << r.condition;
  }
}

TEST(Emit, HeaderOnlyCsvAndNumberFormat) {
  Table t{{"a", "b"}, {}};
  EXPECT_EQ(to_csv(t), "a,b\n");
  t.rows.push_back({fmt_double(0.1), fmt_double(-2.5)});
  EXPECT_EQ(to_csv(t), "a,b\n0.10000000000000001,-2.5\n");
}

TEST(Emit, UnwritablePathThrows) {
  EXPECT_THROW(write_atomic("/proc/lmspde-no-such-dir/x.csv", "x"), IoError);
}

TEST(Run, AuditHeatDefaultsPass) {
  auto dir = scratch("audit");
  CliOptions o;
  o.out = dir.string();
  EXPECT_EQ(run_quiet("audit", o), 0);
  auto j = nlohmann::json::parse(slurp(dir / "audit-heat-0.json"));
  EXPECT_EQ(j.at("schema_version"), kSchemaVersion);
  EXPECT_EQ(j.at("verdict"), "pass");
  EXPECT_TRUE(fs::exists(dir / "audit-heat-0.config.json"));
  EXPECT_TRUE(fs::exists(dir / "audit-heat-0.txt"));
}

TEST(Run, CounterexampleWritesWitness) {
  auto dir = scratch("cx");
  CliOptions o;
  o.out = dir.string();
  o.op = "nse2d";
  o.condition = "A2";
  EXPECT_EQ(run_quiet("counterexample", o), 0);
  auto j = nlohmann::json::parse(slurp(dir / "counterexample-nse2d-0.json"));
  for (const auto& r : j.at("result").at("results")) {
    EXPECT_TRUE(r.at("found").get<bool>());
    EXPECT_FALSE(r.at("witness").at("v").empty());
  }
}

TEST(Run, ConfigErrorsExitTwo) {
  auto dir = scratch("bad");
  {
    std::ofstream(dir / "c.json") << R"({"solver": {"T": 1}})";
  }
  CliOptions o;
  o.out = dir.string();
  o.config = (dir / "c.json").string();
  std::string err;
  EXPECT_EQ(run_quiet("simulate", o, &err), 2);
  EXPECT_NE(err.find("dt"), std::string::npos);
  EXPECT_FALSE(fs::exists(dir / "simulate-heat-0.csv"));
  EXPECT_EQ(run_quiet("frobnicate", CliOptions{}), 2);
  o.config = (dir / "missing.json").string();
  EXPECT_EQ(run_quiet("simulate", o), 2);
}

TEST(Run, RepeatedRunsAreByteIdentical) {
  auto dir = scratch("det");
  {
    std::ofstream(dir / "c.json") << R"({"operator": {"id": "burgers", "modes": 8}, "noise": {"type": "multiplicative"},
      "solver": {"T": 0.05, "dt": 0.001, "x0": {"kind": "random"}}, "experiment": {"paths": 4, "ladder": [4, 8]}})";
  }
  CliOptions o;
  o.out = (dir / "out").string();
  o.config = (dir / "c.json").string();
  o.seed = 3;
  for (const auto& sub : {"simulate", "moments", "converge", "uniqueness"}) {
    ASSERT_NE(run_quiet(sub, o), 2) << sub;
    std::map<std::string, std::string> first;
    for (auto& e : fs::directory_iterator(dir / "out")) first[e.path().filename().string()] = slurp(e.path());
    ASSERT_NE(run_quiet(sub, o), 2) << sub;
    for (auto& [name, bytes] : first) EXPECT_EQ(slurp(dir / "out" / name), bytes) << name;
  }
  EXPECT_TRUE(fs::exists(dir / "out" / "simulate-burgers-3.csv"));
}

TEST(Run, OutputDirectoryFromEnvironment) {
  auto dir = scratch("env");
  setenv("LMSPDE_OUT", dir.string().c_str(), 1);
  CliOptions o;
  o.op = "plaplace";
  const int code = run_quiet("audit", o);
  unsetenv("LMSPDE_OUT");
  EXPECT_EQ(code, 0);
  EXPECT_TRUE(fs::exists(dir / "audit-plaplace-0.json"));
}
