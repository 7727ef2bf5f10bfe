// Command-line front end: lmspde <subcommand> [--config file] [overrides].

#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "lmspde/io.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Spectral-Galerkin SPDE experiments and structural-condition audits"};
  app.require_subcommand(1, 1);

  lmspde::CliOptions opts;
  std::string config, out, op, condition;
  std::uint64_t seed = 0;
  int paths = 0;
  bool quiet = false;

  for (const auto& name : lmspde::subcommands()) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config, "JSON run configuration");
    sub->add_option("--seed", seed, "overrides the configured seed");
    sub->add_option("--out", out, "output directory (default: $LMSPDE_OUT, then lmspde-out)");
    sub->add_option("--paths", paths, "ensemble size")->check(CLI::PositiveNumber);
    sub->add_option("--operator", op, "catalog operator id");
    sub->add_option("--condition", condition, "condition id (audit, counterexample)");
    sub->add_flag("--quiet", quiet, "suppress console output");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  auto* chosen = app.get_subcommands().front();
  auto given = [&](const char* flag) { return chosen->count(flag) > 0; };
  if (given("--config")) opts.config = config;
  if (given("--seed")) opts.seed = seed;
  if (given("--out")) opts.out = out;
  if (given("--paths")) opts.paths = paths;
  if (given("--operator")) opts.op = op;
  if (given("--condition")) opts.condition = condition;
  opts.quiet = quiet;
  return lmspde::run(chosen->get_name(), opts, std::cout, std::cerr);
}
