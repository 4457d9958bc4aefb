// Command line front end: scenario loading plus the check / simulate /
// bound / synthesize / closedloop pipeline. See README.md and docs/ for the
// file formats.

#include "shsnet/cli.hpp"
#include "shsnet/version.hpp"

#include "CLI11.hpp"

#include <iostream>
#include <string>

int main(int argc, char** argv) {
  CLI::App app{"switched stochastic hybrid network toolbox"};
  app.set_version_flag("--version", std::string(shsnet::kVersion));
  app.require_subcommand(1);

  shsnet::CliOptions options;
  std::uint64_t seed = 0;
  int runs = 0;
  double dt = 0.0, horizon = 0.0;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("scenario", options.scenario_path,
                    "scenario JSON file (omit for the built-in example)");
    cmd->add_option("--out", options.out_dir, "output directory")->capture_default_str();
    cmd->add_option("--seed", seed, "root random seed (overrides the scenario)");
    cmd->add_option("--tol", options.tol, "numeric tolerance for matrix checks")
        ->capture_default_str();
    cmd->add_flag("--allow-paper-discrepancy", options.allow_paper_discrepancy,
                  "treat known reference-data findings as accepted");
    return cmd;
  };

  auto* check = add_common(app.add_subcommand("check", "run the certificate pipeline"));
  check->add_option("--samples", options.samples, "samples per inequality check")
      ->capture_default_str();

  auto* simulate = add_common(app.add_subcommand("simulate", "open-loop simulation"));
  simulate->add_option("--dt", dt, "integration step");
  simulate->add_option("--horizon", horizon, "simulation horizon");

  auto* bound = add_common(
      app.add_subcommand("bound", "Monte-Carlo output-error bound experiment"));
  bound->add_option("--runs", runs, "number of coupled runs");
  bound->add_option("--dt", dt, "integration step");
  bound->add_option("--horizon", horizon, "experiment horizon");

  auto* synthesize =
      add_common(app.add_subcommand("synthesize", "symbolic controller synthesis"));

  auto* closedloop = add_common(
      app.add_subcommand("closedloop", "synthesize, refine, and simulate all layers"));
  closedloop->add_option("--dt", dt, "integration step");
  closedloop->add_option("--horizon", horizon, "closed-loop horizon");

  CLI11_PARSE(app, argc, argv);

  auto picked = [](CLI::App* cmd, const std::string& name) {
    const CLI::Option* opt = cmd->get_option_no_throw(name);
    return opt != nullptr && opt->count() > 0;
  };
  for (auto* cmd : {check, simulate, bound, synthesize, closedloop}) {
    if (picked(cmd, "--seed")) options.seed = seed;
    if (picked(cmd, "--dt")) options.dt = dt;
    if (picked(cmd, "--horizon")) options.horizon = horizon;
  }
  if (picked(bound, "--runs")) options.runs = runs;

  if (check->parsed()) return shsnet::cmd_check(options, std::cout);
  if (simulate->parsed()) return shsnet::cmd_simulate(options, std::cout);
  if (bound->parsed()) return shsnet::cmd_bound(options, std::cout);
  if (synthesize->parsed()) return shsnet::cmd_synthesize(options, std::cout);
  if (closedloop->parsed()) return shsnet::cmd_closedloop(options, std::cout);
  return 1;
}
