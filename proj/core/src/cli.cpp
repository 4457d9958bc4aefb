#include "shsnet/cli.hpp"

#include "shsnet/bounds.hpp"
#include "shsnet/certify.hpp"
#include "shsnet/compose.hpp"
#include "shsnet/manifest.hpp"
#include "shsnet/markov.hpp"
#include "shsnet/refine.hpp"
#include "shsnet/scenario_io.hpp"
#include "shsnet/sim.hpp"
#include "shsnet/synth.hpp"
#include "shsnet/version.hpp"

#include <chrono>
#include <filesystem>
#include <sstream>
#include <fstream>
#include <ostream>

namespace shsnet {
namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

RunManifest start_manifest(const char* command, const CliOptions& options,
                           const Scenario& scenario) {
  RunManifest manifest;
  manifest.command = command;
  manifest.scenario =
      options.scenario_path.empty() ? "<builtin:" + scenario.name + ">" : options.scenario_path;
  manifest.seed = options.seed.value_or(scenario.simulation.seed);
  manifest.out_dir = options.out_dir;
  manifest.version = std::string(kVersion);
  return manifest;
}

std::ofstream open_output(RunManifest& manifest, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write output file: " + path.string());
  out.precision(12);
  return out;
}

void finish_file(RunManifest& manifest, const fs::path& path) { manifest.add_file(path); }

// structure shared by cmd_synthesize and cmd_closedloop
struct SynthesisArtifacts {
  SymbolicModel model;
  ControllerTable table;
  Index win1 = 0, win2 = 0;
};

SynthesisArtifacts synthesize_from_scenario(const Scenario& scenario, std::ostream& log) {
  const auto& sy = scenario.synthesis;
  const UniformGrid grid = UniformGrid::make(sy.domain_lo, sy.domain_hi, sy.cell_width);
  std::vector<Matrix> modes;
  for (Index j = 0; j < scenario.abstraction.chain.mode_count(); ++j) {
    modes.push_back(scenario.abstraction.closed_drift_matrix(j));
  }
  SynthesisArtifacts art{
      build_symbolic_model(modes, grid,
                           make_input_grid(sy.input_lo, sy.input_hi, sy.input_step),
                           sy.sampling_period),
      {}, 0, 0};
  const auto target1 = grid.mask_of_box(sy.target1_lo, sy.target1_hi);
  const auto target2 = grid.mask_of_box(sy.target2_lo, sy.target2_hi);
  const std::vector<std::uint8_t> safe(static_cast<std::size_t>(grid.cell_count()), 1);

  auto r1 = synthesize_reach_stay(art.model, target1, safe);
  log << "winning set toward target 1: " << r1.winning_count << " / " << grid.cell_count()
      << " cells (" << r1.iterations << " iterations)\n";
  auto r2 = synthesize_reach_stay(art.model, target2, safe);
  log << "winning set toward target 2: " << r2.winning_count << " / " << grid.cell_count()
      << " cells (" << r2.iterations << " iterations)\n";
  art.win1 = r1.winning_count;
  art.win2 = r2.winning_count;
  art.table = build_recurrence_supervisor(art.model, std::move(r1), std::move(r2), target1,
                                          target2);
  return art;
}

SwitchSignal sample_or_frozen(const MarkovChain& chain, double horizon, RngStream& rng) {
  if (horizon <= 0.0) return frozen_signal(0, 0.0);
  return sample_switch_signal(chain, 0, horizon, rng);
}

Vector bound_time_grid(double horizon, double dt) {
  const auto steps = static_cast<Index>(std::llround(horizon / dt));
  const Index stride = std::max<Index>(1, steps / 100);
  std::vector<double> times;
  for (Index k = 0; k < steps; k += stride) times.push_back(static_cast<double>(k) * dt);
  times.push_back(horizon);
  return Eigen::Map<Vector>(times.data(), static_cast<Index>(times.size()));
}

}  // namespace

Scenario resolve_scenario(const CliOptions& options) {
  Scenario scenario = options.scenario_path.empty()
                          ? build_consensus_scenario({})
                          : load_scenario(options.scenario_path);
  if (options.seed) scenario.simulation.seed = *options.seed;
  if (options.dt) scenario.simulation.dt = *options.dt;
  if (options.runs) scenario.simulation.bound.runs = *options.runs;
  if (options.horizon) {
    scenario.simulation.bound.horizon = *options.horizon;
    scenario.simulation.closed_loop.horizon = *options.horizon;
  }
  return scenario;
}

// ---------------------------------------------------------------------------
// check
// ---------------------------------------------------------------------------

int cmd_check(const CliOptions& options, std::ostream& log) {
  const auto start = Clock::now();
  Scenario scenario;
  try {
    scenario = resolve_scenario(options);
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  fs::create_directories(options.out_dir);
  RunManifest manifest = start_manifest("check", options, scenario);

  bool hard_failure = false;
  std::vector<std::string> findings;

  const ValidationReport vc = validate_network(scenario.concrete);
  const ValidationReport va = validate_network(scenario.abstraction);
  log << "concrete network: " << vc.text();
  log << "abstract network: " << va.text();
  if (!vc.ok() || !va.ok()) hard_failure = true;

  std::vector<std::string> cert_issues;
  for (std::size_t i = 0; i < scenario.certificates.size(); ++i) {
    scenario.certificates[i].validate("certificate " + std::to_string(i + 1), cert_issues);
  }
  for (const auto& msg : cert_issues) log << msg << "\n";
  if (!cert_issues.empty()) hard_failure = true;

  RngStream root(options.seed.value_or(scenario.simulation.seed));
  const CheckOptions check_opts{options.samples, 10.0, options.tol};
  const Matrix lift = scenario.state_lift();

  std::ostringstream checks_text;
  for (std::size_t i = 0; i < scenario.certificates.size() && !hard_failure; ++i) {
    const auto& cert = scenario.certificates[i];
    const auto& sub = scenario.concrete.subsystems[i];
    const auto& subh = scenario.abstraction.subsystems[i];
    const PairInterface iface{scenario.interface_gain, cert.H, cert.H};

    CheckReport alpha = check_alpha_bound(cert, sub, subh, check_opts,
                                          root.derive("alpha", static_cast<std::uint64_t>(i)));
    alpha.name = "pair " + std::to_string(i + 1) + " " + alpha.name;
    CheckReport storage =
        check_storage_inequality(cert, sub, subh, iface, check_opts,
                                 root.derive("storage", static_cast<std::uint64_t>(i)));
    storage.name = "pair " + std::to_string(i + 1) + " " + storage.name;
    checks_text << alpha.text() << storage.text();
    log << alpha.text() << storage.text();
    if (!alpha.pass() || !storage.pass()) hard_failure = true;
  }

  CompositionReport comp;
  if (!hard_failure) {
    comp = check_composition(scenario, options.tol);
    log << comp.text();
    for (const auto& mode : comp.modes) {
      if (!mode.pass_13) hard_failure = true;
      if (!mode.pass_14 || !mode.rank_ok) {
        findings.push_back("eq14-matching-mode-" + std::to_string(mode.mode + 1) +
                           ": no abstract interconnection satisfies the matching "
                           "condition (least-squares residual " +
                           std::to_string(mode.residual_ls) + ")");
      }
      if (mode.residual_declared > options.tol) {
        findings.push_back("declared-abstract-topology-mode-" +
                           std::to_string(mode.mode + 1) + ": declared matrix misses the "
                           "matching condition by " +
                           std::to_string(mode.residual_declared));
      }
    }
  }

  if (!hard_failure) {
    const SimulationCertificate ssf =
        compose_ssf(scenario.weights, scenario.certificates, scenario.concrete,
                    scenario.abstraction, comp, /*override_failed=*/true);
    const PairInterface net_iface{scenario.interface_gain, lift, lift};
    const auto mode_reports = check_simulation_inequality(
        ssf, scenario.concrete, scenario.abstraction, net_iface, check_opts,
        root.derive("ssf"));
    for (const auto& report : mode_reports) {
      checks_text << report.text();
      log << report.text();
      if (!report.pass()) {
        const int mode = report.witnesses.empty() ? 0 : report.witnesses.front().mode;
        const bool known_mismatch =
            !comp.modes.empty() &&
            !comp.modes[static_cast<std::size_t>(std::max(0, mode))].pass_14;
        if (known_mismatch) {
          findings.push_back("ssf-decrease-mode-" + std::to_string(mode + 1) +
                             ": decrease violated where the matching condition already "
                             "fails (worst margin " +
                             std::to_string(report.worst_margin) + ")");
        } else {
          hard_failure = true;
        }
      }
    }

    if (scenario.reduced_certificate) {
      const CheckReport reduced = check_reduced_certificate(
          *scenario.reduced_certificate, scenario.abstraction, scenario.interface_gain,
          check_opts, root.derive("reduced"));
      checks_text << reduced.text();
      log << reduced.text();  // informational: second-layer data has no declared rate
    }

    auto comp_csv = open_output(manifest, fs::path(options.out_dir) / "composition.csv");
    comp.write_csv(comp_csv);
    comp_csv.close();
    finish_file(manifest, fs::path(options.out_dir) / "composition.csv");
    auto comp_txt = open_output(manifest, fs::path(options.out_dir) / "composition.txt");
    comp_txt << comp.text();
    comp_txt.close();
    finish_file(manifest, fs::path(options.out_dir) / "composition.txt");
    auto checks = open_output(manifest, fs::path(options.out_dir) / "checks.txt");
    checks << checks_text.str();
    checks.close();
    finish_file(manifest, fs::path(options.out_dir) / "checks.txt");
  }

  for (const auto& finding : findings) log << "finding: " << finding << "\n";
  manifest.wall_clock_sec = seconds_since(start);
  manifest.write(fs::path(options.out_dir) / "manifest.json");

  if (hard_failure) {
    log << "check: hard failure\n";
    return kExitFailure;
  }
  if (!findings.empty() && !options.allow_paper_discrepancy) {
    log << "check: " << findings.size()
        << " reference-data finding(s); pass --allow-paper-discrepancy to accept\n";
    return kExitDiscrepancy;
  }
  log << "check: ok" << (findings.empty() ? "" : " (findings accepted)") << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

int cmd_simulate(const CliOptions& options, std::ostream& log) {
  const auto start = Clock::now();
  try {
    const Scenario scenario = resolve_scenario(options);
    fs::create_directories(options.out_dir);
    RunManifest manifest = start_manifest("simulate", options, scenario);

    const double horizon = options.horizon.value_or(scenario.simulation.bound.horizon);
    const double dt = scenario.simulation.dt;
    RngStream root(options.seed.value_or(scenario.simulation.seed));
    RngStream switch_stream = root.derive("switch");
    const SwitchSignal signal =
        sample_or_frozen(scenario.concrete.chain, horizon, switch_stream);
    const Trajectory traj = simulate(
        scenario.concrete, zero_controller(scenario.concrete.input_dim()),
        scenario.simulation.bound.x0, signal, dt, horizon, root.derive("sim"), {});

    auto tcsv = open_output(manifest, fs::path(options.out_dir) / "trajectory.csv");
    traj.write_csv(tcsv, /*with_states=*/false);
    tcsv.close();
    finish_file(manifest, fs::path(options.out_dir) / "trajectory.csv");
    auto scsv = open_output(manifest, fs::path(options.out_dir) / "switching.csv");
    signal.write_csv(scsv);
    scsv.close();
    finish_file(manifest, fs::path(options.out_dir) / "switching.csv");

    manifest.wall_clock_sec = seconds_since(start);
    manifest.write(fs::path(options.out_dir) / "manifest.json");
    log << "simulated " << traj.times.size() << " grid points, " << signal.jump_count()
        << " topology switches\n";
    return kExitOk;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

// ---------------------------------------------------------------------------
// bound
// ---------------------------------------------------------------------------

int cmd_bound(const CliOptions& options, std::ostream& log) {
  const auto start = Clock::now();
  try {
    const Scenario scenario = resolve_scenario(options);
    fs::create_directories(options.out_dir);
    RunManifest manifest = start_manifest("bound", options, scenario);

    const CompositionReport comp = check_composition(scenario, options.tol);
    const SimulationCertificate ssf =
        compose_ssf(scenario.weights, scenario.certificates, scenario.concrete,
                    scenario.abstraction, comp, /*override_failed=*/true);
    if (!comp.pass()) {
      log << "note: composition conditions carry findings (see `check`); the envelope "
             "is evaluated for the declared certificates\n";
    }

    const double horizon = scenario.simulation.bound.horizon;
    const int runs = scenario.simulation.bound.runs;
    const Vector grid = bound_time_grid(horizon, scenario.simulation.dt);
    Vector p0 = Vector::Zero(scenario.concrete.chain.mode_count());
    p0[0] = 1.0;  // runs start in the first mode
    const ErrorBoundCurve bound =
        bound_curve(ssf, scenario.simulation.bound.x0, scenario.simulation.bound.xhat0,
                    p0, 0.0, grid);

    RngStream root(options.seed.value_or(scenario.simulation.seed));
    const EmpiricalCurve empirical = monte_carlo_error(scenario, runs, grid, root);
    const BoundViolationReport violations = compare(empirical, bound);

    auto csv = open_output(manifest, fs::path(options.out_dir) / "error_curves.csv");
    write_error_curves_csv(csv, empirical, bound);
    csv.close();
    finish_file(manifest, fs::path(options.out_dir) / "error_curves.csv");
    manifest.wall_clock_sec = seconds_since(start);
    manifest.write(fs::path(options.out_dir) / "manifest.json");

    log << "bound at t=0: " << bound.values[0] << ", empirical mean at t=0: "
        << empirical.mean[0] << " (" << runs << " runs)\n";
    log << violations.text(empirical, bound);
    return violations.empty() ? kExitOk : kExitFailure;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

// ---------------------------------------------------------------------------
// synthesize
// ---------------------------------------------------------------------------

int cmd_synthesize(const CliOptions& options, std::ostream& log) {
  const auto start = Clock::now();
  try {
    const Scenario scenario = resolve_scenario(options);
    fs::create_directories(options.out_dir);
    RunManifest manifest = start_manifest("synthesize", options, scenario);

    const SynthesisArtifacts art = synthesize_from_scenario(scenario, log);
    if (art.win1 == 0 || art.win2 == 0) {
      log << "synthesis failed: empty winning set\n";
      return kExitFailure;
    }

    auto ccsv = open_output(manifest, fs::path(options.out_dir) / "controller.csv");
    art.table.write_csv(ccsv);
    ccsv.close();
    finish_file(manifest, fs::path(options.out_dir) / "controller.csv");
    for (int which = 1; which <= 2; ++which) {
      const auto& ctrl = which == 1 ? art.table.to_target1 : art.table.to_target2;
      const fs::path path =
          fs::path(options.out_dir) / ("winning" + std::to_string(which) + ".csv");
      auto wcsv = open_output(manifest, path);
      wcsv << "cell";
      for (Index k = 0; k < art.model.grid.dim(); ++k) wcsv << ",c" << (k + 1);
      wcsv << "\n";
      for (Index c = 0; c < art.model.grid.cell_count(); ++c) {
        if (!ctrl.winning[static_cast<std::size_t>(c)]) continue;
        const Vector center = art.model.grid.center(c);
        wcsv << c;
        for (Index k = 0; k < center.size(); ++k) wcsv << "," << center[k];
        wcsv << "\n";
      }
      wcsv.close();
      finish_file(manifest, path);
    }
    manifest.wall_clock_sec = seconds_since(start);
    manifest.write(fs::path(options.out_dir) / "manifest.json");
    return kExitOk;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

// ---------------------------------------------------------------------------
// closedloop
// ---------------------------------------------------------------------------

int cmd_closedloop(const CliOptions& options, std::ostream& log) {
  const auto start = Clock::now();
  try {
    const Scenario scenario = resolve_scenario(options);
    fs::create_directories(options.out_dir);
    RunManifest manifest = start_manifest("closedloop", options, scenario);

    const SynthesisArtifacts art = synthesize_from_scenario(scenario, log);
    if (art.win1 == 0 || art.win2 == 0) {
      log << "synthesis failed: empty winning set\n";
      return kExitFailure;
    }

    const std::uint64_t seed = options.seed.value_or(scenario.simulation.seed);
    const ClosedLoopResult result = run_refined_closed_loop(scenario, art.table, seed, {});

    auto ccsv = open_output(manifest, fs::path(options.out_dir) / "outputs_concrete.csv");
    result.concrete.write_csv(ccsv);
    ccsv.close();
    finish_file(manifest, fs::path(options.out_dir) / "outputs_concrete.csv");
    auto acsv = open_output(manifest, fs::path(options.out_dir) / "outputs_abstract.csv");
    result.abstraction.write_csv(acsv);
    acsv.close();
    finish_file(manifest, fs::path(options.out_dir) / "outputs_abstract.csv");

    auto rcsv = open_output(manifest, fs::path(options.out_dir) / "outputs_reduced.csv");
    rcsv << "time";
    for (Index k = 0; k < result.reduced_states.cols(); ++k) rcsv << ",x" << (k + 1);
    rcsv << "\n";
    for (Index k = 0; k < result.reduced_states.rows(); ++k) {
      rcsv << result.concrete.times[k];
      for (Index d = 0; d < result.reduced_states.cols(); ++d) {
        rcsv << "," << result.reduced_states(k, d);
      }
      rcsv << "\n";
    }
    rcsv.close();
    finish_file(manifest, fs::path(options.out_dir) / "outputs_reduced.csv");

    auto vcsv = open_output(manifest, fs::path(options.out_dir) / "visits.csv");
    vcsv << "time,target\n";
    for (const auto& v : result.visits) vcsv << v.time << "," << (v.target + 1) << "\n";
    vcsv.close();
    finish_file(manifest, fs::path(options.out_dir) / "visits.csv");

    manifest.wall_clock_sec = seconds_since(start);
    manifest.write(fs::path(options.out_dir) / "manifest.json");

    log << "visits: " << result.visits.size() << ", sup |reduced state| = "
        << result.sup_reduced_norm_inf << "\n";
    if (result.domain_exit_time) {
      log << "error: reduced state left the winning domain at t = "
          << *result.domain_exit_time << "\n";
      return kExitFailure;
    }
    return kExitOk;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

}  // namespace shsnet
