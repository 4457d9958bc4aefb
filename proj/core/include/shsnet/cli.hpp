#pragma once

#include "shsnet/model.hpp"

#include <iosfwd>
#include <optional>
#include <string>

namespace shsnet {

/// Exit codes shared by every command.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;      ///< hard failure
inline constexpr int kExitDiscrepancy = 2;  ///< reference-data findings, no override

struct CliOptions {
  std::string scenario_path;  ///< empty: the built-in consensus scenario
  std::string out_dir = "out";
  std::optional<std::uint64_t> seed;
  std::optional<int> runs;
  std::optional<double> dt;
  std::optional<double> horizon;
  double tol = 1e-9;
  long samples = 10000;
  bool allow_paper_discrepancy = false;
};

/// Loads the scenario file or builds the built-in one, then applies the
/// option overrides (seed, dt, runs, horizon).
[[nodiscard]] Scenario resolve_scenario(const CliOptions& options);

/// Full certificate pipeline: network validation, per-pair alpha/storage
/// checks, per-mode matrix conditions with the least-squares abstract
/// topology, certificate composition, and the per-mode decrease check.
/// Known reference-data mismatches (the matching-condition residual) are
/// reported as named findings and map to exit code 2 unless overridden.
int cmd_check(const CliOptions& options, std::ostream& log);

/// Open-loop simulation of the concrete network (zero external input);
/// writes trajectory and switching CSVs.
int cmd_simulate(const CliOptions& options, std::ostream& log);

/// Coupled Monte-Carlo error experiment against the theoretical envelope;
/// writes the two-curve CSV (time, empirical mean, standard error, bound).
int cmd_bound(const CliOptions& options, std::ostream& log);

/// Symbolic controller synthesis for the reduced system; writes the
/// controller table and winning-set CSVs.
int cmd_synthesize(const CliOptions& options, std::ostream& log);

/// Synthesizes (on the fly), refines through both interface layers, and
/// simulates all three layers jointly; writes output trajectories and the
/// target-visit log.
int cmd_closedloop(const CliOptions& options, std::ostream& log);

}  // namespace shsnet
