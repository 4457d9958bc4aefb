#pragma once

#include "shsnet/model.hpp"

#include <filesystem>

namespace shsnet {

/// Loads a scenario from the JSON schema documented in docs/scenario-schema.md.
/// Sections: subsystems, abstract_subsystems, topology, chain, certificates,
/// interface, simulation, synthesis (+ optional noise, weights,
/// reduced_certificate). Matrices may be inlined as nested arrays, referenced
/// as CSV files (relative to the scenario file), or given through the
/// identity/zeros/ones shorthands. Load errors name the offending section.
[[nodiscard]] Scenario load_scenario(const std::filesystem::path& path);

/// Writes the scenario back out with all matrices inlined.
void save_scenario(const Scenario& scenario, const std::filesystem::path& path);

}  // namespace shsnet
