#pragma once

#include "votetrace/config.hpp"
#include "votetrace/simulation.hpp"

#include <string>

namespace votetrace {

/// Library version string baked in at build time.
std::string code_version();

/// Lowercase hex SHA-256 of the canonical config dump, the seed and the code
/// version.
std::string run_hash(const ScenarioConfig& config);

/// JSON manifest of one simulate run.
std::string run_manifest(const ScenarioConfig& config, const SimulationStats& stats);

}  // namespace votetrace
