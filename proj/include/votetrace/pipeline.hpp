#pragma once

#include "votetrace/evaluation.hpp"
#include "votetrace/pattern.hpp"
#include "votetrace/simulation.hpp"

namespace votetrace {

/// The attacker's view of a finished run.
AttackerView attacker_view(const SimulationResult& result);
GroundTruth ground_truth(const SimulationResult& result);

/// Runs the toy scenario for `vote` and extracts its pattern.
Pattern learn_pattern(const VoteProtocolSpec& vote, std::uint64_t seed = 1);

}  // namespace votetrace
