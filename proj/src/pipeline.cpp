#include "votetrace/pipeline.hpp"

namespace votetrace {

AttackerView attacker_view(const SimulationResult& result) {
  return filter_visible(result.log, result.visible_clients, result.ballot_boxes);
}

GroundTruth ground_truth(const SimulationResult& result) { return {result.truth, result.visible_clients}; }

Pattern learn_pattern(const VoteProtocolSpec& vote, std::uint64_t seed) {
  return extract_pattern(attacker_view(simulate(ScenarioConfig::toy(vote, seed))));
}

}  // namespace votetrace
