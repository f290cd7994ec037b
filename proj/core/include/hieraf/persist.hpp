#ifndef HIERAF_PERSIST_HPP_
#define HIERAF_PERSIST_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "hieraf/agent.hpp"
#include "hieraf/checkpoint.hpp"
#include "hieraf/detect.hpp"
#include "hieraf/iqa.hpp"

namespace hieraf {

// Everything a trained system needs besides the scene pool.
struct SystemState {
  std::uint64_t encoder_seed = 0;
  std::optional<QualityModel> quality;
  DetectorThresholds thresholds;
  std::optional<Agent> high;
  std::optional<Agent> low;
};

void append_agent_blocks(Blocks& blocks, const std::string& prefix, const Agent& agent);
// Throws ContractError when the stored spec differs from `expected`.
Agent agent_from_blocks(const Blocks& blocks, const std::string& prefix, const AgentSpec& expected);

void append_quality_blocks(Blocks& blocks, const QualityModel& model);
QualityModel quality_from_blocks(const Blocks& blocks);

void append_detector_blocks(Blocks& blocks, const DetectorThresholds& th);
DetectorThresholds detector_from_blocks(const Blocks& blocks);

Blocks to_blocks(const SystemState& state);
// Agents are optional; encoder seed, quality model and thresholds are not.
SystemState from_blocks(const Blocks& blocks);

void save_system(const std::filesystem::path& path, const SystemState& state);
SystemState load_system(const std::filesystem::path& path);

}  // namespace hieraf

#endif  // HIERAF_PERSIST_HPP_
