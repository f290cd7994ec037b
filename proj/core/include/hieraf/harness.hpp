#ifndef HIERAF_HARNESS_HPP_
#define HIERAF_HARNESS_HPP_

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "hieraf/bench.hpp"
#include "hieraf/env.hpp"
#include "hieraf/persist.hpp"
#include "hieraf/trainer.hpp"

namespace hieraf {

struct RunConfig {
  std::uint64_t seed = 0;
  std::filesystem::path out = "out";

  std::uint64_t encoder_seed = 1;
  // "generated": fit from a rendered corpus; "checkpoint": read from path.
  std::string quality_source = "generated";
  std::filesystem::path quality_path;
  int corpus_size = 64;

  // "oracle" or "external" (command run per ExternalProcessDetector).
  std::string detector_kind = "oracle";
  std::vector<std::string> detector_command;

  EnvConfig env;
  TrainConfig train;

  int eval_episodes = 200;
  std::uint64_t eval_seed = 20240607;

  int analyze_scene = 0;
  double analyze_illuminance_lx = 37.0;
  double analyze_distance_cm = 170.0;
  int analyze_exposure_stride = 5;
  double analyze_lens_step = 2.0;

  // Every module invariant; throws ConfigError naming the offending key.
  void validate() const;
};

// JSON object; every section and key optional, unknown keys rejected.
// Throws ConfigError (which includes validation).
RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::filesystem::path& path);
// Key reference printed by the CLI.
std::string run_config_reference();

// Fits the quality model on `corpus_size` in-focus, well-exposed renders of
// procedural scenes (noisy iff env.noise_enabled) and the detector thresholds on those scenes
// plus the bundled ones. Deterministic in the config.
SystemState calibrate_system(const RunConfig& config);

// Quality model from the configured source (fit or loaded).
SystemState prepare_system(const RunConfig& config);

// Environment collaborators for a system state; the scene pool is the
// bundled corpus.
std::shared_ptr<const EnvContext> make_context(const SystemState& state, const RunConfig& config);

GridSpec analysis_grid(const RunConfig& config);

}  // namespace hieraf

#endif  // HIERAF_HARNESS_HPP_
