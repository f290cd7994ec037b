#ifndef HIERAF_TRAINER_HPP_
#define HIERAF_TRAINER_HPP_

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hieraf/agent.hpp"
#include "hieraf/curriculum.hpp"
#include "hieraf/env.hpp"
#include "hieraf/ppo.hpp"

namespace hieraf {

enum class Stage {
  kSingleAgentAf,        // lens agent alone; exposure set analytically
  kSingleAgentExposure,  // exposure agent alone; episodes end after it acts
  kHierarchical,         // both agents on the full MDP
  kStaged,               // the three above in that order
};

std::string stage_name(Stage s);
// Throws ConfigError for an unknown name.
Stage parse_stage(const std::string& name);

struct TrainConfig {
  Stage stage = Stage::kStaged;
  // Budgets: lens steps for the AF and hierarchical stages, exposure
  // decisions for the exposure stage.
  std::int64_t af_steps = 60000;
  std::int64_t exposure_steps = 30000;
  std::int64_t hierarchical_steps = 40000;
  PpoConfig ppo_high;
  PpoConfig ppo_low;
  // 0 draws distance/illuminance uniformly per episode.
  int curriculum_period = 1;
  // Mean intensity targeted by the analytic exposure of the AF stage,
  // drawn uniformly per episode.
  double oracle_mean_lo = 50.0;
  double oracle_mean_hi = 150.0;
  std::uint64_t seed = 0;

  void validate() const;  // RangeError
};

struct CurveRow {
  std::int64_t update = 0;
  std::int64_t env_steps = 0;  // high + low decisions so far
  std::optional<double> mean_r_high;
  std::optional<double> mean_r_low;
  double success_rate = 0.0;
  std::optional<double> median_af_steps;
  std::optional<double> policy_loss_h;
  std::optional<double> policy_loss_l;
  std::optional<double> entropy_h;
  std::optional<double> entropy_l;
  std::string stage;
};

void write_curve_header(std::ostream& out);
// Blank cells for agents that are inactive in the row's stage.
void write_curve_row(std::ostream& out, const CurveRow& row);

struct TrainResult {
  Agent high;
  Agent low;
  std::vector<CurveRow> curve;
  std::int64_t low_env_steps = 0;
  std::int64_t high_env_steps = 0;
};

// Index whose exposure brings the scene's mean reflectance to `target_mean`
// (ignoring blur, noise and clipping), clamped to the table.
int analytic_exposure_index(const Scene& scene, double target_mean);

// Called after every update with the newest curve row.
using CurveCallback = std::function<void(const CurveRow&)>;

// Alternates whole-episode rollout collection with PPO updates. An
// iteration collects at least `rollout_size` decisions of the stage's
// driving agent (lens agent in AF/hierarchical, exposure agent otherwise);
// the hierarchical stage then updates both agents on what was gathered.
// Single-threaded and fully deterministic in (config, env config, context).
TrainResult train(const TrainConfig& config, const EnvConfig& env_config,
                  std::shared_ptr<const EnvContext> context,
                  std::optional<Agent> high = std::nullopt, std::optional<Agent> low = std::nullopt,
                  const CurveCallback& on_row = {});

}  // namespace hieraf

#endif  // HIERAF_TRAINER_HPP_
