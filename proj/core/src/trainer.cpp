#include "hieraf/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <ostream>

#include "hieraf/error.hpp"

namespace hieraf {

std::string stage_name(Stage s) {
  switch (s) {
    case Stage::kSingleAgentAf: return "single-agent-AF";
    case Stage::kSingleAgentExposure: return "single-agent-exposure";
    case Stage::kHierarchical: return "hierarchical";
    case Stage::kStaged: return "staged";
  }
  return "?";
}

Stage parse_stage(const std::string& name) {
  for (Stage s : {Stage::kSingleAgentAf, Stage::kSingleAgentExposure, Stage::kHierarchical, Stage::kStaged}) {
    if (stage_name(s) == name) return s;
  }
  throw ConfigError("unknown stage '" + name +
                    "' (expected single-agent-AF, single-agent-exposure, hierarchical or staged)");
}

void TrainConfig::validate() const {
  if (af_steps < 0 || exposure_steps < 0 || hierarchical_steps < 0) {
    throw RangeError("training budgets must be non-negative");
  }
  if (curriculum_period < 0) throw RangeError("curriculum_period must be >= 0");
  if (!(oracle_mean_lo > 0.0 && oracle_mean_lo <= oracle_mean_hi && oracle_mean_hi <= 255.0)) {
    throw RangeError("oracle mean range must satisfy 0 < lo <= hi <= 255");
  }
  ppo_high.validate();
  ppo_low.validate();
}

void write_curve_header(std::ostream& out) {
  out << "update,env_steps,mean_r_high,mean_r_low,success_rate,median_af_steps,policy_loss_h,"
         "policy_loss_l,entropy_h,entropy_l,stage\n";
}

void write_curve_row(std::ostream& out, const CurveRow& row) {
  auto cell = [&](const std::optional<double>& v) {
    out << ',';
    if (v) out << std::setprecision(8) << *v;
  };
  out << row.update << ',' << row.env_steps;
  cell(row.mean_r_high);
  cell(row.mean_r_low);
  cell(row.success_rate);
  cell(row.median_af_steps);
  cell(row.policy_loss_h);
  cell(row.policy_loss_l);
  cell(row.entropy_h);
  cell(row.entropy_l);
  out << ',' << row.stage << '\n';
}

int analytic_exposure_index(const Scene& scene, double target_mean) {
  const auto r = scene.reflectance().data();
  const double mean_r = std::accumulate(r.begin(), r.end(), 0.0) / static_cast<double>(r.size());
  if (!(mean_r > 0.0)) return kExposureCount - 1;
  const double t = target_mean * kSensorGain / (255.0 * mean_r * scene.illuminance_lx());
  const double idx = (kExposureCount - 1) * std::log(t / kExposureMinUs) / std::log(kExposureMaxUs / kExposureMinUs);
  return std::clamp(static_cast<int>(std::lround(idx)), 0, kExposureCount - 1);
}

namespace {

std::uint64_t mix(std::uint64_t seed, std::uint64_t tag) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (tag + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double mean_of(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

constexpr int kWarmupObservations = 256;

class StageRunner {
 public:
  StageRunner(const TrainConfig& config, const EnvConfig& env_config, std::shared_ptr<const EnvContext> context,
              TrainResult& result, const CurveCallback& on_row)
      : config_(config), env_config_(env_config), context_(std::move(context)), result_(result), on_row_(on_row) {}

  void run(Stage stage, std::int64_t budget) {
    if (budget <= 0) return;
    const auto tag = static_cast<std::uint64_t>(stage) * 16;
    EnvConfig ec = env_config_;
    ec.mode = stage == Stage::kSingleAgentExposure ? EnvMode::kExposureOnly : EnvMode::kHierarchical;
    ec.seed = mix(config_.seed, tag + 1);
    HierarchicalEnv env(ec, context_);
    std::mt19937_64 rng(mix(config_.seed, tag + 2));

    const bool learn_high = stage != Stage::kSingleAgentAf;
    const bool learn_low = stage != Stage::kSingleAgentExposure;
    const PpoConfig& driver = learn_low ? config_.ppo_low : config_.ppo_high;

    if (learn_high && !result_.high.normalizer.has_snapshot()) warm_high(env);
    if (learn_low && !result_.low.normalizer.has_snapshot()) warm_low(env, rng);

    std::int64_t used = 0;
    while (used < budget) {
      result_.high.normalizer.refresh();
      result_.low.normalizer.refresh();
      RolloutBuffer hb;
      RolloutBuffer lb;
      std::vector<double> r_high;
      std::vector<double> r_low;
      std::vector<double> af_steps;
      int episodes = 0;
      int successes = 0;
      std::int64_t collected = 0;

      while (collected < driver.rollout_size) {
        const HighObs ho = reset(env);
        ++episodes;
        int index = 0;
        if (learn_high) {
          const Eigen::VectorXf raw = ho.flat();
          result_.high.normalizer.observe(raw);
          const Eigen::VectorXf x = result_.high.normalizer.apply(raw);
          const auto out = result_.high.forward(x);
          const auto a = sample_action(out.probs, rng);
          index = a.actions[0];
          hb.transitions.push_back({x, a.actions, a.log_prob, 0.0, out.value, true});
        } else {
          std::uniform_real_distribution<double> target(config_.oracle_mean_lo, config_.oracle_mean_hi);
          index = analytic_exposure_index(env.state().scene, target(rng));
        }
        const auto hs = env.step_high(index);
        ++result_.high_env_steps;
        if (learn_high) {
          hb.transitions.back().reward = hs.reward;
          r_high.push_back(hs.reward);
        }
        if (!learn_low) {
          ++collected;
          successes += hs.reward == 1.0;
          continue;
        }
        int steps = 0;
        bool detected = false;
        if (hs.handoff) {
          while (true) {
            const Eigen::VectorXf raw = env.low_observation().features;
            result_.low.normalizer.observe(raw);
            const Eigen::VectorXf x = result_.low.normalizer.apply(raw);
            const auto out = result_.low.forward(x);
            const auto a = sample_action(out.probs, rng);
            const auto ls = env.step_low({a.actions[0], a.actions[1]});
            ++steps;
            ++collected;
            ++result_.low_env_steps;
            r_low.push_back(ls.reward);
            lb.transitions.push_back({x, a.actions, a.log_prob, ls.reward, out.value, ls.done});
            if (ls.detected) detected = true;
            if (ls.done) break;
          }
        }
        successes += detected;
        af_steps.push_back(detected ? steps : ec.horizon_low);
      }
      used += collected;

      CurveRow row;
      row.stage = stage_name(stage);
      if (learn_low && !lb.empty()) {
        compute_advantages(lb, config_.ppo_low.gamma, config_.ppo_low.gae_lambda);
        const auto d = ppo_update(result_.low.params, lb, config_.ppo_low, rng);
        row.policy_loss_l = d.policy_loss;
        row.entropy_l = d.entropy;
      }
      if (learn_high && hb.size() >= 2) {
        compute_advantages(hb, config_.ppo_high.gamma, config_.ppo_high.gae_lambda);
        const auto d = ppo_update(result_.high.params, hb, config_.ppo_high, rng);
        row.policy_loss_h = d.policy_loss;
        row.entropy_h = d.entropy;
      }
      row.update = static_cast<std::int64_t>(result_.curve.size()) + 1;
      row.env_steps = result_.high_env_steps + result_.low_env_steps;
      if (learn_high) row.mean_r_high = mean_of(r_high);
      if (learn_low) {
        row.mean_r_low = mean_of(r_low);
        row.median_af_steps = median_of(af_steps);
      }
      row.success_rate = episodes ? static_cast<double>(successes) / episodes : 0.0;
      result_.curve.push_back(row);
      if (on_row_) on_row_(row);
    }
  }

 private:
  HighObs reset(HierarchicalEnv& env) {
    const std::int64_t e = episode_++;
    if (config_.curriculum_period == 0) return env.reset();
    const auto c = curriculum({config_.curriculum_period}, e);
    return env.reset(c.distance_cm, c.illuminance_lx);
  }

  // Input statistics from the factory frames of fresh episodes.
  void warm_high(HierarchicalEnv& env) {
    for (int i = 0; i < kWarmupObservations; ++i) result_.high.normalizer.observe(reset(env).flat());
    result_.high.normalizer.refresh();
  }

  // Input statistics from lens frames under uniformly random lens moves.
  void warm_low(HierarchicalEnv& env, std::mt19937_64& rng) {
    int seen = 0;
    while (seen < kWarmupObservations) {
      reset(env);
      std::uniform_real_distribution<double> target(config_.oracle_mean_lo, config_.oracle_mean_hi);
      const auto hs = env.step_high(analytic_exposure_index(env.state().scene, target(rng)));
      ++result_.high_env_steps;
      if (!hs.handoff) continue;
      while (seen < kWarmupObservations) {
        result_.low.normalizer.observe(env.low_observation().features);
        ++seen;
        const int coarse = std::uniform_int_distribution<int>(0, kCoarseCount - 1)(rng);
        const int fine = std::uniform_int_distribution<int>(0, kFineCount - 1)(rng);
        const auto ls = env.step_low({coarse, fine});
        ++result_.low_env_steps;
        if (ls.done) break;
      }
    }
    result_.low.normalizer.refresh();
  }

  const TrainConfig& config_;
  EnvConfig env_config_;
  std::shared_ptr<const EnvContext> context_;
  TrainResult& result_;
  const CurveCallback& on_row_;
  std::int64_t episode_ = 0;
};

}  // namespace

TrainResult train(const TrainConfig& config, const EnvConfig& env_config, std::shared_ptr<const EnvContext> context,
                  std::optional<Agent> high, std::optional<Agent> low, const CurveCallback& on_row) {
  config.validate();
  env_config.validate();
  TrainResult result{high ? std::move(*high) : Agent::create(high_agent_spec(), mix(config.seed, 1001)),
                     low ? std::move(*low) : Agent::create(low_agent_spec(), mix(config.seed, 1002)),
                     {}, 0, 0};
  StageRunner runner(config, env_config, std::move(context), result, on_row);
  switch (config.stage) {
    case Stage::kSingleAgentAf: runner.run(Stage::kSingleAgentAf, config.af_steps); break;
    case Stage::kSingleAgentExposure: runner.run(Stage::kSingleAgentExposure, config.exposure_steps); break;
    case Stage::kHierarchical: runner.run(Stage::kHierarchical, config.hierarchical_steps); break;
    case Stage::kStaged:
      runner.run(Stage::kSingleAgentAf, config.af_steps);
      runner.run(Stage::kSingleAgentExposure, config.exposure_steps);
      runner.run(Stage::kHierarchical, config.hierarchical_steps);
      break;
  }
  return result;
}

}  // namespace hieraf
