#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

#include "hieraf/error.hpp"
#include "hieraf/harness.hpp"
#include "hieraf/scene.hpp"

namespace hieraf {

namespace {

using nlohmann::json;

class Section {
 public:
  Section(const json& j, std::string path, std::set<std::string> allowed) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(label() + " must be a JSON object");
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!allowed.count(it.key())) throw ConfigError("unknown config key '" + qualify(it.key()) + "'");
    }
  }

  bool has(const std::string& key) const { return j_.contains(key); }
  const json& raw(const std::string& key) const { return j_.at(key); }
  std::string qualify(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  template <typename T>
  void get(const std::string& key, T& out) const {
    if (!j_.contains(key)) return;
    try {
      const json& v = j_.at(key);
      if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) throw ConfigError("");
      } else if constexpr (std::is_integral_v<T>) {
        if (!v.is_number_integer()) throw ConfigError("");
        if (std::is_unsigned_v<T> && v.get<long long>() < 0 && !v.is_number_unsigned()) throw ConfigError("");
      } else if constexpr (std::is_floating_point_v<T>) {
        if (!v.is_number()) throw ConfigError("");
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v.is_string()) throw ConfigError("");
      }
      out = v.get<T>();
    } catch (const std::exception&) {
      throw ConfigError("config key '" + qualify(key) + "' has the wrong type");
    }
  }

  void range(const std::string& key, double& lo, double& hi) const {
    if (!j_.contains(key)) return;
    const json& v = j_.at(key);
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
      throw ConfigError("config key '" + qualify(key) + "' must be a [low, high] pair");
    }
    lo = v[0].get<double>();
    hi = v[1].get<double>();
  }

 private:
  std::string label() const { return path_.empty() ? "config" : "config section '" + path_ + "'"; }
  const json& j_;
  std::string path_;
};

void parse_ppo(const Section& root, const std::string& key, PpoConfig& p) {
  if (!root.has(key)) return;
  Section s(root.raw(key), key,
            {"clip_eps", "gamma", "gae_lambda", "epochs", "minibatch_size", "learning_rate", "value_coef",
             "entropy_coef", "rollout_size", "max_grad_norm"});
  s.get("clip_eps", p.clip_eps);
  s.get("gamma", p.gamma);
  s.get("gae_lambda", p.gae_lambda);
  s.get("epochs", p.epochs);
  s.get("minibatch_size", p.minibatch_size);
  s.get("learning_rate", p.learning_rate);
  s.get("value_coef", p.value_coef);
  s.get("entropy_coef", p.entropy_coef);
  s.get("rollout_size", p.rollout_size);
  s.get("max_grad_norm", p.max_grad_norm);
}

template <typename F>
void rethrow_as_config(const std::string& what, F&& f) {
  try {
    f();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(what + ": " + e.what());
  }
}

}  // namespace

void RunConfig::validate() const {
  if (quality_source != "generated" && quality_source != "checkpoint") {
    throw ConfigError("quality_model.source must be 'generated' or 'checkpoint'");
  }
  if (quality_source == "checkpoint" && quality_path.empty()) {
    throw ConfigError("quality_model.path is required when source is 'checkpoint'");
  }
  if (corpus_size < 20) throw ConfigError("quality_model.corpus_size must be >= 20");
  if (detector_kind != "oracle" && detector_kind != "external") {
    throw ConfigError("detector.kind must be 'oracle' or 'external'");
  }
  if (detector_kind == "external" && detector_command.empty()) {
    throw ConfigError("detector.command is required for an external detector");
  }
  if (eval_episodes < 1) throw ConfigError("eval.episodes must be >= 1");
  if (analyze_scene < 0 || analyze_scene >= kBundledSceneCount) throw ConfigError("analyze.scene out of range");
  if (analyze_exposure_stride < 1) throw ConfigError("analyze.exposure_stride must be >= 1");
  if (!(analyze_lens_step > 0.0)) throw ConfigError("analyze.lens_step must be positive");
  if (!(analyze_illuminance_lx >= kIlluminanceMinLx && analyze_illuminance_lx <= kIlluminanceMaxLx)) {
    throw ConfigError("analyze.illuminance_lx outside [13, 300]");
  }
  if (!(analyze_distance_cm >= kDistanceMinCm && analyze_distance_cm <= kDistanceMaxCm)) {
    throw ConfigError("analyze.distance_cm outside [140, 200]");
  }
  rethrow_as_config("env", [&] { env.validate(); });
  rethrow_as_config("train", [&] { train.validate(); });
}

RunConfig parse_run_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  RunConfig c;
  Section root(j, "",
               {"seed", "out", "stage", "optics", "encoder", "quality_model", "detector", "env", "ppo_high",
                "ppo_low", "train", "eval", "analyze"});
  root.get("seed", c.seed);
  std::string out = c.out.string();
  root.get("out", out);
  c.out = out;
  if (root.has("stage")) {
    std::string stage;
    root.get("stage", stage);
    c.train.stage = parse_stage(stage);
  }
  if (root.has("optics")) {
    Section s(root.raw("optics"), "optics", {"noise"});
    s.get("noise", c.env.noise_enabled);
  }
  if (root.has("encoder")) {
    Section s(root.raw("encoder"), "encoder", {"seed"});
    s.get("seed", c.encoder_seed);
  }
  if (root.has("quality_model")) {
    Section s(root.raw("quality_model"), "quality_model", {"source", "path", "corpus_size"});
    s.get("source", c.quality_source);
    std::string path;
    s.get("path", path);
    c.quality_path = path;
    s.get("corpus_size", c.corpus_size);
  }
  if (root.has("detector")) {
    Section s(root.raw("detector"), "detector", {"kind", "command"});
    s.get("kind", c.detector_kind);
    if (s.has("command")) {
      const auto& cmd = s.raw("command");
      if (!cmd.is_array()) throw ConfigError("detector.command must be an array of strings");
      for (const auto& a : cmd) {
        if (!a.is_string()) throw ConfigError("detector.command must be an array of strings");
        c.detector_command.push_back(a.get<std::string>());
      }
    }
  }
  if (root.has("env")) {
    Section s(root.raw("env"), "env",
              {"horizon_low", "gamma", "distance_cm", "illuminance_lx", "factory_exposure_index", "factory_lens"});
    s.get("horizon_low", c.env.horizon_low);
    s.get("gamma", c.env.gamma);
    s.range("distance_cm", c.env.distance_min_cm, c.env.distance_max_cm);
    s.range("illuminance_lx", c.env.illuminance_min_lx, c.env.illuminance_max_lx);
    s.get("factory_exposure_index", c.env.factory_exposure_index);
    s.get("factory_lens", c.env.factory_lens_control);
  }
  parse_ppo(root, "ppo_high", c.train.ppo_high);
  parse_ppo(root, "ppo_low", c.train.ppo_low);
  if (root.has("train")) {
    Section s(root.raw("train"), "train",
              {"af_steps", "exposure_steps", "hierarchical_steps", "curriculum_period", "oracle_mean"});
    s.get("af_steps", c.train.af_steps);
    s.get("exposure_steps", c.train.exposure_steps);
    s.get("hierarchical_steps", c.train.hierarchical_steps);
    s.get("curriculum_period", c.train.curriculum_period);
    s.range("oracle_mean", c.train.oracle_mean_lo, c.train.oracle_mean_hi);
  }
  if (root.has("eval")) {
    Section s(root.raw("eval"), "eval", {"episodes", "seed"});
    s.get("episodes", c.eval_episodes);
    s.get("seed", c.eval_seed);
  }
  if (root.has("analyze")) {
    Section s(root.raw("analyze"), "analyze",
              {"scene", "illuminance_lx", "distance_cm", "exposure_stride", "lens_step"});
    s.get("scene", c.analyze_scene);
    s.get("illuminance_lx", c.analyze_illuminance_lx);
    s.get("distance_cm", c.analyze_distance_cm);
    s.get("exposure_stride", c.analyze_exposure_stride);
    s.get("lens_step", c.analyze_lens_step);
  }
  c.train.seed = c.seed;
  c.validate();
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str());
}

std::string run_config_reference() {
  return R"(Config keys (JSON; every key optional, unknown keys rejected):
  seed                          run seed (integer)
  out                           output directory
  stage                         single-agent-AF | single-agent-exposure | hierarchical | staged
  optics.noise                  sensor noise on/off
  encoder.seed                  random-feature encoder seed
  quality_model.source          generated | checkpoint
  quality_model.path            checkpoint holding quality/* blocks
  quality_model.corpus_size     pristine renders for the generated model (>= 20)
  detector.kind                 oracle | external
  detector.command              argv of an external detector process
  env.horizon_low               lens steps per episode (>= 1)
  env.gamma                     discount in [0, 1]
  env.distance_cm               [low, high] within [140, 200]
  env.illuminance_lx            [low, high] within [13, 300]
  env.factory_exposure_index    exposure every episode starts from
  env.factory_lens              lens value every episode starts from
  ppo_high.*, ppo_low.*         clip_eps, gamma, gae_lambda, epochs, minibatch_size,
                                learning_rate, value_coef, entropy_coef, rollout_size,
                                max_grad_norm
  train.af_steps                lens-agent steps in the single-agent-AF stage
  train.exposure_steps          exposure decisions in the single-agent-exposure stage
  train.hierarchical_steps      lens-agent steps in the hierarchical stage
  train.curriculum_period       episodes per curriculum step (0: uniform conditions)
  train.oracle_mean             [low, high] mean intensity of the AF stage's exposure
  eval.episodes, eval.seed      greedy evaluation episodes and env seed
  analyze.scene                 bundled scene index for the exposure x focus grid
  analyze.illuminance_lx        grid illuminance
  analyze.distance_cm           grid distance
  analyze.exposure_stride       exposure index stride
  analyze.lens_step             lens value stride
)";
}

SystemState calibrate_system(const RunConfig& config) {
  std::mt19937_64 rng(config.seed ^ 0xCA11B8A7E5EEDULL);
  std::uniform_real_distribution<double> dist(kDistanceMinCm, kDistanceMaxCm);
  std::uniform_real_distribution<double> lux(kIlluminanceMinLx, kIlluminanceMaxLx);
  std::vector<Scene> scenes;
  std::vector<SensorImage> pristine;
  for (int k = 0; k < config.corpus_size; ++k) {
    const double d = dist(rng);
    const double e = lux(rng);
    scenes.push_back(procedural_scene(1000 + static_cast<std::uint64_t>(k), d, e));
    const Scene& s = scenes.back();
    pristine.push_back(render(s, LensState(in_focus_control(d)), CameraState(well_exposed_index(s)),
                              {config.env.noise_enabled, rng()}));
  }
  SystemState state;
  state.encoder_seed = config.encoder_seed;
  state.quality = fit_pristine(pristine);
  for (const auto& s : bundled_scenes()) scenes.push_back(s);
  state.thresholds = calibrate_detector(scenes);
  return state;
}

SystemState prepare_system(const RunConfig& config) {
  if (config.quality_source == "generated") return calibrate_system(config);
  SystemState state = from_blocks(load_checkpoint(config.quality_path));
  state.encoder_seed = config.encoder_seed;
  state.high.reset();
  state.low.reset();
  return state;
}

std::shared_ptr<const EnvContext> make_context(const SystemState& state, const RunConfig& config) {
  if (!state.quality) throw ContractError("system state has no quality model");
  auto ctx = std::make_shared<EnvContext>();
  ctx->encoder = std::make_shared<RandomConvEncoder>(state.encoder_seed);
  if (config.detector_kind == "external") {
    ctx->detector = std::make_shared<ExternalProcessDetector>(config.detector_command, config.out / "detector");
  } else {
    ctx->detector = std::make_shared<OracleDetector>(state.thresholds);
  }
  ctx->quality = std::make_shared<QualityModel>(*state.quality);
  ctx->scenes = bundled_scenes();
  return ctx;
}

GridSpec analysis_grid(const RunConfig& config) {
  GridSpec g;
  g.illuminance_lx = config.analyze_illuminance_lx;
  g.distance_cm = config.analyze_distance_cm;
  for (int i = 0; i < kExposureCount; i += config.analyze_exposure_stride) g.exposure_indices.push_back(i);
  for (double c = kLensMin; c <= kLensMax + 1e-9; c += config.analyze_lens_step) g.lens_values.push_back(c);
  return g;
}

}  // namespace hieraf
