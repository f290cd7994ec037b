#include "hieraf/env.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <string>

#include "hieraf/error.hpp"

namespace hieraf {

void EnvConfig::validate() const {
  if (horizon_low < 1) throw RangeError("horizon_low must be >= 1");
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw RangeError("gamma must lie in [0, 1]");
  if (!(distance_min_cm >= kDistanceMinCm && distance_min_cm <= distance_max_cm &&
        distance_max_cm <= kDistanceMaxCm)) {
    throw RangeError("distance range must lie within [140, 200] cm");
  }
  if (!(illuminance_min_lx >= kIlluminanceMinLx && illuminance_min_lx <= illuminance_max_lx &&
        illuminance_max_lx <= kIlluminanceMaxLx)) {
    throw RangeError("illuminance range must lie within [13, 300] lx");
  }
  if (factory_exposure_index < 0 || factory_exposure_index >= kExposureCount) {
    throw RangeError("factory exposure index outside [0, 145]");
  }
  if (!(factory_lens_control >= kLensMin && factory_lens_control <= kLensMax)) {
    throw RangeError("factory lens control outside [24, 70]");
  }
}

Eigen::VectorXf HighObs::flat() const {
  Eigen::VectorXf out(kHighObsDim);
  out.head(kFeatureDim) = features;
  for (int i = 0; i < kObsHistogramBins; ++i) out[kFeatureDim + i] = val[i];
  for (int i = 0; i <= kObsHistogramBins; ++i) out[kFeatureDim + kObsHistogramBins + i] = bin[i];
  return out;
}

double lens_from_action(int coarse, int fine) {
  if (coarse < 0 || coarse >= kCoarseCount || fine < 0 || fine >= kFineCount) {
    throw RangeError("lens action (" + std::to_string(coarse) + ", " + std::to_string(fine) +
                     ") out of range");
  }
  const double v = kLensMin + 2.0 * coarse + (fine - 10) / 10.0;
  return std::clamp(v, kLensMin, kLensMax);
}

LowAction action_for_lens(double control) {
  LowAction a;
  a.coarse = std::clamp(static_cast<int>(std::lround((control - kLensMin) / 2.0)), 0, kCoarseCount - 1);
  const double rest = control - (kLensMin + 2.0 * a.coarse);
  a.fine = std::clamp(static_cast<int>(std::lround(rest * 10.0)) + 10, 0, kFineCount - 1);
  return a;
}

double reward_high(int peak, double quality) {
  if (peak >= 50 && peak <= 150) return 1.0;
  if ((peak >= 25 && peak < 50) || (peak > 150 && peak <= 175)) return -0.01 * quality;
  return -1.0;
}

double reward_low(bool detected, double crop_quality) {
  return detected ? -0.01 * crop_quality : -1.0;
}

namespace {

const char* phase_name(Phase p) {
  switch (p) {
    case Phase::kAwaitHigh: return "high";
    case Phase::kAwaitLow: return "low";
    case Phase::kDone: return "done";
  }
  return "?";
}

// Crops smaller than this are zero-padded so both feature scales exist.
constexpr int kMinCropSide = 64;

HighObs high_observation(const ImageEncoder& encoder, const SensorImage& frame) {
  HighObs obs;
  obs.features = encoder.encode(frame);
  const auto h = obs_histogram(frame);
  for (int i = 0; i < kObsHistogramBins; ++i) obs.val[i] = static_cast<float>(h.val[i]);
  for (int i = 0; i <= kObsHistogramBins; ++i) obs.bin[i] = static_cast<float>(h.bin[i] / 255.0);
  return obs;
}

bool in_penalty_band(int peak) { return (peak >= 25 && peak < 50) || (peak > 150 && peak <= 175); }

}  // namespace

void write_trace_csv(std::ostream& out, const std::vector<TraceRow>& rows) {
  out << "episode,phase,action,reward,P,B,sigma,detected\n";
  for (const auto& r : rows) {
    out << r.episode << ',' << phase_name(r.phase) << ',' << r.action_a;
    if (r.action_b >= 0) out << ':' << r.action_b;
    out << ',' << r.reward << ',' << r.peak << ',' << r.quality << ',' << r.sigma << ','
        << (r.detected ? 1 : 0) << '\n';
  }
}

HierarchicalEnv::HierarchicalEnv(EnvConfig config, std::shared_ptr<const EnvContext> context)
    : config_(config), context_(std::move(context)), rng_(config.seed) {
  config_.validate();
  if (!context_ || !context_->encoder || !context_->detector || !context_->quality) {
    throw ContractError("environment context is incomplete");
  }
  if (context_->scenes.empty()) throw ContractError("environment needs at least one scene");
}

HighObs HierarchicalEnv::reset() {
  std::uniform_int_distribution<std::size_t> pick(0, context_->scenes.size() - 1);
  std::uniform_real_distribution<double> dist(config_.distance_min_cm, config_.distance_max_cm);
  std::uniform_real_distribution<double> lux(config_.illuminance_min_lx, config_.illuminance_max_lx);
  const Scene& base = context_->scenes[pick(rng_)];
  const double d = dist(rng_);
  const double e = lux(rng_);
  return reset(base.with_conditions(d, e));
}

HighObs HierarchicalEnv::reset(double distance_cm, double illuminance_lx) {
  std::uniform_int_distribution<std::size_t> pick(0, context_->scenes.size() - 1);
  return reset(context_->scenes[pick(rng_)].with_conditions(distance_cm, illuminance_lx));
}

HighObs HierarchicalEnv::reset(const Scene& scene) {
  ++episode_;
  state_.emplace(EpisodeState{scene, LensState(config_.factory_lens_control),
                              CameraState(config_.factory_exposure_index), Phase::kAwaitHigh, 0, {}});
  state_->last_frame = capture();
  return high_observation(*context_->encoder, state_->last_frame);
}

SensorImage HierarchicalEnv::capture() {
  const std::uint64_t seed = rng_();
  return render(state_->scene, state_->lens, state_->camera, {config_.noise_enabled, seed});
}

HighStep HierarchicalEnv::step_high(int exposure_index) {
  if (!state_ || state_->phase != Phase::kAwaitHigh) {
    throw ProtocolError("step_high called outside the AwaitHigh phase");
  }
  state_->camera.set(exposure_index);
  state_->last_frame = capture();
  const auto& frame = state_->last_frame;

  HighStep out;
  out.peak = histogram256(frame).peak;
  out.quality = in_penalty_band(out.peak) || config_.always_score_high
                    ? quality_score(frame, *context_->quality)
                    : std::numeric_limits<double>::quiet_NaN();
  out.reward = reward_high(out.peak, out.quality);
  out.mean_intensity = mean_intensity(frame);
  out.obs = high_observation(*context_->encoder, frame);

  const bool visible = out.peak >= 25 && out.peak <= 175;
  if (visible && config_.mode == EnvMode::kHierarchical) {
    state_->phase = Phase::kAwaitLow;
    out.handoff = true;
  } else {
    state_->phase = Phase::kDone;
    out.done = true;
  }
  if (trace_) {
    trace_->push_back({episode_, Phase::kAwaitHigh, exposure_index, -1, out.reward, out.peak,
                       out.quality, blur_sigma(state_->lens, f_star()), false});
  }
  return out;
}

LowStep HierarchicalEnv::step_low(LowAction action) {
  if (!state_ || state_->phase != Phase::kAwaitLow) {
    throw ProtocolError("step_low called outside the AwaitLow phase");
  }
  state_->lens.set(lens_from_action(action));
  state_->last_frame = capture();
  ++state_->low_steps_used;
  const auto& frame = state_->last_frame;

  LowStep out;
  out.sigma = blur_sigma(state_->lens, f_star());
  const auto box = context_->detector->detect(frame, state_->scene.object_box());
  out.detected = box.has_value();
  out.quality = std::numeric_limits<double>::quiet_NaN();
  if (out.detected) {
    const auto crop = pad_to_min(frame.crop(*box), kMinCropSide, kMinCropSide);
    out.quality = quality_score(crop, *context_->quality);
  }
  out.reward = reward_low(out.detected, out.detected ? out.quality : 0.0);
  out.done = out.detected || state_->low_steps_used >= config_.horizon_low;
  if (out.done) state_->phase = Phase::kDone;
  out.obs.features = context_->encoder->encode(frame);
  if (trace_) {
    trace_->push_back({episode_, Phase::kAwaitLow, action.coarse, action.fine, out.reward,
                       histogram256(frame).peak, out.detected ? out.quality : 0.0, out.sigma,
                       out.detected});
  }
  return out;
}

LowObs HierarchicalEnv::low_observation() const {
  if (!state_) throw ProtocolError("no active episode");
  return {context_->encoder->encode(state_->last_frame)};
}

SensorImage HierarchicalEnv::probe(double lens_control) {
  if (!state_) throw ProtocolError("no active episode");
  const LensState lens(lens_control);
  return render(state_->scene, lens, state_->camera, {config_.noise_enabled, rng_()});
}

bool HierarchicalEnv::probe_detect(const SensorImage& frame) const {
  return context_->detector->detect(frame, state_->scene.object_box()).has_value();
}

}  // namespace hieraf
