#ifndef HIERAF_ENV_HPP_
#define HIERAF_ENV_HPP_

#include <array>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <random>
#include <vector>

#include "hieraf/detect.hpp"
#include "hieraf/encoder.hpp"
#include "hieraf/iqa.hpp"
#include "hieraf/optics.hpp"

namespace hieraf {

inline constexpr int kHighActionCount = kExposureCount;
inline constexpr int kCoarseCount = 24;
inline constexpr int kFineCount = 21;
inline constexpr int kHighObsDim = kFeatureDim + kObsHistogramBins + kObsHistogramBins + 1;
inline constexpr int kLowObsDim = kFeatureDim;

// Simulated latency of one low-level step: a 20 ms frame at 50 fps plus
// 80 ms of lens settling.
inline constexpr double kStepLatencySeconds = 0.020 + 0.080;

enum class EnvMode {
  kHierarchical,  // exposure step, then lens steps after a handoff
  kExposureOnly,  // single exposure agent; episode ends after its step
};

struct EnvConfig {
  int horizon_low = 10;
  double gamma = 0.99;
  bool noise_enabled = true;
  std::uint64_t seed = 0;
  double distance_min_cm = kDistanceMinCm;
  double distance_max_cm = kDistanceMaxCm;
  double illuminance_min_lx = kIlluminanceMinLx;
  double illuminance_max_lx = kIlluminanceMaxLx;
  // Camera/lens settings every episode starts from.
  int factory_exposure_index = 87;
  double factory_lens_control = kLensMin;
  EnvMode mode = EnvMode::kHierarchical;
  // Score every high-level frame, not only those whose reward needs it.
  bool always_score_high = false;

  // Throws RangeError on any violated invariant.
  void validate() const;
};

struct HighObs {
  FeatureVector features;  // kFeatureDim
  std::array<float, kObsHistogramBins> val{};
  std::array<float, kObsHistogramBins + 1> bin{};  // edges / 255

  // features, val, bin concatenated (length kHighObsDim).
  Eigen::VectorXf flat() const;
};

struct LowObs {
  FeatureVector features;
};

enum class Phase { kAwaitHigh, kAwaitLow, kDone };

struct LowAction {
  int coarse = 0;  // 0..23
  int fine = 10;   // 0..20
};

// clamp(24 + 2 coarse + 0.1 (fine - 10), 24, 70). Throws RangeError.
double lens_from_action(int coarse, int fine);
inline double lens_from_action(LowAction a) { return lens_from_action(a.coarse, a.fine); }
// Closest action to a lens control value.
LowAction action_for_lens(double control);

// r^H: 1 for P in [50, 150]; -0.01 B for P in [25, 50) or (150, 175];
// -1 otherwise.
double reward_high(int peak, double quality);
// r^L: -1 when the object is not detected, else -0.01 B of the crop.
double reward_low(bool detected, double crop_quality);

struct EpisodeState {
  Scene scene;
  LensState lens;
  CameraState camera;
  Phase phase = Phase::kAwaitHigh;
  int low_steps_used = 0;
  SensorImage last_frame;
};

struct HighStep {
  HighObs obs;
  double reward = 0.0;
  bool handoff = false;
  bool done = false;
  int peak = 0;
  double quality = 0.0;  // full-frame score; NaN unless P is in a penalty band
  double mean_intensity = 0.0;
};

struct LowStep {
  LowObs obs;
  double reward = 0.0;
  bool detected = false;
  bool done = false;
  double quality = 0.0;  // crop score when detected, else NaN
  double sigma = 0.0;
};

// One row of an episode trace.
struct TraceRow {
  std::uint64_t episode = 0;
  Phase phase = Phase::kAwaitHigh;
  int action_a = 0;   // exposure index, or coarse index
  int action_b = -1;  // fine index for lens steps
  double reward = 0.0;
  int peak = 0;
  double quality = 0.0;
  double sigma = 0.0;
  bool detected = false;
};
void write_trace_csv(std::ostream& out, const std::vector<TraceRow>& rows);

// Immutable collaborators shared by any number of environments.
struct EnvContext {
  std::shared_ptr<const ImageEncoder> encoder;
  std::shared_ptr<const ObjectDetector> detector;
  std::shared_ptr<const QualityModel> quality;
  // Scene textures; reset draws one and re-samples distance/illuminance.
  std::vector<Scene> scenes;
};

// The two-level MDP. Single-threaded; independent instances may run on
// different threads.
class HierarchicalEnv {
 public:
  HierarchicalEnv(EnvConfig config, std::shared_ptr<const EnvContext> context);

  // Random scene from the pool, distance ~ U[dmin, dmax], illuminance ~
  // U[emin, emax], factory camera/lens.
  HighObs reset();
  // Explicit scene (curriculum, evaluation grids).
  HighObs reset(const Scene& scene);
  // Random scene from the pool under the given conditions (curriculum).
  HighObs reset(double distance_cm, double illuminance_lx);

  // Sets the exposure index and renders. Hands off to the lens agent when
  // the histogram peak lies in [25, 175]; otherwise the episode ends.
  // Throws ProtocolError out of phase, RangeError for a bad index.
  HighStep step_high(int exposure_index);

  // Sets the lens, renders and runs the detector. Detection ends the
  // episode; so does exhausting horizon_low. Throws ProtocolError.
  LowStep step_low(LowAction action);

  // The lens agent's view of the current frame.
  LowObs low_observation() const;

  // Renders at an arbitrary lens value with the current scene and camera
  // without touching the episode (used by classical baselines). Draws a
  // fresh noise seed.
  SensorImage probe(double lens_control);
  bool probe_detect(const SensorImage& frame) const;

  const EpisodeState& state() const { return *state_; }
  const EnvConfig& config() const { return config_; }
  const EnvContext& context() const { return *context_; }
  double f_star() const { return in_focus_control(state_->scene.distance_cm()); }
  std::uint64_t episode_index() const { return episode_; }

  void set_trace(std::vector<TraceRow>* sink) { trace_ = sink; }

 private:
  SensorImage capture();

  EnvConfig config_;
  std::shared_ptr<const EnvContext> context_;
  std::mt19937_64 rng_;
  std::optional<EpisodeState> state_;
  std::uint64_t episode_ = 0;
  std::vector<TraceRow>* trace_ = nullptr;
};

}  // namespace hieraf

#endif  // HIERAF_ENV_HPP_
