#include "hieraf/detect.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hieraf/error.hpp"
#include "hieraf/iqa.hpp"

namespace hieraf {

void DetectorThresholds::validate() const {
  if (!(sharp_min > 0.0)) throw RangeError("sharp_min must be positive");
  if (!(contrast_min > 0.0)) throw RangeError("contrast_min must be positive");
  if (!(mean_lo >= 0.0 && mean_lo < mean_hi && mean_hi <= 255.0)) {
    throw RangeError("detector mean window must satisfy 0 <= lo < hi <= 255");
  }
}

int well_exposed_index(const Scene& scene, int target_peak) {
  const LensState focused(in_focus_control(scene.distance_cm()));
  int best = 0;
  int best_gap = std::numeric_limits<int>::max();
  for (int i = 0; i < kExposureCount; ++i) {
    const auto frame = render(scene, focused, CameraState(i), {});
    const int gap = std::abs(histogram256(frame).peak - target_peak);
    if (gap < best_gap) {
      best_gap = gap;
      best = i;
    }
  }
  return best;
}

DetectorThresholds calibrate_detector(std::span<const Scene> scenes) {
  if (scenes.size() < kMinDetectorScenes) {
    throw CalibrationError("detector calibration needs at least 5 scenes");
  }
  double min_sharp = std::numeric_limits<double>::infinity();
  double min_std = std::numeric_limits<double>::infinity();
  for (const auto& scene : scenes) {
    const LensState focused(in_focus_control(scene.distance_cm()));
    const CameraState camera(well_exposed_index(scene));
    const auto frame = render(scene, focused, camera, {});
    min_sharp = std::min(min_sharp, tenengrad(frame, scene.object_box()));
    min_std = std::min(min_std, region_stats(frame, scene.object_box()).stddev);
  }
  DetectorThresholds th;
  // Rounded to float so a stored checkpoint reproduces them exactly.
  th.sharp_min = static_cast<float>(0.5 * min_sharp);
  th.contrast_min = static_cast<float>(0.25 * min_std);
  th.mean_lo = 25.0;
  th.mean_hi = 230.0;
  th.validate();
  return th;
}

std::optional<Rect> detect(const SensorImage& image, const Rect& gt_box,
                           const DetectorThresholds& th) {
  if (tenengrad(image, gt_box) < th.sharp_min) return std::nullopt;
  const auto stats = region_stats(image, gt_box);
  if (stats.mean < th.mean_lo || stats.mean > th.mean_hi) return std::nullopt;
  if (stats.stddev < th.contrast_min) return std::nullopt;
  return gt_box;
}

}  // namespace hieraf
