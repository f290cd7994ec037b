#include <algorithm>
#include <cmath>

#include "hieraf/bench.hpp"
#include "hieraf/error.hpp"
#include "hieraf/iqa.hpp"

namespace hieraf {

SweepResult sweep_af(HierarchicalEnv& env) {
  if (env.state().phase != Phase::kAwaitLow) throw ProtocolError("sweep_af needs a handed-off episode");
  SweepResult out;
  double best = -1.0;
  for (int i = 0; i < kSweepPositions; ++i) {
    const double c = kLensMin + 0.5 * i;
    const double t = tenengrad(env.probe(c));
    out.lens.push_back(c);
    out.profile.push_back(t);
    if (t > best) {
      best = t;
      out.best_lens = c;
    }
  }
  out.steps = kSweepPositions;
  return out;
}

HillclimbResult hillclimb_af(HierarchicalEnv& env, double step0) {
  if (env.state().phase != Phase::kAwaitLow) throw ProtocolError("hillclimb_af needs a handed-off episode");
  HillclimbResult out;
  double c = env.state().lens.control();
  auto look = [&](double lens, double& sharpness) {
    const auto frame = env.probe(lens);
    ++out.steps;
    sharpness = tenengrad(frame);
    return env.probe_detect(frame);
  };

  double current = 0.0;
  out.lens = c;
  if ((out.detected = look(c, current))) return out;
  double step = step0;
  double dir = 1.0;
  while (step >= 0.25 && out.steps < kHillclimbMaxRenders) {
    bool moved = false;
    for (int attempt = 0; attempt < 2 && out.steps < kHillclimbMaxRenders; ++attempt) {
      const double next = std::clamp(c + dir * step, kLensMin, kLensMax);
      if (next == c) {
        dir = -dir;
        continue;
      }
      double s = 0.0;
      const bool hit = look(next, s);
      if (hit) {
        out.lens = next;
        out.detected = true;
        return out;
      }
      if (s > current) {
        c = next;
        current = s;
        moved = true;
        break;
      }
      dir = -dir;
    }
    if (!moved) step *= 0.5;
  }
  out.lens = c;
  return out;
}

AutoExposureResult auto_exposure_baseline(const Scene& scene) {
  const LensState focused(in_focus_control(scene.distance_cm()));
  auto frame_at = [&](int index) { return render(scene, focused, CameraState(index), {}); };

  AutoExposureResult out;
  auto top = frame_at(kExposureCount - 1);
  if (mean_intensity(top) < kAutoExposureTargetMean) {
    out.index = kExposureCount - 1;
    out.saturated = true;
    out.mean = mean_intensity(top);
    out.histogram = histogram256(top).counts;
    return out;
  }
  int lo = 0;
  int hi = kExposureCount - 1;  // invariant: mean(hi) >= target
  while (lo < hi) {
    const int mid = (lo + hi) / 2;
    if (mean_intensity(frame_at(mid)) >= kAutoExposureTargetMean) {
      hi = mid;
    } else {
      lo = mid + 1;
    }
  }
  const auto frame = frame_at(hi);
  out.index = hi;
  out.mean = mean_intensity(frame);
  out.histogram = histogram256(frame).counts;
  return out;
}

}  // namespace hieraf
