#ifndef HIERAF_OPTICS_HPP_
#define HIERAF_OPTICS_HPP_

#include <cstdint>
#include <memory>

#include "hieraf/image.hpp"

namespace hieraf {

inline constexpr int kExposureCount = 146;
inline constexpr double kExposureMinUs = 20.0;
inline constexpr double kExposureMaxUs = 1.0e6;

inline constexpr double kLensMin = 24.0;
inline constexpr double kLensMax = 70.0;

inline constexpr double kDistanceMinCm = 140.0;
inline constexpr double kDistanceMaxCm = 200.0;
inline constexpr double kIlluminanceMinLx = 13.0;
inline constexpr double kIlluminanceMaxLx = 300.0;

// Pixels of defocus blur per lens control unit away from focus.
inline constexpr double kBlurPerControl = 0.25;
// Sensor gain: illuminance x exposure (lx*us) mapped to full scale.
inline constexpr double kSensorGain = 3.0e6;

// Ground-truth scene: the simulator's latent state. Immutable; copies share
// the reflectance buffer.
class Scene {
 public:
  // Throws RangeError when any invariant is violated.
  Scene(Plane reflectance, Rect object_box, double distance_cm,
        double illuminance_lx);

  const Plane& reflectance() const { return *reflectance_; }
  const Rect& object_box() const { return object_box_; }
  double distance_cm() const { return distance_cm_; }
  double illuminance_lx() const { return illuminance_lx_; }
  int width() const { return reflectance_->width(); }
  int height() const { return reflectance_->height(); }

  // Same reflectance and box under different geometry/lighting.
  Scene with_conditions(double distance_cm, double illuminance_lx) const;

 private:
  Scene(std::shared_ptr<const Plane> reflectance, Rect object_box,
        double distance_cm, double illuminance_lx);

  std::shared_ptr<const Plane> reflectance_;
  Rect object_box_;
  double distance_cm_;
  double illuminance_lx_;
};

class LensState {
 public:
  explicit LensState(double control = kLensMin) { set(control); }
  double control() const { return control_; }
  // Clamps to [kLensMin, kLensMax].
  void set(double control);

 private:
  double control_ = kLensMin;
};

class CameraState {
 public:
  explicit CameraState(int exposure_index = 0) { set(exposure_index); }
  int exposure_index() const { return exposure_index_; }
  double exposure_us() const;
  // Throws RangeError outside [0, kExposureCount).
  void set(int exposure_index);

 private:
  int exposure_index_ = 0;
};

// Log-uniform exposure table: 20 us * (1e6 / 20)^(index / 145).
double exposure_value(int index);

// Lens control value that brings an object at `distance_cm` into focus.
inline double in_focus_control(double distance_cm) {
  return distance_cm / 2.0 - 40.0;
}

double blur_sigma(const LensState& lens, double f_star);

// Separable, normalized Gaussian blur with kernel radius ceil(3 sigma) and
// edge replication. Returns the input unchanged when sigma < 0.05.
Plane gaussian_blur(const Plane& input, double sigma);

struct RenderOptions {
  bool noise_enabled = false;
  std::uint64_t seed = 0;
};

// Exposure-scaled intensity 255 * R * (E_v * t_ex) / K before blur.
Plane exposed_intensity(const Scene& scene, const CameraState& camera);
// Same for an arbitrary exposure time off the index table.
Plane exposed_intensity_us(const Scene& scene, double exposure_us);

// Pre-quantization image: exposure, defocus blur and (optionally) sensor
// noise, without clipping or rounding.
Plane render_linear(const Scene& scene, const LensState& lens,
                    const CameraState& camera, const RenderOptions& options);

// Full pipeline: render_linear followed by clamp to [0, 255] and
// round-half-up quantization. Pure and deterministic in its arguments.
SensorImage render(const Scene& scene, const LensState& lens,
                   const CameraState& camera, const RenderOptions& options);

// Variants taking an exposure time in microseconds instead of an index.
Plane render_linear_us(const Scene& scene, const LensState& lens,
                       double exposure_us, const RenderOptions& options);
SensorImage render_us(const Scene& scene, const LensState& lens,
                      double exposure_us, const RenderOptions& options);

SensorImage quantize(const Plane& linear);

}  // namespace hieraf

#endif  // HIERAF_OPTICS_HPP_
