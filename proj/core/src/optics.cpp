#include "hieraf/optics.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "hieraf/error.hpp"

namespace hieraf {

Scene::Scene(Plane reflectance, Rect object_box, double distance_cm,
             double illuminance_lx)
    : Scene(std::make_shared<const Plane>(std::move(reflectance)), object_box,
            distance_cm, illuminance_lx) {}

Scene::Scene(std::shared_ptr<const Plane> reflectance, Rect object_box,
             double distance_cm, double illuminance_lx)
    : reflectance_(std::move(reflectance)),
      object_box_(object_box),
      distance_cm_(distance_cm),
      illuminance_lx_(illuminance_lx) {
  if (reflectance_->width() <= 0 || reflectance_->height() <= 0) {
    throw RangeError("scene reflectance is empty");
  }
  if (!object_box_.inside(width(), height())) {
    throw RangeError("object box does not lie inside the image");
  }
  for (double r : reflectance_->data()) {
    if (!(r >= 0.0 && r <= 1.0)) {
      throw RangeError("reflectance outside [0, 1]");
    }
  }
  if (!(distance_cm >= kDistanceMinCm && distance_cm <= kDistanceMaxCm)) {
    throw RangeError("distance " + std::to_string(distance_cm) +
                     " cm outside [140, 200]");
  }
  if (!(illuminance_lx >= kIlluminanceMinLx &&
        illuminance_lx <= kIlluminanceMaxLx)) {
    throw RangeError("illuminance " + std::to_string(illuminance_lx) +
                     " lx outside [13, 300]");
  }
}

Scene Scene::with_conditions(double distance_cm, double illuminance_lx) const {
  return Scene(reflectance_, object_box_, distance_cm, illuminance_lx);
}

void LensState::set(double control) {
  control_ = std::clamp(control, kLensMin, kLensMax);
}

double CameraState::exposure_us() const {
  return exposure_value(exposure_index_);
}

void CameraState::set(int exposure_index) {
  if (exposure_index < 0 || exposure_index >= kExposureCount) {
    throw RangeError("exposure index " + std::to_string(exposure_index) +
                     " outside [0, 145]");
  }
  exposure_index_ = exposure_index;
}

double exposure_value(int index) {
  if (index < 0 || index >= kExposureCount) {
    throw RangeError("exposure index " + std::to_string(index) +
                     " outside [0, 145]");
  }
  if (index == kExposureCount - 1) return kExposureMaxUs;
  const double t = static_cast<double>(index) / (kExposureCount - 1);
  return kExposureMinUs * std::pow(kExposureMaxUs / kExposureMinUs, t);
}

double blur_sigma(const LensState& lens, double f_star) {
  return kBlurPerControl * std::abs(lens.control() - f_star);
}

namespace {

std::vector<double> gaussian_kernel(double sigma) {
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    const double v = std::exp(-0.5 * (i * i) / (sigma * sigma));
    k[i + radius] = v;
    sum += v;
  }
  for (double& v : k) v /= sum;
  return k;
}

}  // namespace

Plane gaussian_blur(const Plane& input, double sigma) {
  if (sigma < 0.05) return input;
  const auto kernel = gaussian_kernel(sigma);
  const int radius = static_cast<int>(kernel.size() / 2);
  const int w = input.width();
  const int h = input.height();

  Plane horizontal(w, h);
  std::vector<double> row(static_cast<std::size_t>(w + 2 * radius));
  for (int y = 0; y < h; ++y) {
    for (int i = 0; i < w + 2 * radius; ++i) row[i] = input.clamped(i - radius, y);
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int k = 0; k <= 2 * radius; ++k) acc += kernel[k] * row[x + k];
      horizontal.at(x, y) = acc;
    }
  }
  Plane out(w, h);
  auto dst = out.data();
  const auto src = horizontal.data();
  for (int y = 0; y < h; ++y) {
    double* o = dst.data() + static_cast<std::size_t>(y) * w;
    for (int k = -radius; k <= radius; ++k) {
      const double* r = src.data() + static_cast<std::size_t>(std::clamp(y + k, 0, h - 1)) * w;
      const double c = kernel[k + radius];
      for (int x = 0; x < w; ++x) o[x] += c * r[x];
    }
  }
  return out;
}

Plane exposed_intensity(const Scene& scene, const CameraState& camera) {
  return exposed_intensity_us(scene, camera.exposure_us());
}

Plane exposed_intensity_us(const Scene& scene, double exposure_us) {
  const double scale = 255.0 * scene.illuminance_lx() * exposure_us / kSensorGain;
  Plane out(scene.width(), scene.height());
  const auto r = scene.reflectance().data();
  auto o = out.data();
  for (std::size_t i = 0; i < r.size(); ++i) o[i] = scale * r[i];
  return out;
}

Plane render_linear(const Scene& scene, const LensState& lens,
                    const CameraState& camera, const RenderOptions& options) {
  return render_linear_us(scene, lens, camera.exposure_us(), options);
}

Plane render_linear_us(const Scene& scene, const LensState& lens,
                       double exposure_us, const RenderOptions& options) {
  const double sigma =
      blur_sigma(lens, in_focus_control(scene.distance_cm()));
  Plane image = gaussian_blur(exposed_intensity_us(scene, exposure_us), sigma);
  if (options.noise_enabled) {
    // Shot noise (variance proportional to signal) plus a read-noise floor.
    std::mt19937_64 rng(options.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (double& v : image.data()) {
      v += std::sqrt(0.1 * std::max(v, 0.0) + 1.0) * normal(rng);
    }
  }
  return image;
}

SensorImage quantize(const Plane& linear) {
  SensorImage out(linear.width(), linear.height());
  const auto in = linear.data();
  auto px = out.pixels();
  for (std::size_t i = 0; i < in.size(); ++i) {
    const double v = std::clamp(in[i], 0.0, 255.0);
    px[i] = static_cast<std::uint8_t>(std::floor(v + 0.5));
  }
  return out;
}

SensorImage render(const Scene& scene, const LensState& lens,
                   const CameraState& camera, const RenderOptions& options) {
  return quantize(render_linear(scene, lens, camera, options));
}

SensorImage render_us(const Scene& scene, const LensState& lens,
                      double exposure_us, const RenderOptions& options) {
  return quantize(render_linear_us(scene, lens, exposure_us, options));
}

}  // namespace hieraf
