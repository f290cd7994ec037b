#ifndef HIERAF_IQA_HPP_
#define HIERAF_IQA_HPP_

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "hieraf/image.hpp"

namespace hieraf {

struct Histogram256 {
  std::array<std::int64_t, 256> counts{};
  // Smallest intensity with the maximal count.
  int peak = 0;
};

Histogram256 histogram256(const SensorImage& image);

inline constexpr int kObsHistogramBins = 10;

// Ten equal-width bins over [0, 255] (edges 25.5 k), last bin right-closed,
// counts normalized by the pixel count.
struct ObsHistogram {
  std::array<double, kObsHistogramBins> val{};
  std::array<double, kObsHistogramBins + 1> bin{};
};

ObsHistogram obs_histogram(const SensorImage& image);

// Sum over the region's interior pixels of Gx^2 + Gy^2 with 3x3 Sobel
// kernels. Throws RangeError if the region is smaller than 3x3 or leaves the
// image.
double tenengrad(const SensorImage& image, const Rect& region);
double tenengrad(const SensorImage& image);

// Mean and standard deviation of the pixels inside `region`.
struct RegionStats {
  double mean = 0.0;
  double stddev = 0.0;
};
RegionStats region_stats(const SensorImage& image, const Rect& region);
double mean_intensity(const SensorImage& image);

// Mean-subtracted contrast-normalized coefficients (I - mu) / (sigma + 1)
// with a 7x7 Gaussian window (std 7/6) and edge replication.
// Throws RangeError below 16x16.
Plane mscn(const Plane& image);
Plane mscn(const SensorImage& image);

struct GgdFit {
  double shape = 0.0;
  double variance = 0.0;
};

struct AggdFit {
  double shape = 0.0;
  double mean = 0.0;
  double left_variance = 0.0;
  double right_variance = 0.0;
};

// Moment-matching fits; the shape is read off a tabulated moment-ratio
// function over [0.2, 10]. Throw DegenerateInputError for fewer than 100
// samples or constant input.
GgdFit ggd_fit(std::span<const double> samples);
AggdFit aggd_fit(std::span<const double> samples);

inline constexpr int kBrisqueFeatureCount = 36;
using BrisqueFeatures = Eigen::Matrix<double, kBrisqueFeatureCount, 1>;

// Per scale: [ggd shape, ggd variance] then (shape, mean, left var,
// right var) for the horizontal, vertical, main- and anti-diagonal neighbour
// products. Scale two is a 2x2 mean-pooled copy. Throws RangeError below
// 32x32.
BrisqueFeatures brisque_features(const SensorImage& image);

// Pristine-statistics model behind the no-reference score.
class QualityModel {
 public:
  using Vector = Eigen::Matrix<double, kBrisqueFeatureCount, 1>;
  using Matrix = Eigen::Matrix<double, kBrisqueFeatureCount, kBrisqueFeatureCount>;

  // Validates (finite, symmetric PSD sigma, tau > 0) and factorizes
  // sigma + 1e-6 I. Throws CalibrationError.
  QualityModel(const Vector& mu, const Matrix& sigma, double tau);

  const Vector& mu() const { return mu_; }
  const Matrix& sigma() const { return sigma_; }
  double tau() const { return tau_; }

  // Mahalanobis distance of a feature vector from the pristine mean.
  double distance(const BrisqueFeatures& f) const;
  // 100 * (1 - exp(-D / tau)), in [0, 100); lower is better.
  double score_from_distance(double d) const;

 private:
  Vector mu_;
  Matrix sigma_;
  double tau_;
  Eigen::LLT<Matrix> precision_factor_;
};

inline constexpr double kCovarianceRegularizer = 1e-6;
inline constexpr std::size_t kMinPristineImages = 20;

inline constexpr double kMinTau = 1.0;

// Sample mean/covariance of the corpus features (+1e-6 I); tau puts the
// median corpus distance at score 10 (floored at kMinTau). Values are rounded to float so the
// model survives a float32 checkpoint bit-exactly.
QualityModel fit_pristine(std::span<const SensorImage> corpus);

double quality_score(const SensorImage& image, const QualityModel& model);

}  // namespace hieraf

#endif  // HIERAF_IQA_HPP_
