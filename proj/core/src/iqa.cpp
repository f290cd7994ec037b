#include "hieraf/iqa.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hieraf/error.hpp"

namespace hieraf {

Histogram256 histogram256(const SensorImage& image) {
  Histogram256 h;
  for (std::uint8_t v : image.pixels()) ++h.counts[v];
  h.peak = static_cast<int>(std::max_element(h.counts.begin(), h.counts.end()) -
                            h.counts.begin());
  return h;
}

ObsHistogram obs_histogram(const SensorImage& image) {
  constexpr double kWidth = 255.0 / kObsHistogramBins;
  ObsHistogram h;
  for (int k = 0; k <= kObsHistogramBins; ++k) h.bin[k] = kWidth * k;
  std::array<std::int64_t, kObsHistogramBins> counts{};
  for (std::uint8_t v : image.pixels()) {
    const int b = std::min(static_cast<int>(v / kWidth), kObsHistogramBins - 1);
    ++counts[b];
  }
  const double n = static_cast<double>(image.size());
  for (int k = 0; k < kObsHistogramBins; ++k) h.val[k] = counts[k] / n;
  return h;
}

double tenengrad(const SensorImage& image, const Rect& region) {
  if (region.w < 3 || region.h < 3) {
    throw RangeError("tenengrad region must be at least 3x3");
  }
  if (!region.inside(image.width(), image.height())) {
    throw RangeError("tenengrad region leaves the image");
  }
  double sum = 0.0;
  for (int y = region.y + 1; y < region.y + region.h - 1; ++y) {
    for (int x = region.x + 1; x < region.x + region.w - 1; ++x) {
      auto p = [&](int dx, int dy) { return static_cast<double>(image.at(x + dx, y + dy)); };
      const double gx = (p(1, -1) + 2 * p(1, 0) + p(1, 1)) - (p(-1, -1) + 2 * p(-1, 0) + p(-1, 1));
      const double gy = (p(-1, 1) + 2 * p(0, 1) + p(1, 1)) - (p(-1, -1) + 2 * p(0, -1) + p(1, -1));
      sum += gx * gx + gy * gy;
    }
  }
  return sum;
}

double tenengrad(const SensorImage& image) {
  return tenengrad(image, {0, 0, image.width(), image.height()});
}

RegionStats region_stats(const SensorImage& image, const Rect& region) {
  if (!region.inside(image.width(), image.height())) {
    throw RangeError("region leaves the image");
  }
  double sum = 0.0;
  double sq = 0.0;
  for (int y = region.y; y < region.y + region.h; ++y) {
    for (int x = region.x; x < region.x + region.w; ++x) {
      const double v = image.at(x, y);
      sum += v;
      sq += v * v;
    }
  }
  const double n = static_cast<double>(region.w) * region.h;
  const double mean = sum / n;
  return {mean, std::sqrt(std::max(sq / n - mean * mean, 0.0))};
}

double mean_intensity(const SensorImage& image) {
  return region_stats(image, {0, 0, image.width(), image.height()}).mean;
}

namespace {

constexpr int kWindowRadius = 3;

std::array<double, 2 * kWindowRadius + 1> mscn_window() {
  std::array<double, 2 * kWindowRadius + 1> w{};
  const double sigma = 7.0 / 6.0;
  double sum = 0.0;
  for (int i = -kWindowRadius; i <= kWindowRadius; ++i) {
    w[i + kWindowRadius] = std::exp(-0.5 * i * i / (sigma * sigma));
    sum += w[i + kWindowRadius];
  }
  for (double& v : w) v /= sum;
  return w;
}

Plane separable_filter(const Plane& in, const std::array<double, 2 * kWindowRadius + 1>& k) {
  Plane tmp(in.width(), in.height());
  for (int y = 0; y < in.height(); ++y) {
    for (int x = 0; x < in.width(); ++x) {
      double acc = 0.0;
      for (int i = -kWindowRadius; i <= kWindowRadius; ++i) acc += k[i + kWindowRadius] * in.clamped(x + i, y);
      tmp.at(x, y) = acc;
    }
  }
  Plane out(in.width(), in.height());
  for (int y = 0; y < in.height(); ++y) {
    for (int x = 0; x < in.width(); ++x) {
      double acc = 0.0;
      for (int i = -kWindowRadius; i <= kWindowRadius; ++i) acc += k[i + kWindowRadius] * tmp.clamped(x, y + i);
      out.at(x, y) = acc;
    }
  }
  return out;
}

}  // namespace

Plane mscn(const Plane& image) {
  if (image.width() < 16 || image.height() < 16) {
    throw RangeError("mscn requires at least 16x16 pixels");
  }
  static const auto window = mscn_window();
  const Plane mu = separable_filter(image, window);
  Plane squared(image.width(), image.height());
  {
    const auto src = image.data();
    auto dst = squared.data();
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] * src[i];
  }
  const Plane mu_sq = separable_filter(squared, window);
  Plane out(image.width(), image.height());
  const auto src = image.data();
  const auto m = mu.data();
  const auto m2 = mu_sq.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < src.size(); ++i) {
    const double sigma = std::sqrt(std::max(m2[i] - m[i] * m[i], 0.0));
    dst[i] = (src[i] - m[i]) / (sigma + 1.0);
  }
  return out;
}

Plane mscn(const SensorImage& image) { return mscn(image.to_plane()); }

namespace {

constexpr double kShapeMin = 0.2;
constexpr double kShapeMax = 10.0;
constexpr double kShapeStep = 0.001;

double gamma_fn(double x) { return std::exp(std::lgamma(x)); }

// Tabulated moment-ratio functions of the generalized Gaussian family.
struct ShapeTable {
  std::vector<double> shape;
  std::vector<double> ggd_ratio;   // G(1/a) G(3/a) / G(2/a)^2, decreasing
  std::vector<double> aggd_ratio;  // G(2/a)^2 / (G(1/a) G(3/a)), increasing

  ShapeTable() {
    const int n = static_cast<int>(std::lround((kShapeMax - kShapeMin) / kShapeStep)) + 1;
    for (int i = 0; i < n; ++i) {
      const double a = kShapeMin + kShapeStep * i;
      const double g1 = std::lgamma(1.0 / a);
      const double g2 = std::lgamma(2.0 / a);
      const double g3 = std::lgamma(3.0 / a);
      shape.push_back(a);
      ggd_ratio.push_back(std::exp(g1 + g3 - 2.0 * g2));
      aggd_ratio.push_back(std::exp(2.0 * g2 - g1 - g3));
    }
  }

  // Inverts a monotone tabulated function by linear interpolation, clamping
  // to the table ends.
  double invert(const std::vector<double>& f, double target) const {
    const bool increasing = f.back() > f.front();
    auto before = [&](double a, double b) { return increasing ? a < b : a > b; };
    if (!before(f.front(), target)) return shape.front();
    if (!before(target, f.back())) return shape.back();
    std::size_t lo = 0;
    std::size_t hi = f.size() - 1;
    while (hi - lo > 1) {
      const std::size_t mid = (lo + hi) / 2;
      if (before(f[mid], target)) lo = mid; else hi = mid;
    }
    const double t = (target - f[lo]) / (f[hi] - f[lo]);
    return shape[lo] + t * (shape[hi] - shape[lo]);
  }
};

const ShapeTable& shape_table() {
  static const ShapeTable table;
  return table;
}

void check_samples(std::span<const double> samples) {
  if (samples.size() < 100) {
    throw DegenerateInputError("distribution fit needs at least 100 samples");
  }
  const auto [lo, hi] = std::minmax_element(samples.begin(), samples.end());
  if (!(*hi > *lo)) throw DegenerateInputError("distribution fit on constant samples");
  for (double v : samples) {
    if (!std::isfinite(v)) throw DegenerateInputError("non-finite sample");
  }
}

}  // namespace

GgdFit ggd_fit(std::span<const double> samples) {
  check_samples(samples);
  double abs_sum = 0.0;
  double sq_sum = 0.0;
  for (double v : samples) {
    abs_sum += std::abs(v);
    sq_sum += v * v;
  }
  const double n = static_cast<double>(samples.size());
  const double mean_abs = abs_sum / n;
  const double variance = sq_sum / n;
  const double rho = variance / (mean_abs * mean_abs);
  const auto& table = shape_table();
  return {table.invert(table.ggd_ratio, rho), variance};
}

AggdFit aggd_fit(std::span<const double> samples) {
  check_samples(samples);
  double left_sq = 0.0, right_sq = 0.0, abs_sum = 0.0, sq_sum = 0.0;
  std::size_t left_n = 0, right_n = 0;
  for (double v : samples) {
    if (v < 0) {
      left_sq += v * v;
      ++left_n;
    } else if (v > 0) {
      right_sq += v * v;
      ++right_n;
    }
    abs_sum += std::abs(v);
    sq_sum += v * v;
  }
  if (left_n == 0 || right_n == 0) {
    throw DegenerateInputError("asymmetric fit needs samples on both sides of zero");
  }
  const double n = static_cast<double>(samples.size());
  const double left_std = std::sqrt(left_sq / left_n);
  const double right_std = std::sqrt(right_sq / right_n);
  const double gamma_hat = left_std / right_std;
  const double mean_abs = abs_sum / n;
  const double r_hat = mean_abs * mean_abs / (sq_sum / n);
  const double r_norm = r_hat * (gamma_hat * gamma_hat * gamma_hat + 1.0) * (gamma_hat + 1.0) /
                        ((gamma_hat * gamma_hat + 1.0) * (gamma_hat * gamma_hat + 1.0));
  const auto& table = shape_table();
  const double alpha = table.invert(table.aggd_ratio, r_norm);

  const double g1 = gamma_fn(1.0 / alpha);
  const double g2 = gamma_fn(2.0 / alpha);
  const double g3 = gamma_fn(3.0 / alpha);
  const double scale = std::sqrt(g1 / g3);
  const double mean = (right_std - left_std) * scale * (g2 / g1);
  return {alpha, mean, left_std * left_std, right_std * right_std};
}

namespace {

Plane downsample2(const Plane& in) {
  Plane out(in.width() / 2, in.height() / 2);
  for (int y = 0; y < out.height(); ++y) {
    for (int x = 0; x < out.width(); ++x) {
      out.at(x, y) = 0.25 * (in.at(2 * x, 2 * y) + in.at(2 * x + 1, 2 * y) +
                             in.at(2 * x, 2 * y + 1) + in.at(2 * x + 1, 2 * y + 1));
    }
  }
  return out;
}

void scale_features(const Plane& image, double* out) {
  const Plane m = mscn(image);
  const auto g = ggd_fit(m.data());
  out[0] = g.shape;
  out[1] = g.variance;
  constexpr int kShifts[4][2] = {{1, 0}, {0, 1}, {1, 1}, {1, -1}};
  std::vector<double> products;
  products.reserve(m.size());
  for (int s = 0; s < 4; ++s) {
    const int dx = kShifts[s][0];
    const int dy = kShifts[s][1];
    products.clear();
    for (int y = std::max(0, -dy); y < m.height() - std::max(0, dy); ++y) {
      for (int x = 0; x < m.width() - dx; ++x) {
        products.push_back(m.at(x, y) * m.at(x + dx, y + dy));
      }
    }
    const auto a = aggd_fit(products);
    out[2 + 4 * s + 0] = a.shape;
    out[2 + 4 * s + 1] = a.mean;
    out[2 + 4 * s + 2] = a.left_variance;
    out[2 + 4 * s + 3] = a.right_variance;
  }
}

}  // namespace

BrisqueFeatures brisque_features(const SensorImage& image) {
  if (image.width() < 32 || image.height() < 32) {
    throw RangeError("brisque_features requires at least 32x32 pixels");
  }
  BrisqueFeatures f;
  const Plane full = image.to_plane();
  scale_features(full, f.data());
  scale_features(downsample2(full), f.data() + kBrisqueFeatureCount / 2);
  return f;
}

QualityModel::QualityModel(const Vector& mu, const Matrix& sigma, double tau)
    : mu_(mu), sigma_(sigma), tau_(tau) {
  if (!mu_.allFinite() || !sigma_.allFinite() || !std::isfinite(tau_)) {
    throw CalibrationError("quality model has non-finite entries");
  }
  if (!(tau_ > 0.0)) throw CalibrationError("quality model tau must be positive");
  const double scale = std::max(1.0, sigma_.cwiseAbs().maxCoeff());
  if ((sigma_ - sigma_.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale) {
    throw CalibrationError("quality model covariance is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sigma_, Eigen::EigenvaluesOnly);
  if (eig.eigenvalues().minCoeff() < -1e-9 * scale) {
    throw CalibrationError("quality model covariance is not positive semi-definite");
  }
  precision_factor_.compute(sigma_ + kCovarianceRegularizer * Matrix::Identity());
  if (precision_factor_.info() != Eigen::Success) {
    throw CalibrationError("quality model covariance is singular");
  }
}

double QualityModel::distance(const BrisqueFeatures& f) const {
  const Vector d = f - mu_;
  const Vector y = precision_factor_.matrixL().solve(d);
  return y.norm();
}

double QualityModel::score_from_distance(double d) const {
  return 100.0 * (1.0 - std::exp(-d / tau_));
}

namespace {

double to_float(double v) { return static_cast<double>(static_cast<float>(v)); }

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

QualityModel fit_pristine(std::span<const SensorImage> corpus) {
  if (corpus.size() < kMinPristineImages) {
    throw CalibrationError("pristine corpus needs at least 20 images");
  }
  std::vector<BrisqueFeatures> features;
  features.reserve(corpus.size());
  for (const auto& image : corpus) features.push_back(brisque_features(image));

  QualityModel::Vector mu = QualityModel::Vector::Zero();
  for (const auto& f : features) mu += f;
  mu /= static_cast<double>(features.size());
  QualityModel::Matrix cov = QualityModel::Matrix::Zero();
  for (const auto& f : features) cov += (f - mu) * (f - mu).transpose();
  cov /= static_cast<double>(features.size() - 1);
  cov += kCovarianceRegularizer * QualityModel::Matrix::Identity();

  mu = mu.unaryExpr(&to_float);
  cov = cov.unaryExpr(&to_float);
  cov = (0.5 * (cov + cov.transpose())).eval();

  const QualityModel provisional(mu, cov, 1.0);
  std::vector<double> distances;
  for (const auto& f : features) distances.push_back(provisional.distance(f));
  const double d_med = median(distances);
  // 100 (1 - exp(-d_med / tau)) = 10.
  // The floor keeps a degenerate corpus (one image repeated) from mapping
  // its own rounding-level distances to score 10.
  double tau = std::max(d_med / std::log(10.0 / 9.0), kMinTau);
  tau = to_float(tau);
  return QualityModel(mu, cov, tau);
}

double quality_score(const SensorImage& image, const QualityModel& model) {
  try {
    return model.score_from_distance(model.distance(brisque_features(image)));
  } catch (const DegenerateInputError&) {
    // Featureless (constant) frames carry no natural-scene statistics; they
    // get the worst score that is still inside [0, 100).
    return std::nextafter(100.0, 0.0);
  }
}

}  // namespace hieraf
