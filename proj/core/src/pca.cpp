#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <random>

#include "hieraf/bench.hpp"
#include "hieraf/error.hpp"

namespace hieraf {

PcaResult pca3(const Eigen::MatrixXd& features, int iterations, double tolerance) {
  const Eigen::Index n = features.rows();
  const Eigen::Index d = features.cols();
  if (n < 4) throw RangeError("pca3 needs at least 4 rows");
  if (d < 3) throw RangeError("pca3 needs at least 3 columns");
  if (iterations < 1) throw RangeError("pca3 needs at least one iteration");
  const Eigen::RowVectorXd mean = features.colwise().mean();
  const Eigen::MatrixXd centred = features.rowwise() - mean;
  if (!(centred.squaredNorm() > 0.0)) throw DegenerateInputError("pca3 input has zero variance");

  const double scale = 1.0 / static_cast<double>(n - 1);
  // Residuals below this after deflation are rounding noise, not variance.
  const double null_level = 1e-12 * scale * centred.squaredNorm();
  auto cov_times = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd {
    return scale * (centred.transpose() * (centred * v));
  };

  PcaResult out;
  out.components = Eigen::MatrixXd::Zero(d, 3);
  std::mt19937_64 rng(0x9CA3);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int k = 0; k < 3; ++k) {
    Eigen::VectorXd v(d);
    for (Eigen::Index i = 0; i < d; ++i) v[i] = normal(rng);
    // Gram-Schmidt applied twice keeps the iterate orthogonal to earlier
    // components to working precision.
    auto deflate = [&](Eigen::VectorXd& x) {
      for (int pass = 0; pass < 2; ++pass) {
        for (int j = 0; j < k; ++j) x -= out.components.col(j).dot(x) * out.components.col(j);
      }
    };
    deflate(v);
    v.normalize();
    bool null_space = false;
    for (int it = 0; it < iterations; ++it) {
      Eigen::VectorXd w = cov_times(v);
      deflate(w);
      const double norm = w.norm();
      if (norm <= null_level) {
        null_space = true;
        break;
      }
      w /= norm;
      // Fix the sign so convergence is measured on the direction.
      if (w.dot(v) < 0.0) w = -w;
      const double change = (w - v).norm();
      v = std::move(w);
      if (change < tolerance) break;
    }
    const double lambda = null_space ? 0.0 : v.dot(cov_times(v));
    out.components.col(k) = v;
    out.eigenvalues[k] = std::max(lambda, 0.0);
  }
  for (int k = 1; k < 3; ++k) out.eigenvalues[k] = std::min(out.eigenvalues[k], out.eigenvalues[k - 1]);
  out.projections = centred * out.components;
  return out;
}

void write_projections_csv(std::ostream& out, const PcaResult& pca, const std::vector<bool>& labels) {
  if (labels.size() != static_cast<std::size_t>(pca.projections.rows())) {
    throw ContractError("label count does not match projection rows");
  }
  out << "pc1,pc2,pc3,detected\n";
  for (Eigen::Index i = 0; i < pca.projections.rows(); ++i) {
    out << pca.projections(i, 0) << ',' << pca.projections(i, 1) << ',' << pca.projections(i, 2) << ','
        << (labels[static_cast<std::size_t>(i)] ? 1 : 0) << '\n';
  }
}

Separability linear_separability(const Eigen::MatrixXd& points, const std::vector<bool>& labels) {
  const Eigen::Index n = points.rows();
  if (labels.size() != static_cast<std::size_t>(n) || n == 0) {
    throw ContractError("label count does not match point rows");
  }
  Separability s;
  for (bool l : labels) (l ? s.positives : s.negatives)++;
  s.majority_baseline = static_cast<double>(std::max(s.positives, s.negatives)) / n;
  if (s.positives == 0 || s.negatives == 0) {
    s.accuracy = 1.0;
    s.balanced_accuracy = 1.0;
    return s;
  }

  const Eigen::Index d = points.cols();
  Eigen::VectorXd mu_p = Eigen::VectorXd::Zero(d);
  Eigen::VectorXd mu_n = Eigen::VectorXd::Zero(d);
  for (Eigen::Index i = 0; i < n; ++i) (labels[i] ? mu_p : mu_n) += points.row(i).transpose();
  mu_p /= s.positives;
  mu_n /= s.negatives;
  Eigen::MatrixXd sw = Eigen::MatrixXd::Zero(d, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::VectorXd c = points.row(i).transpose() - (labels[i] ? mu_p : mu_n);
    sw += c * c.transpose();
  }
  sw += 1e-9 * (sw.trace() / d + 1.0) * Eigen::MatrixXd::Identity(d, d);
  const Eigen::VectorXd w = sw.ldlt().solve(mu_p - mu_n);
  const Eigen::VectorXd score = points * w;

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return score[a] < score[b]; });
  // Threshold after position k: rows [0, k) predicted negative. The Fisher
  // direction points from negatives to positives.
  int tp = s.positives;
  int tn = 0;
  auto consider = [&] {
    const double acc = static_cast<double>(tp + tn) / n;
    const double bal = 0.5 * (static_cast<double>(tp) / s.positives + static_cast<double>(tn) / s.negatives);
    if (acc > s.accuracy || (acc == s.accuracy && bal > s.balanced_accuracy)) {
      s.accuracy = acc;
      s.balanced_accuracy = bal;
    }
  };
  consider();
  for (Eigen::Index k = 0; k < n; ++k) {
    labels[order[k]] ? --tp : ++tn;
    if (k + 1 < n && score[order[k + 1]] == score[order[k]]) continue;
    consider();
  }
  return s;
}

GridSpec default_grid() {
  GridSpec g;
  for (int i = 0; i < kExposureCount; i += 5) g.exposure_indices.push_back(i);
  for (double c = kLensMin; c <= kLensMax; c += 2.0) g.lens_values.push_back(c);
  return g;
}

GridData exposure_focus_grid(const EnvContext& context, const Scene& scene, const GridSpec& grid,
                             std::uint64_t seed) {
  if (grid.exposure_indices.empty() || grid.lens_values.empty()) throw RangeError("empty analysis grid");
  const Scene lit = scene.with_conditions(grid.distance_cm, grid.illuminance_lx);
  std::mt19937_64 rng(seed);
  GridData out;
  const auto rows = static_cast<Eigen::Index>(grid.exposure_indices.size() * grid.lens_values.size());
  out.features.resize(rows, kFeatureDim);
  Eigen::Index r = 0;
  for (int idx : grid.exposure_indices) {
    for (double c : grid.lens_values) {
      const auto frame = render(lit, LensState(c), CameraState(idx), {true, rng()});
      out.features.row(r++) = context.encoder->encode(frame).cast<double>().transpose();
      out.detected.push_back(context.detector->detect(frame, lit.object_box()).has_value());
      out.exposure_index.push_back(idx);
      out.lens.push_back(c);
    }
  }
  return out;
}

}  // namespace hieraf
