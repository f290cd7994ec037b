#ifndef HIERAF_NETWORK_HPP_
#define HIERAF_NETWORK_HPP_

#include <cmath>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "hieraf/error.hpp"

namespace hieraf {

// Fully connected tanh network with a linear output layer. All weights and
// biases live in one flat parameter vector so optimizers, checkpoints and
// finite-difference checks treat the network as a single array.
//
// Batches are column-major: one sample per column.
template <typename T>
class Mlp {
 public:
  using Vector = Eigen::Matrix<T, Eigen::Dynamic, 1>;
  using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
  using MatrixMap = Eigen::Map<Matrix>;
  using ConstMatrixMap = Eigen::Map<const Matrix>;
  using VectorMap = Eigen::Map<Vector>;
  using ConstVectorMap = Eigen::Map<const Vector>;

  struct Cache {
    std::vector<Matrix> activations;  // input, hidden outputs..., final output
  };

  Mlp() = default;
  explicit Mlp(std::vector<int> sizes) : sizes_(std::move(sizes)) {
    if (sizes_.size() < 2) throw ContractError("mlp needs at least input and output sizes");
    Eigen::Index total = 0;
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
      offsets_.push_back(total);
      total += static_cast<Eigen::Index>(sizes_[l + 1]) * (sizes_[l] + 1);
    }
    params_ = Vector::Zero(total);
  }

  // Scaled Gaussian init (std gain / sqrt(fan_in)); the output layer uses
  // `output_gain`. Biases start at zero.
  template <typename Rng>
  void init(Rng& rng, T hidden_gain, T output_gain) {
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int l = 0; l < num_layers(); ++l) {
      const T gain = l + 1 == num_layers() ? output_gain : hidden_gain;
      const double std = static_cast<double>(gain) / std::sqrt(static_cast<double>(sizes_[l]));
      auto w = weight(l);
      for (Eigen::Index c = 0; c < w.cols(); ++c) {
        for (Eigen::Index r = 0; r < w.rows(); ++r) w(r, c) = static_cast<T>(std * normal(rng));
      }
      bias(l).setZero();
    }
  }

  int num_layers() const { return static_cast<int>(sizes_.size()) - 1; }
  int input_dim() const { return sizes_.front(); }
  int output_dim() const { return sizes_.back(); }
  const std::vector<int>& sizes() const { return sizes_; }

  Vector& params() { return params_; }
  const Vector& params() const { return params_; }

  MatrixMap weight(int l) { return MatrixMap(params_.data() + offsets_[l], sizes_[l + 1], sizes_[l]); }
  ConstMatrixMap weight(int l) const {
    return ConstMatrixMap(params_.data() + offsets_[l], sizes_[l + 1], sizes_[l]);
  }
  VectorMap bias(int l) {
    return VectorMap(params_.data() + offsets_[l] + sizes_[l + 1] * sizes_[l], sizes_[l + 1]);
  }
  ConstVectorMap bias(int l) const {
    return ConstVectorMap(params_.data() + offsets_[l] + sizes_[l + 1] * sizes_[l], sizes_[l + 1]);
  }

  Matrix forward(const Matrix& x, Cache* cache = nullptr) const {
    if (x.rows() != input_dim()) {
      throw ContractError("mlp input has " + std::to_string(x.rows()) + " rows, expected " +
                          std::to_string(input_dim()));
    }
    if (cache) {
      cache->activations.clear();
      cache->activations.push_back(x);
    }
    Matrix a = x;
    for (int l = 0; l < num_layers(); ++l) {
      Matrix z = weight(l) * a;
      z.colwise() += bias(l);
      if (l + 1 < num_layers()) z = z.array().tanh().matrix();
      a = std::move(z);
      if (cache) cache->activations.push_back(a);
    }
    return a;
  }

  // Accumulates dLoss/dparams into `grad` (same layout as params()) given
  // dLoss/doutput for the cached forward pass.
  void backward(const Cache& cache, const Matrix& d_out, Vector& grad) const {
    if (grad.size() != params_.size()) grad = Vector::Zero(params_.size());
    Matrix delta = d_out;
    for (int l = num_layers() - 1; l >= 0; --l) {
      const Matrix& input = cache.activations[l];
      MatrixMap gw(grad.data() + offsets_[l], sizes_[l + 1], sizes_[l]);
      VectorMap gb(grad.data() + offsets_[l] + sizes_[l + 1] * sizes_[l], sizes_[l + 1]);
      gw.noalias() += delta * input.transpose();
      gb += delta.rowwise().sum();
      if (l > 0) {
        Matrix back = weight(l).transpose() * delta;
        // input = tanh(z): dtanh = 1 - tanh^2.
        delta = back.array() * (T(1) - input.array().square());
      }
    }
  }

  template <typename U>
  Mlp<U> cast() const {
    Mlp<U> out(sizes_);
    out.params() = params_.template cast<U>();
    return out;
  }

 private:
  std::vector<int> sizes_;
  std::vector<Eigen::Index> offsets_;
  Vector params_;
};

}  // namespace hieraf

#endif  // HIERAF_NETWORK_HPP_
