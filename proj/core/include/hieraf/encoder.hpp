#ifndef HIERAF_ENCODER_HPP_
#define HIERAF_ENCODER_HPP_

#include <array>
#include <cstdint>
#include <memory>

#include <Eigen/Dense>

#include "hieraf/image.hpp"

namespace hieraf {

inline constexpr int kFeatureDim = 2048;
using FeatureVector = Eigen::VectorXf;

// Fixed random convolutional encoder standing in for a pretrained backbone:
// three banks of 5x5 stride-2 filters (8, 16, 32 channels) with orthonormal
// rows, each followed by ReLU and 2x2 max pooling, then global average and
// max pooling projected to 2048 dimensions by unit-norm rows.
struct EncoderParams {
  static constexpr int kKernel = 5;
  static constexpr std::array<int, 3> kChannels = {8, 16, 32};
  static constexpr int kPooledDim = 2 * kChannels.back();

  std::uint64_t seed = 0;
  // banks[i] is (out_channels) x (in_channels * 25), row-major over
  // (in_channel, ky, kx).
  std::array<Eigen::MatrixXd, 3> banks;
  Eigen::MatrixXd projection;  // kFeatureDim x kPooledDim

  friend bool operator==(const EncoderParams& a, const EncoderParams& b);
};

EncoderParams init_encoder(std::uint64_t seed);

// Pixels scaled to [0, 1]; inputs smaller than 64x64 are edge-replicated up
// to 64x64 first. Output is always kFeatureDim long.
FeatureVector encode(const EncoderParams& params, const SensorImage& image);

// Pluggable observation encoder; the built-in implementation wraps
// EncoderParams.
class ImageEncoder {
 public:
  virtual ~ImageEncoder() = default;
  virtual FeatureVector encode(const SensorImage& image) const = 0;
};

class RandomConvEncoder final : public ImageEncoder {
 public:
  explicit RandomConvEncoder(std::uint64_t seed) : params_(init_encoder(seed)) {}
  FeatureVector encode(const SensorImage& image) const override {
    return hieraf::encode(params_, image);
  }
  const EncoderParams& params() const { return params_; }

 private:
  EncoderParams params_;
};

}  // namespace hieraf

#endif  // HIERAF_ENCODER_HPP_
