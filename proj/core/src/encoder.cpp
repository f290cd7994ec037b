#include "hieraf/encoder.hpp"

#include <algorithm>
#include <random>

namespace hieraf {

bool operator==(const EncoderParams& a, const EncoderParams& b) {
  if (a.seed != b.seed || a.projection != b.projection) return false;
  for (std::size_t i = 0; i < a.banks.size(); ++i) {
    if (a.banks[i] != b.banks[i]) return false;
  }
  return true;
}

EncoderParams init_encoder(std::uint64_t seed) {
  EncoderParams p;
  p.seed = seed;
  std::mt19937_64 rng(seed ^ 0xE1C0DE5EEDULL);
  std::normal_distribution<double> normal(0.0, 1.0);

  int in_channels = 1;
  for (std::size_t i = 0; i < p.banks.size(); ++i) {
    const int out = EncoderParams::kChannels[i];
    const int fan_in = in_channels * EncoderParams::kKernel * EncoderParams::kKernel;
    Eigen::MatrixXd g(fan_in, out);
    for (int c = 0; c < out; ++c) {
      for (int r = 0; r < fan_in; ++r) g(r, c) = normal(rng);
    }
    // Orthonormal columns of Q become the filter rows.
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(fan_in, out);
    p.banks[i] = q.transpose();
    in_channels = out;
  }

  p.projection.resize(kFeatureDim, EncoderParams::kPooledDim);
  for (int r = 0; r < kFeatureDim; ++r) {
    for (int c = 0; c < EncoderParams::kPooledDim; ++c) p.projection(r, c) = normal(rng);
    p.projection.row(r).normalize();
  }
  return p;
}

namespace {

// Channel-major feature map.
struct FeatureMap {
  int channels = 0;
  int width = 0;
  int height = 0;
  std::vector<double> data;

  FeatureMap(int c, int w, int h)
      : channels(c), width(w), height(h), data(static_cast<std::size_t>(c) * w * h, 0.0) {}
  double& at(int c, int x, int y) {
    return data[(static_cast<std::size_t>(c) * height + y) * width + x];
  }
  double at(int c, int x, int y) const {
    return data[(static_cast<std::size_t>(c) * height + y) * width + x];
  }
  double clamped(int c, int x, int y) const {
    return at(c, std::clamp(x, 0, width - 1), std::clamp(y, 0, height - 1));
  }
};

// 5x5 stride-2 convolution, edge-replicated "same" padding, then ReLU.
FeatureMap conv_relu(const FeatureMap& in, const Eigen::MatrixXd& bank) {
  constexpr int k = EncoderParams::kKernel;
  constexpr int r = k / 2;
  const int ow = (in.width + 1) / 2;
  const int oh = (in.height + 1) / 2;
  FeatureMap out(static_cast<int>(bank.rows()), ow, oh);
  Eigen::VectorXd patch(in.channels * k * k);
  for (int y = 0; y < oh; ++y) {
    for (int x = 0; x < ow; ++x) {
      int idx = 0;
      for (int c = 0; c < in.channels; ++c) {
        for (int ky = -r; ky <= r; ++ky) {
          for (int kx = -r; kx <= r; ++kx) patch[idx++] = in.clamped(c, 2 * x + kx, 2 * y + ky);
        }
      }
      const Eigen::VectorXd response = bank * patch;
      for (int c = 0; c < out.channels; ++c) out.at(c, x, y) = std::max(response[c], 0.0);
    }
  }
  return out;
}

FeatureMap max_pool2(const FeatureMap& in) {
  const int ow = (in.width + 1) / 2;
  const int oh = (in.height + 1) / 2;
  FeatureMap out(in.channels, ow, oh);
  for (int c = 0; c < in.channels; ++c) {
    for (int y = 0; y < oh; ++y) {
      for (int x = 0; x < ow; ++x) {
        double m = in.at(c, 2 * x, 2 * y);
        if (2 * x + 1 < in.width) m = std::max(m, in.at(c, 2 * x + 1, 2 * y));
        if (2 * y + 1 < in.height) {
          m = std::max(m, in.at(c, 2 * x, 2 * y + 1));
          if (2 * x + 1 < in.width) m = std::max(m, in.at(c, 2 * x + 1, 2 * y + 1));
        }
        out.at(c, x, y) = m;
      }
    }
  }
  return out;
}

}  // namespace

FeatureVector encode(const EncoderParams& params, const SensorImage& image) {
  constexpr int kMinSide = 64;
  const int w = std::max(image.width(), kMinSide);
  const int h = std::max(image.height(), kMinSide);
  FeatureMap map(1, w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int sx = std::min(x, image.width() - 1);
      const int sy = std::min(y, image.height() - 1);
      map.at(0, x, y) = image.at(sx, sy) / 255.0;
    }
  }
  for (const auto& bank : params.banks) map = max_pool2(conv_relu(map, bank));

  Eigen::VectorXd pooled(EncoderParams::kPooledDim);
  const int n = map.width * map.height;
  for (int c = 0; c < map.channels; ++c) {
    double sum = 0.0;
    double mx = 0.0;
    for (int y = 0; y < map.height; ++y) {
      for (int x = 0; x < map.width; ++x) {
        sum += map.at(c, x, y);
        mx = std::max(mx, map.at(c, x, y));
      }
    }
    pooled[c] = sum / n;
    pooled[map.channels + c] = mx;
  }
  return (params.projection * pooled).cast<float>();
}

}  // namespace hieraf
