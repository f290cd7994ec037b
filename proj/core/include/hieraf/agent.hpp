#ifndef HIERAF_AGENT_HPP_
#define HIERAF_AGENT_HPP_

#include <cstdint>

#include <Eigen/Dense>

#include "hieraf/ppo.hpp"

namespace hieraf {

// Running per-dimension mean/variance of observations. Statistics
// accumulate in double; the policy sees a float snapshot taken by
// refresh(), so a fixed snapshot can be stored and restored exactly.
class ObsNormalizer {
 public:
  static constexpr float kClip = 5.0f;
  static constexpr double kVarFloor = 1e-8;

  ObsNormalizer() = default;
  explicit ObsNormalizer(int dim);

  int dim() const { return static_cast<int>(mean_.size()); }
  void observe(const Eigen::VectorXf& x);
  // Copies the accumulated statistics into the snapshot used by apply().
  void refresh();
  // (x - mean) / std, clipped to +-kClip.
  Eigen::VectorXf apply(const Eigen::VectorXf& x) const;

  const Eigen::VectorXf& snapshot_mean() const { return snap_mean_; }
  const Eigen::VectorXf& snapshot_inv_std() const { return snap_inv_std_; }
  double count() const { return count_; }
  // False until refresh() or set_snapshot() has produced real statistics.
  bool has_snapshot() const { return has_snapshot_; }
  // Restores a stored snapshot; accumulators restart from it.
  void set_snapshot(const Eigen::VectorXf& mean, const Eigen::VectorXf& inv_std);

 private:
  Eigen::VectorXd mean_;
  Eigen::VectorXd m2_;
  double count_ = 0.0;
  Eigen::VectorXf snap_mean_;
  Eigen::VectorXf snap_inv_std_;
  bool has_snapshot_ = false;
};

// One decentralized learner: policy/value networks plus its input scaling.
struct Agent {
  PolicyParams<float> params;
  ObsNormalizer normalizer;

  static Agent create(const AgentSpec& spec, std::uint64_t seed);
  PolicyOutput forward(const Eigen::VectorXf& normalized_obs) const;
};

}  // namespace hieraf

#endif  // HIERAF_AGENT_HPP_
