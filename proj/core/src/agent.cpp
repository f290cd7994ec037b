#include "hieraf/agent.hpp"

#include <cmath>

#include "hieraf/error.hpp"

namespace hieraf {

ObsNormalizer::ObsNormalizer(int dim)
    : mean_(Eigen::VectorXd::Zero(dim)),
      m2_(Eigen::VectorXd::Zero(dim)),
      snap_mean_(Eigen::VectorXf::Zero(dim)),
      snap_inv_std_(Eigen::VectorXf::Ones(dim)) {}

void ObsNormalizer::observe(const Eigen::VectorXf& x) {
  if (x.size() != mean_.size()) throw ContractError("normalizer dimension mismatch");
  count_ += 1.0;
  const Eigen::VectorXd xd = x.cast<double>();
  const Eigen::VectorXd delta = xd - mean_;
  mean_ += delta / count_;
  m2_ += delta.cwiseProduct(xd - mean_);
}

void ObsNormalizer::refresh() {
  if (count_ < 2.0) return;
  snap_mean_ = mean_.cast<float>();
  const Eigen::VectorXd var = (m2_ / count_).cwiseMax(kVarFloor);
  snap_inv_std_ = var.cwiseSqrt().cwiseInverse().cast<float>();
  has_snapshot_ = true;
}

Eigen::VectorXf ObsNormalizer::apply(const Eigen::VectorXf& x) const {
  if (x.size() != snap_mean_.size()) throw ContractError("normalizer dimension mismatch");
  return ((x - snap_mean_).cwiseProduct(snap_inv_std_)).cwiseMax(-kClip).cwiseMin(kClip);
}

void ObsNormalizer::set_snapshot(const Eigen::VectorXf& mean, const Eigen::VectorXf& inv_std) {
  if (mean.size() != inv_std.size()) throw ContractError("normalizer snapshot sizes differ");
  snap_mean_ = mean;
  snap_inv_std_ = inv_std;
  mean_ = mean.cast<double>();
  m2_ = Eigen::VectorXd::Zero(mean.size());
  count_ = 0.0;
  has_snapshot_ = true;
}

Agent Agent::create(const AgentSpec& spec, std::uint64_t seed) {
  return {init_policy<float>(spec, seed), ObsNormalizer(spec.obs_dim)};
}

PolicyOutput Agent::forward(const Eigen::VectorXf& normalized_obs) const {
  return policy_forward(params, normalized_obs);
}

}  // namespace hieraf
