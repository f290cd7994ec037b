#ifndef HIERAF_PPO_HPP_
#define HIERAF_PPO_HPP_

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "hieraf/network.hpp"

namespace hieraf {

// Observation size and categorical head sizes of one agent.
struct AgentSpec {
  int obs_dim = 0;
  std::vector<int> heads;
  std::vector<int> hidden = {256, 256};

  int logits_dim() const;
  friend bool operator==(const AgentSpec&, const AgentSpec&) = default;
};

AgentSpec high_agent_spec();  // 2069 -> one head of 146
AgentSpec low_agent_spec();   // 2048 -> heads of 24 and 21

struct PpoConfig {
  double clip_eps = 0.2;
  double gamma = 0.99;
  double gae_lambda = 0.95;
  int epochs = 10;
  int minibatch_size = 64;
  double learning_rate = 3e-4;
  double value_coef = 0.5;
  double entropy_coef = 0.01;
  int rollout_size = 2048;
  double max_grad_norm = 0.5;

  // Throws RangeError on any violated invariant.
  void validate() const;
};

// Policy and value networks of one agent plus Adam state. The parameter
// vector of the optimizer is [policy params, value params].
template <typename T>
struct PolicyParams {
  using Vector = typename Mlp<T>::Vector;

  AgentSpec spec;
  Mlp<T> policy;
  Mlp<T> value;
  Vector adam_m;
  Vector adam_v;
  std::int64_t updates = 0;  // optimizer steps taken

  Eigen::Index size() const { return policy.params().size() + value.params().size(); }
  Vector flat() const;
  void set_flat(const Vector& theta);
  bool all_finite() const;
};

template <typename T>
PolicyParams<T> init_policy(const AgentSpec& spec, std::uint64_t seed);
// Every weight zero: uniform heads and zero value.
template <typename T>
PolicyParams<T> zero_policy(const AgentSpec& spec);

struct PolicyOutput {
  std::vector<Eigen::VectorXd> probs;  // one distribution per head
  double value = 0.0;
};

// Softmax heads and value for a single observation. Throws ContractError on
// a dimension mismatch.
template <typename T>
PolicyOutput policy_forward(const PolicyParams<T>& params, const Eigen::Ref<const typename Mlp<T>::Vector>& obs);

struct SampledAction {
  std::vector<int> actions;
  double log_prob = 0.0;  // sum of per-head log-probabilities
};

SampledAction sample_action(const std::vector<Eigen::VectorXd>& dists, std::mt19937_64& rng);
SampledAction greedy_action(const std::vector<Eigen::VectorXd>& dists);

struct Transition {
  Eigen::VectorXf obs;
  std::vector<int> actions;
  double log_prob = 0.0;
  double reward = 0.0;
  double value = 0.0;
  bool done = false;
};

// Transitions in collection order. Episodes are contiguous; a trailing
// unfinished episode bootstraps from `bootstrap_value`.
struct RolloutBuffer {
  std::vector<Transition> transitions;
  double bootstrap_value = 0.0;
  std::vector<double> advantages;
  std::vector<double> returns;
  bool advantages_ready = false;

  std::size_t size() const { return transitions.size(); }
  bool empty() const { return transitions.empty(); }
  void clear();
};

// Generalized advantage estimation:
//   delta_t = r_t + gamma V(s_{t+1}) (1 - done_t) - V(s_t)
//   A_t     = delta_t + gamma lambda (1 - done_t) A_{t+1}
//   returns = A + V
// Advantages are left unnormalized. Throws ContractError on an empty buffer.
void compute_advantages(RolloutBuffer& buffer, double gamma, double lambda);

// Zero mean / unit variance in place (no-op scaling for a single element).
void normalize_advantages(std::vector<double>& advantages);

// min(r A, clip(r, 1 - eps, 1 + eps) A).
double clipped_objective(double ratio, double advantage, double eps);

struct LossBreakdown {
  double total = 0.0;        // minimized: -surrogate + c_v value_loss - c_e entropy
  double policy_loss = 0.0;  // -mean clipped surrogate
  double value_loss = 0.0;   // mean (V - R)^2
  double entropy = 0.0;      // mean summed head entropy
  double clip_fraction = 0.0;
};

// One minibatch in network layout (samples are columns).
template <typename T>
struct Minibatch {
  typename Mlp<T>::Matrix obs;
  std::vector<std::vector<int>> actions;
  std::vector<double> old_log_prob;
  std::vector<double> advantages;
  std::vector<double> returns;
};

// PPO loss and its exact gradient (flat, [policy, value]) by reverse-mode
// differentiation through both networks.
template <typename T>
LossBreakdown ppo_loss(const PolicyParams<T>& params, const Minibatch<T>& batch,
                       const PpoConfig& config, typename Mlp<T>::Vector* grad);

struct UpdateDiagnostics {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double clip_fraction = 0.0;
  int minibatches = 0;
};

// Normalizes advantages, then runs `epochs` passes of shuffled minibatch
// Adam steps. Clears the buffer. Throws NumericError (parameters untouched)
// if a loss or parameter goes non-finite; ContractError if advantages were
// not computed.
template <typename T>
UpdateDiagnostics ppo_update(PolicyParams<T>& params, RolloutBuffer& buffer,
                             const PpoConfig& config, std::mt19937_64& rng);

}  // namespace hieraf

#endif  // HIERAF_PPO_HPP_
