#include "hieraf/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "hieraf/encoder.hpp"
#include "hieraf/env.hpp"
#include "hieraf/error.hpp"

namespace hieraf {

int AgentSpec::logits_dim() const { return std::accumulate(heads.begin(), heads.end(), 0); }

AgentSpec high_agent_spec() { return {kHighObsDim, {kHighActionCount}, {256, 256}}; }
AgentSpec low_agent_spec() { return {kLowObsDim, {kCoarseCount, kFineCount}, {256, 256}}; }

void PpoConfig::validate() const {
  if (!(clip_eps > 0.0 && clip_eps < 1.0)) throw RangeError("clip_eps must lie in (0, 1)");
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw RangeError("gamma must lie in [0, 1]");
  if (!(gae_lambda >= 0.0 && gae_lambda <= 1.0)) throw RangeError("gae_lambda must lie in [0, 1]");
  if (epochs <= 0 || minibatch_size <= 0 || rollout_size <= 0) {
    throw RangeError("epochs, minibatch_size and rollout_size must be positive");
  }
  if (!(learning_rate > 0.0) || !(value_coef > 0.0) || !(entropy_coef >= 0.0) ||
      !(max_grad_norm > 0.0)) {
    throw RangeError("learning_rate, value_coef, max_grad_norm must be positive; entropy_coef >= 0");
  }
}

template <typename T>
typename PolicyParams<T>::Vector PolicyParams<T>::flat() const {
  Vector out(size());
  out << policy.params(), value.params();
  return out;
}

template <typename T>
void PolicyParams<T>::set_flat(const Vector& theta) {
  if (theta.size() != size()) throw ContractError("parameter vector size mismatch");
  policy.params() = theta.head(policy.params().size());
  value.params() = theta.tail(value.params().size());
}

template <typename T>
bool PolicyParams<T>::all_finite() const {
  return policy.params().allFinite() && value.params().allFinite() && adam_m.allFinite() &&
         adam_v.allFinite();
}

namespace {

std::vector<int> layer_sizes(const AgentSpec& spec, int out) {
  std::vector<int> sizes = {spec.obs_dim};
  sizes.insert(sizes.end(), spec.hidden.begin(), spec.hidden.end());
  sizes.push_back(out);
  return sizes;
}

}  // namespace

template <typename T>
PolicyParams<T> zero_policy(const AgentSpec& spec) {
  if (spec.obs_dim <= 0 || spec.heads.empty()) throw ContractError("agent spec is empty");
  PolicyParams<T> p;
  p.spec = spec;
  p.policy = Mlp<T>(layer_sizes(spec, spec.logits_dim()));
  p.value = Mlp<T>(layer_sizes(spec, 1));
  p.adam_m = PolicyParams<T>::Vector::Zero(p.size());
  p.adam_v = PolicyParams<T>::Vector::Zero(p.size());
  return p;
}

template <typename T>
PolicyParams<T> init_policy(const AgentSpec& spec, std::uint64_t seed) {
  PolicyParams<T> p = zero_policy<T>(spec);
  std::mt19937_64 rng(seed);
  // Near-uniform initial policy, unit-scale value head.
  p.policy.init(rng, T(1), T(0.01));
  p.value.init(rng, T(1), T(1));
  return p;
}

namespace {

struct HeadStats {
  Eigen::VectorXd log_probs;
  Eigen::VectorXd probs;
  double entropy = 0.0;
};

template <typename Derived>
HeadStats log_softmax(const Eigen::MatrixBase<Derived>& logits) {
  HeadStats h;
  const Eigen::VectorXd z = logits.template cast<double>();
  const double m = z.maxCoeff();
  const double lse = m + std::log((z.array() - m).exp().sum());
  h.log_probs = z.array() - lse;
  h.probs = h.log_probs.array().exp();
  h.entropy = -(h.probs.array() * h.log_probs.array()).sum();
  return h;
}

}  // namespace

template <typename T>
PolicyOutput policy_forward(const PolicyParams<T>& params,
                            const Eigen::Ref<const typename Mlp<T>::Vector>& obs) {
  if (obs.size() != params.spec.obs_dim) {
    throw ContractError("observation has " + std::to_string(obs.size()) + " entries, agent expects " +
                        std::to_string(params.spec.obs_dim));
  }
  const typename Mlp<T>::Matrix x = obs;
  const auto logits = params.policy.forward(x);
  PolicyOutput out;
  int offset = 0;
  for (int n : params.spec.heads) {
    out.probs.push_back(log_softmax(logits.col(0).segment(offset, n)).probs);
    offset += n;
  }
  out.value = static_cast<double>(params.value.forward(x)(0, 0));
  return out;
}

SampledAction sample_action(const std::vector<Eigen::VectorXd>& dists, std::mt19937_64& rng) {
  SampledAction s;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (const auto& p : dists) {
    const double u = unit(rng);
    double cum = 0.0;
    int chosen = static_cast<int>(p.size()) - 1;
    for (int i = 0; i < p.size(); ++i) {
      cum += p[i];
      if (u < cum) {
        chosen = i;
        break;
      }
    }
    // Guard against rounding in the cumulative sum landing on a zero entry.
    while (p[chosen] <= 0.0 && chosen > 0) --chosen;
    s.actions.push_back(chosen);
    s.log_prob += std::log(p[chosen]);
  }
  return s;
}

SampledAction greedy_action(const std::vector<Eigen::VectorXd>& dists) {
  SampledAction s;
  for (const auto& p : dists) {
    Eigen::Index best;
    p.maxCoeff(&best);
    s.actions.push_back(static_cast<int>(best));
    s.log_prob += std::log(p[best]);
  }
  return s;
}

void RolloutBuffer::clear() {
  transitions.clear();
  advantages.clear();
  returns.clear();
  bootstrap_value = 0.0;
  advantages_ready = false;
}

void compute_advantages(RolloutBuffer& buffer, double gamma, double lambda) {
  if (buffer.empty()) throw ContractError("compute_advantages on an empty buffer");
  const auto& tr = buffer.transitions;
  const std::size_t n = tr.size();
  buffer.advantages.assign(n, 0.0);
  buffer.returns.assign(n, 0.0);
  double next_adv = 0.0;
  for (std::size_t k = n; k-- > 0;) {
    const double not_done = tr[k].done ? 0.0 : 1.0;
    const double next_value = k + 1 < n ? tr[k + 1].value : buffer.bootstrap_value;
    const double delta = tr[k].reward + gamma * next_value * not_done - tr[k].value;
    next_adv = delta + gamma * lambda * not_done * next_adv;
    buffer.advantages[k] = next_adv;
    buffer.returns[k] = next_adv + tr[k].value;
  }
  buffer.advantages_ready = true;
}

void normalize_advantages(std::vector<double>& advantages) {
  const std::size_t n = advantages.size();
  if (n == 0) return;
  const double mean = std::accumulate(advantages.begin(), advantages.end(), 0.0) / n;
  for (double& a : advantages) a -= mean;
  if (n < 2) return;
  double sq = 0.0;
  for (double a : advantages) sq += a * a;
  const double std = std::sqrt(sq / n);
  if (std > 1e-12) {
    for (double& a : advantages) a /= std;
  }
}

double clipped_objective(double ratio, double advantage, double eps) {
  return std::min(ratio * advantage, std::clamp(ratio, 1.0 - eps, 1.0 + eps) * advantage);
}

template <typename T>
LossBreakdown ppo_loss(const PolicyParams<T>& params, const Minibatch<T>& batch,
                       const PpoConfig& config, typename Mlp<T>::Vector* grad) {
  using Matrix = typename Mlp<T>::Matrix;
  const auto b = static_cast<Eigen::Index>(batch.advantages.size());
  if (b == 0 || batch.obs.cols() != b) throw ContractError("minibatch is empty or inconsistent");

  typename Mlp<T>::Cache pc;
  typename Mlp<T>::Cache vc;
  const Matrix logits = params.policy.forward(batch.obs, grad ? &pc : nullptr);
  const Matrix values = params.value.forward(batch.obs, grad ? &vc : nullptr);

  Matrix d_logits;
  Matrix d_values;
  if (grad) {
    d_logits = Matrix::Zero(logits.rows(), b);
    d_values = Matrix::Zero(1, b);
  }
  const double inv_b = 1.0 / static_cast<double>(b);
  const double eps = config.clip_eps;
  LossBreakdown loss;
  double clipped = 0.0;
  std::vector<HeadStats> heads(params.spec.heads.size());

  for (Eigen::Index i = 0; i < b; ++i) {
    double log_prob = 0.0;
    double entropy = 0.0;
    int offset = 0;
    for (std::size_t h = 0; h < heads.size(); ++h) {
      const int n = params.spec.heads[h];
      heads[h] = log_softmax(logits.col(i).segment(offset, n));
      log_prob += heads[h].log_probs[batch.actions[i][h]];
      entropy += heads[h].entropy;
      offset += n;
    }
    const double adv = batch.advantages[i];
    const double ratio = std::exp(log_prob - batch.old_log_prob[i]);
    const double unclipped = ratio * adv;
    const double clipped_term = std::clamp(ratio, 1.0 - eps, 1.0 + eps) * adv;
    loss.policy_loss -= std::min(unclipped, clipped_term) * inv_b;
    if (std::abs(ratio - 1.0) > eps) clipped += 1.0;
    loss.entropy += entropy * inv_b;
    const double v = static_cast<double>(values(0, i));
    const double err = v - batch.returns[i];
    loss.value_loss += err * err * inv_b;

    if (grad) {
      // The min selects the unclipped branch unless the clipped one is
      // strictly smaller, which only happens with the clamp active.
      const double d_obj_d_ratio = unclipped <= clipped_term ? adv : 0.0;
      const double d_log_prob = -d_obj_d_ratio * ratio * inv_b;
      offset = 0;
      for (std::size_t h = 0; h < heads.size(); ++h) {
        const int n = params.spec.heads[h];
        const auto& hs = heads[h];
        for (int k = 0; k < n; ++k) {
          const double onehot = k == batch.actions[i][h] ? 1.0 : 0.0;
          // d(-c_e H)/dz_k = c_e p_k (log p_k + H)
          const double g = d_log_prob * (onehot - hs.probs[k]) +
                           config.entropy_coef * inv_b * hs.probs[k] * (hs.log_probs[k] + hs.entropy);
          d_logits(offset + k, i) = static_cast<T>(g);
        }
        offset += n;
      }
      d_values(0, i) = static_cast<T>(config.value_coef * 2.0 * err * inv_b);
    }
  }
  loss.clip_fraction = clipped * inv_b;
  loss.total = loss.policy_loss + config.value_coef * loss.value_loss - config.entropy_coef * loss.entropy;

  if (grad) {
    typename Mlp<T>::Vector gp = Mlp<T>::Vector::Zero(params.policy.params().size());
    typename Mlp<T>::Vector gv = Mlp<T>::Vector::Zero(params.value.params().size());
    params.policy.backward(pc, d_logits, gp);
    params.value.backward(vc, d_values, gv);
    grad->resize(params.size());
    *grad << gp, gv;
  }
  return loss;
}

template <typename T>
UpdateDiagnostics ppo_update(PolicyParams<T>& params, RolloutBuffer& buffer,
                             const PpoConfig& config, std::mt19937_64& rng) {
  using Vector = typename Mlp<T>::Vector;
  if (!buffer.advantages_ready) throw ContractError("ppo_update before compute_advantages");
  config.validate();
  const std::size_t n = buffer.size();
  std::vector<double> adv = buffer.advantages;
  normalize_advantages(adv);

  const PolicyParams<T> snapshot = params;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  UpdateDiagnostics diag;

  constexpr double kBeta1 = 0.9;
  constexpr double kBeta2 = 0.999;
  constexpr double kAdamEps = 1e-5;

  Vector grad;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < n; start += config.minibatch_size) {
      const std::size_t end = std::min(n, start + static_cast<std::size_t>(config.minibatch_size));
      Minibatch<T> mb;
      mb.obs.resize(params.spec.obs_dim, static_cast<Eigen::Index>(end - start));
      for (std::size_t j = start; j < end; ++j) {
        const auto& t = buffer.transitions[order[j]];
        mb.obs.col(static_cast<Eigen::Index>(j - start)) = t.obs.template cast<T>();
        mb.actions.push_back(t.actions);
        mb.old_log_prob.push_back(t.log_prob);
        mb.advantages.push_back(adv[order[j]]);
        mb.returns.push_back(buffer.returns[order[j]]);
      }
      const auto loss = ppo_loss(params, mb, config, &grad);
      if (!std::isfinite(loss.total) || !grad.allFinite()) {
        params = snapshot;
        buffer.clear();
        throw NumericError("non-finite PPO loss or gradient at update " + std::to_string(params.updates));
      }
      const double norm = static_cast<double>(grad.norm());
      if (norm > config.max_grad_norm) grad *= static_cast<T>(config.max_grad_norm / norm);

      ++params.updates;
      const double t = static_cast<double>(params.updates);
      params.adam_m = T(kBeta1) * params.adam_m + T(1 - kBeta1) * grad;
      params.adam_v = T(kBeta2) * params.adam_v + T(1 - kBeta2) * grad.cwiseProduct(grad);
      const T step = static_cast<T>(config.learning_rate * std::sqrt(1 - std::pow(kBeta2, t)) /
                                    (1 - std::pow(kBeta1, t)));
      const Vector delta =
          step * (params.adam_m.array() / (params.adam_v.array().sqrt() + T(kAdamEps))).matrix();
      Vector theta = params.flat();
      theta -= delta;
      params.set_flat(theta);
      if (!params.all_finite()) {
        params = snapshot;
        buffer.clear();
        throw NumericError("parameters became non-finite during the PPO update");
      }

      diag.policy_loss += loss.policy_loss;
      diag.value_loss += loss.value_loss;
      diag.entropy += loss.entropy;
      diag.clip_fraction += loss.clip_fraction;
      ++diag.minibatches;
    }
  }
  if (diag.minibatches > 0) {
    diag.policy_loss /= diag.minibatches;
    diag.value_loss /= diag.minibatches;
    diag.entropy /= diag.minibatches;
    diag.clip_fraction /= diag.minibatches;
  }
  buffer.clear();
  return diag;
}

#define HIERAF_INSTANTIATE(T)                                                                  \
  template struct PolicyParams<T>;                                                             \
  template PolicyParams<T> init_policy<T>(const AgentSpec&, std::uint64_t);                    \
  template PolicyParams<T> zero_policy<T>(const AgentSpec&);                                   \
  template PolicyOutput policy_forward<T>(const PolicyParams<T>&,                              \
                                          const Eigen::Ref<const typename Mlp<T>::Vector>&);   \
  template LossBreakdown ppo_loss<T>(const PolicyParams<T>&, const Minibatch<T>&,              \
                                     const PpoConfig&, typename Mlp<T>::Vector*);              \
  template UpdateDiagnostics ppo_update<T>(PolicyParams<T>&, RolloutBuffer&, const PpoConfig&, \
                                           std::mt19937_64&);

HIERAF_INSTANTIATE(float)
HIERAF_INSTANTIATE(double)

#undef HIERAF_INSTANTIATE

}  // namespace hieraf
