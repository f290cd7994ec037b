#include "hieraf/persist.hpp"

#include <cstring>

#include "hieraf/error.hpp"

namespace hieraf {

namespace {

template <typename Derived>
Block matrix_block(std::string name, const Eigen::MatrixBase<Derived>& m) {
  Block b{std::move(name), {static_cast<std::uint32_t>(m.rows()), static_cast<std::uint32_t>(m.cols())}, {}};
  b.data.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) b.data.push_back(static_cast<float>(m(r, c)));
  }
  return b;
}

Block vector_block(std::string name, const Eigen::VectorXf& v) {
  return {std::move(name), {static_cast<std::uint32_t>(v.size())}, std::vector<float>(v.data(), v.data() + v.size())};
}

Eigen::VectorXf block_vector(const Block& b, Eigen::Index expected) {
  if (b.dims.size() != 1 || static_cast<Eigen::Index>(b.data.size()) != expected) {
    throw CheckpointError("block '" + b.name + "' has " + std::to_string(b.data.size()) +
                          " values, expected " + std::to_string(expected));
  }
  return Eigen::Map<const Eigen::VectorXf>(b.data.data(), expected);
}

Block ints_block(std::string name, const std::vector<int>& values) {
  Block b{std::move(name), {static_cast<std::uint32_t>(values.size())}, {}};
  for (int v : values) b.data.push_back(static_cast<float>(v));
  return b;
}

std::vector<int> block_ints(const Block& b) {
  std::vector<int> out;
  for (float f : b.data) {
    if (f != static_cast<float>(static_cast<int>(f))) throw CheckpointError("block '" + b.name + "' is not integral");
    out.push_back(static_cast<int>(f));
  }
  return out;
}

// Spec layout: obs_dim, head count, heads..., hidden count, hidden...
std::vector<int> encode_spec(const AgentSpec& s) {
  std::vector<int> v = {s.obs_dim, static_cast<int>(s.heads.size())};
  v.insert(v.end(), s.heads.begin(), s.heads.end());
  v.push_back(static_cast<int>(s.hidden.size()));
  v.insert(v.end(), s.hidden.begin(), s.hidden.end());
  return v;
}

AgentSpec decode_spec(const std::vector<int>& v) {
  auto fail = [] { return CheckpointError("malformed agent spec block"); };
  if (v.size() < 2) throw fail();
  AgentSpec s;
  s.obs_dim = v[0];
  const auto nh = static_cast<std::size_t>(v[1]);
  if (v.size() < 3 + nh) throw fail();
  s.heads.assign(v.begin() + 2, v.begin() + 2 + static_cast<std::ptrdiff_t>(nh));
  const auto nl = static_cast<std::size_t>(v[2 + nh]);
  if (v.size() != 3 + nh + nl) throw fail();
  s.hidden.assign(v.begin() + 3 + static_cast<std::ptrdiff_t>(nh), v.end());
  return s;
}

}  // namespace

void append_agent_blocks(Blocks& blocks, const std::string& prefix, const Agent& agent) {
  const auto& p = agent.params;
  blocks.push_back(ints_block(prefix + "/spec", encode_spec(p.spec)));
  blocks.push_back(vector_block(prefix + "/policy", p.policy.params()));
  blocks.push_back(vector_block(prefix + "/value", p.value.params()));
  blocks.push_back(vector_block(prefix + "/adam_m", p.adam_m));
  blocks.push_back(vector_block(prefix + "/adam_v", p.adam_v));
  blocks.push_back(u64_block(prefix + "/updates", static_cast<std::uint64_t>(p.updates)));
  blocks.push_back(vector_block(prefix + "/obs_mean", agent.normalizer.snapshot_mean()));
  blocks.push_back(vector_block(prefix + "/obs_inv_std", agent.normalizer.snapshot_inv_std()));
}

Agent agent_from_blocks(const Blocks& blocks, const std::string& prefix, const AgentSpec& expected) {
  const AgentSpec spec = decode_spec(block_ints(find_block(blocks, prefix + "/spec")));
  if (!(spec == expected)) throw ContractError("checkpoint agent '" + prefix + "' does not match the expected action/observation spec");
  Agent a{zero_policy<float>(spec), ObsNormalizer(spec.obs_dim)};
  a.params.policy.params() = block_vector(find_block(blocks, prefix + "/policy"), a.params.policy.params().size());
  a.params.value.params() = block_vector(find_block(blocks, prefix + "/value"), a.params.value.params().size());
  a.params.adam_m = block_vector(find_block(blocks, prefix + "/adam_m"), a.params.size());
  a.params.adam_v = block_vector(find_block(blocks, prefix + "/adam_v"), a.params.size());
  a.params.updates = static_cast<std::int64_t>(block_u64(find_block(blocks, prefix + "/updates")));
  a.normalizer.set_snapshot(block_vector(find_block(blocks, prefix + "/obs_mean"), spec.obs_dim),
                            block_vector(find_block(blocks, prefix + "/obs_inv_std"), spec.obs_dim));
  return a;
}

void append_quality_blocks(Blocks& blocks, const QualityModel& model) {
  blocks.push_back(matrix_block("quality/mu", model.mu()));
  blocks.push_back(matrix_block("quality/sigma", model.sigma()));
  blocks.push_back({"quality/tau", {}, {static_cast<float>(model.tau())}});
}

QualityModel quality_from_blocks(const Blocks& blocks) {
  const auto& mu = find_block(blocks, "quality/mu");
  const auto& sigma = find_block(blocks, "quality/sigma");
  const auto& tau = find_block(blocks, "quality/tau");
  constexpr std::size_t n = kBrisqueFeatureCount;
  if (mu.data.size() != n || sigma.data.size() != n * n || tau.data.size() != 1) {
    throw CheckpointError("quality model blocks have the wrong shape");
  }
  QualityModel::Vector m;
  QualityModel::Matrix s;
  for (std::size_t i = 0; i < n; ++i) m[static_cast<Eigen::Index>(i)] = mu.data[i];
  for (std::size_t c = 0; c < n; ++c) {
    for (std::size_t r = 0; r < n; ++r) {
      s(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = sigma.data[c * n + r];
    }
  }
  return QualityModel(m, s, tau.data[0]);
}

void append_detector_blocks(Blocks& blocks, const DetectorThresholds& th) {
  blocks.push_back({"detector/thresholds", {4},
                    {static_cast<float>(th.sharp_min), static_cast<float>(th.mean_lo),
                     static_cast<float>(th.mean_hi), static_cast<float>(th.contrast_min)}});
}

DetectorThresholds detector_from_blocks(const Blocks& blocks) {
  const auto& b = find_block(blocks, "detector/thresholds");
  if (b.data.size() != 4) throw CheckpointError("detector threshold block has the wrong shape");
  DetectorThresholds th{b.data[0], b.data[1], b.data[2], b.data[3]};
  th.validate();
  return th;
}

Blocks to_blocks(const SystemState& state) {
  if (!state.quality) throw ContractError("system state has no quality model");
  Blocks blocks;
  blocks.push_back(u64_block("encoder/seed", state.encoder_seed));
  append_quality_blocks(blocks, *state.quality);
  append_detector_blocks(blocks, state.thresholds);
  if (state.high) append_agent_blocks(blocks, "high", *state.high);
  if (state.low) append_agent_blocks(blocks, "low", *state.low);
  return blocks;
}

SystemState from_blocks(const Blocks& blocks) {
  SystemState s;
  s.encoder_seed = block_u64(find_block(blocks, "encoder/seed"));
  s.quality = quality_from_blocks(blocks);
  s.thresholds = detector_from_blocks(blocks);
  if (has_block(blocks, "high/spec")) s.high = agent_from_blocks(blocks, "high", high_agent_spec());
  if (has_block(blocks, "low/spec")) s.low = agent_from_blocks(blocks, "low", low_agent_spec());
  return s;
}

void save_system(const std::filesystem::path& path, const SystemState& state) {
  save_checkpoint(path, to_blocks(state));
}

SystemState load_system(const std::filesystem::path& path) { return from_blocks(load_checkpoint(path)); }

}  // namespace hieraf
