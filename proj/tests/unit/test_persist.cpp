#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>

#include "hieraf/checkpoint.hpp"
#include "hieraf/curriculum.hpp"
#include "hieraf/error.hpp"
#include "hieraf/harness.hpp"
#include "hieraf/persist.hpp"
#include "test_context.hpp"

namespace hieraf {
namespace {

Blocks random_blocks(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> n(0.0f, 10.0f);
  Blocks blocks;
  blocks.push_back({"scalar", {}, {n(rng)}});
  blocks.push_back({"vec", {7}, {}});
  blocks.push_back({"mat/a", {3, 5}, {}});
  blocks.push_back({"empty", {0}, {}});
  for (auto& b : blocks) {
    if (b.name == "scalar") continue;
    b.data.resize(b.element_count());
    for (float& v : b.data) v = n(rng);
  }
  blocks[1].data[2] = std::numeric_limits<float>::denorm_min();
  blocks[1].data[3] = -0.0f;
  return blocks;
}

bool bitwise_equal(const Blocks& a, const Blocks& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].name != b[i].name || a[i].dims != b[i].dims || a[i].data.size() != b[i].data.size()) return false;
    if (std::memcmp(a[i].data.data(), b[i].data.data(), a[i].data.size() * sizeof(float)) != 0) return false;
  }
  return true;
}

TEST(Checkpoint, RoundTripIsBitwise) {
  const Blocks blocks = random_blocks(1);
  const auto bytes = encode_checkpoint(blocks);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "DASH");
  EXPECT_TRUE(bitwise_equal(decode_checkpoint(bytes), blocks));
  EXPECT_EQ(encode_checkpoint(decode_checkpoint(bytes)), bytes);
}

TEST(Checkpoint, FileRoundTrip) {
  const auto path = std::filesystem::temp_directory_path() / "hieraf_ckpt_test.dash";
  const Blocks blocks = random_blocks(2);
  save_checkpoint(path, blocks);
  EXPECT_TRUE(bitwise_equal(load_checkpoint(path), blocks));
  std::filesystem::remove(path);
  EXPECT_THROW(load_checkpoint(path), IoError);
}

TEST(Checkpoint, HeaderLayout) {
  const auto bytes = encode_checkpoint({{"x", {}, {1.5f}}});
  std::uint32_t version = 0, count = 0;
  std::memcpy(&version, bytes.data() + 4, 4);
  std::memcpy(&count, bytes.data() + 8, 4);
  EXPECT_EQ(version, kCheckpointVersion);
  EXPECT_EQ(count, 1u);
  // magic, version, count, name length, name, rank, one float.
  EXPECT_EQ(bytes.size(), 4u + 4 + 4 + 4 + 1 + 4 + 4);
}

TEST(Checkpoint, BadMagicRejected) {
  auto bytes = encode_checkpoint(random_blocks(3));
  std::memcpy(bytes.data(), "XXXX", 4);
  EXPECT_THROW(decode_checkpoint(bytes), CheckpointError);
}

TEST(Checkpoint, VersionMismatchRejected) {
  auto bytes = encode_checkpoint(random_blocks(3));
  bytes[4] = 2;
  EXPECT_THROW(decode_checkpoint(bytes), CheckpointError);
}

TEST(Checkpoint, EveryTruncationRejected) {
  const auto bytes = encode_checkpoint(random_blocks(4));
  for (std::size_t len = 0; len < bytes.size(); ++len) {
    const std::vector<char> cut(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(len));
    EXPECT_THROW(decode_checkpoint(cut), CheckpointError) << "length " << len;
  }
}

TEST(Checkpoint, TrailingBytesRejected) {
  auto bytes = encode_checkpoint(random_blocks(5));
  bytes.push_back(0);
  EXPECT_THROW(decode_checkpoint(bytes), CheckpointError);
}

TEST(Checkpoint, HugeDeclaredSizesRejected) {
  auto bytes = encode_checkpoint({{"x", {2}, {1.0f, 2.0f}}});
  const std::uint32_t huge = 0xFFFFFFFFu;
  std::memcpy(bytes.data() + 12 + 4 + 1 + 4, &huge, 4);
  EXPECT_THROW(decode_checkpoint(bytes), CheckpointError);
}

TEST(Checkpoint, EncodeValidation) {
  EXPECT_THROW(encode_checkpoint({{"a", {}, {}}, {"a", {}, {}}}), CheckpointError);
  EXPECT_THROW(encode_checkpoint({{"a", {2, 2}, {1.0f}}}), CheckpointError);
}

TEST(Checkpoint, BlockLookupAndIntegers) {
  const Blocks blocks = {u64_block("n", 0xFEDCBA9876543210ull), {"v", {1}, {3.0f}}};
  EXPECT_EQ(block_u64(find_block(blocks, "n")), 0xFEDCBA9876543210ull);
  EXPECT_TRUE(has_block(blocks, "v"));
  EXPECT_FALSE(has_block(blocks, "w"));
  EXPECT_THROW(find_block(blocks, "w"), CheckpointError);
  const auto back = decode_checkpoint(encode_checkpoint(blocks));
  EXPECT_EQ(block_u64(find_block(back, "n")), 0xFEDCBA9876543210ull);
}

Agent trained_looking_agent(const AgentSpec& spec, std::uint64_t seed) {
  Agent a = Agent::create(spec, seed);
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> n(0.0f, 1.0f);
  for (auto& v : a.params.adam_m) v = n(rng);
  for (auto& v : a.params.adam_v) v = std::abs(n(rng));
  a.params.updates = 123456789012ll;
  Eigen::VectorXf mean(spec.obs_dim), inv(spec.obs_dim);
  for (int i = 0; i < spec.obs_dim; ++i) {
    mean[i] = n(rng);
    inv[i] = 1.0f + std::abs(n(rng));
  }
  a.normalizer.set_snapshot(mean, inv);
  return a;
}

TEST(Persist, AgentRoundTrip) {
  const AgentSpec spec{20, {4, 3}, {16, 8}};
  const Agent a = trained_looking_agent(spec, 9);
  Blocks blocks;
  append_agent_blocks(blocks, "low", a);
  const Agent b = agent_from_blocks(decode_checkpoint(encode_checkpoint(blocks)), "low", spec);
  EXPECT_EQ(b.params.flat(), a.params.flat());
  EXPECT_EQ(b.params.adam_m, a.params.adam_m);
  EXPECT_EQ(b.params.adam_v, a.params.adam_v);
  EXPECT_EQ(b.params.updates, a.params.updates);
  EXPECT_EQ(b.normalizer.snapshot_mean(), a.normalizer.snapshot_mean());
  EXPECT_EQ(b.normalizer.snapshot_inv_std(), a.normalizer.snapshot_inv_std());
  EXPECT_THROW(agent_from_blocks(blocks, "low", AgentSpec{20, {4, 4}, {16, 8}}), ContractError);
}

TEST(Persist, SystemRoundTripIsBitwise) {
  SystemState s = testing::default_system();
  s.high = trained_looking_agent(high_agent_spec(), 1);
  s.low = trained_looking_agent(low_agent_spec(), 2);
  const auto path = std::filesystem::temp_directory_path() / "hieraf_system_test.dash";
  save_system(path, s);
  const SystemState t = load_system(path);
  EXPECT_EQ(t.encoder_seed, s.encoder_seed);
  EXPECT_EQ(t.thresholds, s.thresholds);
  ASSERT_TRUE(t.quality && s.quality);
  EXPECT_EQ(t.quality->mu(), s.quality->mu());
  EXPECT_EQ(t.quality->sigma(), s.quality->sigma());
  EXPECT_EQ(t.quality->tau(), s.quality->tau());
  ASSERT_TRUE(t.high && t.low);
  EXPECT_EQ(t.high->params.flat(), s.high->params.flat());
  EXPECT_EQ(t.low->params.flat(), s.low->params.flat());
  EXPECT_EQ(to_blocks(t), to_blocks(s));
  save_system(path, t);
  std::ifstream a(path, std::ios::binary);
  const std::vector<char> bytes((std::istreambuf_iterator<char>(a)), {});
  EXPECT_EQ(bytes, encode_checkpoint(to_blocks(s)));
  std::filesystem::remove(path);
}

TEST(Persist, AgentsAreOptional) {
  const SystemState s = testing::default_system();
  const SystemState t = from_blocks(to_blocks(s));
  EXPECT_FALSE(t.high.has_value());
  EXPECT_FALSE(t.low.has_value());
  Blocks missing = to_blocks(s);
  missing.erase(missing.begin());
  EXPECT_THROW(from_blocks(missing), CheckpointError);
}

TEST(Curriculum, Origin) {
  EXPECT_EQ(curriculum({}, 0), (Conditions{140.0, 13.0}));
}

TEST(Curriculum, TriangleWave) {
  const auto& e = curriculum_illuminances();
  ASSERT_FALSE(e.empty());
  const auto peak = std::max_element(e.begin(), e.end()) - e.begin();
  EXPECT_DOUBLE_EQ(e[peak], 300.0);
  for (std::ptrdiff_t i = 1; i <= peak; ++i) EXPECT_GT(e[i], e[i - 1]);
  for (std::size_t i = peak + 1; i < e.size(); ++i) EXPECT_LT(e[i], e[i - 1]);
  EXPECT_DOUBLE_EQ(e[1] - e[0], 10.0);
  EXPECT_GT(e.back(), e.front());
  for (double v : e) {
    EXPECT_GE(v, 13.0);
    EXPECT_LE(v, 300.0);
  }
  for (double d : curriculum_distances()) {
    EXPECT_GE(d, 140.0);
    EXPECT_LE(d, 200.0);
  }
}

TEST(Curriculum, PeriodicWithComputedCycle) {
  const CurriculumConfig c{3};
  const std::int64_t n = curriculum_cycle() * c.period;
  for (std::int64_t k = 0; k < 2 * n; k += 7) EXPECT_EQ(curriculum(c, k), curriculum(c, k + n));
  for (std::int64_t k = 0; k < 3; ++k) EXPECT_EQ(curriculum(c, k), curriculum(c, 0));
  EXPECT_NE(curriculum(c, 3), curriculum(c, 0));
  bool repeats_early = false;
  for (std::int64_t s = 1; s < curriculum_cycle(); ++s) {
    if (curriculum({}, s) == curriculum({}, 0)) repeats_early = true;
  }
  EXPECT_FALSE(repeats_early);
  EXPECT_THROW(curriculum(CurriculumConfig{0}, 0), RangeError);
}

TEST(Config, DefaultsAndOverrides) {
  const RunConfig c = parse_run_config(R"({
    "seed": 7, "stage": "single-agent-AF",
    "env": {"horizon_low": 6, "illuminance_lx": [20, 200]},
    "ppo_low": {"learning_rate": 0.001},
    "train": {"af_steps": 500}
  })");
  EXPECT_EQ(c.seed, 7u);
  EXPECT_EQ(c.train.seed, 7u);
  EXPECT_EQ(c.train.stage, Stage::kSingleAgentAf);
  EXPECT_EQ(c.env.horizon_low, 6);
  EXPECT_DOUBLE_EQ(c.env.illuminance_min_lx, 20.0);
  EXPECT_DOUBLE_EQ(c.env.illuminance_max_lx, 200.0);
  EXPECT_DOUBLE_EQ(c.train.ppo_low.learning_rate, 0.001);
  EXPECT_EQ(c.train.af_steps, 500);
  EXPECT_EQ(parse_run_config("{}").train.stage, Stage::kStaged);
}

TEST(Config, RejectsInvalid) {
  for (const char* text : {
           R"({"bogus": 1})",
           R"({"env": {"horizon_low": 0}})",
           R"({"env": {"horizon_low": "ten"}})",
           R"({"env": {"distance_cm": [100, 200]}})",
           R"({"env": {"distance_cm": [190, 150]}})",
           R"({"ppo_high": {"clip_eps": -0.1}})",
           R"({"ppo_low": {"epochs": 0}})",
           R"({"ppo_low": {"hidden": [8]}})",
           R"({"stage": "everything"})",
           R"({"quality_model": {"source": "checkpoint"}})",
           R"({"quality_model": {"corpus_size": 3}})",
           R"({"detector": {"kind": "external"}})",
           R"({"train": {"curriculum_period": -1}})",
           R"({"seed": -4})",
           "[1, 2]",
           "{not json",
       }) {
    EXPECT_THROW(parse_run_config(text), ConfigError) << text;
  }
}

TEST(Config, StageNames) {
  for (Stage s : {Stage::kSingleAgentAf, Stage::kSingleAgentExposure, Stage::kHierarchical, Stage::kStaged}) {
    EXPECT_EQ(parse_stage(stage_name(s)), s);
  }
  EXPECT_THROW(parse_stage("af"), ConfigError);
}

}  // namespace
}  // namespace hieraf
