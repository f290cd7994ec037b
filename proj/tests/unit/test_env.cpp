#include <gtest/gtest.h>

#include <cmath>

#include "hieraf/detect.hpp"
#include "hieraf/env.hpp"
#include "hieraf/error.hpp"
#include "test_context.hpp"

namespace hieraf {
namespace {

using hieraf::testing::default_context;

EnvConfig quiet_config(std::uint64_t seed = 1) {
  EnvConfig c;
  c.seed = seed;
  c.noise_enabled = false;
  return c;
}

TEST(LensAction, Mapping) {
  EXPECT_DOUBLE_EQ(lens_from_action(0, 10), 24.0);
  EXPECT_DOUBLE_EQ(lens_from_action(23, 10), 70.0);
  EXPECT_DOUBLE_EQ(lens_from_action(12, 0), 47.0);
  EXPECT_DOUBLE_EQ(lens_from_action(0, 0), 24.0);
  EXPECT_DOUBLE_EQ(lens_from_action(23, 20), 70.0);
  EXPECT_THROW(lens_from_action(24, 0), RangeError);
  EXPECT_THROW(lens_from_action(0, 21), RangeError);
  EXPECT_THROW(lens_from_action(-1, 5), RangeError);
}

TEST(LensAction, NearestActionRoundTrip) {
  for (int c = 0; c < kCoarseCount; ++c) {
    for (int f = 0; f < kFineCount; ++f) {
      const double lens = lens_from_action(c, f);
      EXPECT_NEAR(lens_from_action(action_for_lens(lens)), lens, 1e-9);
    }
  }
  EXPECT_NEAR(lens_from_action(action_for_lens(41.23)), 41.2, 1e-9);
}

TEST(Rewards, HighCases) {
  EXPECT_DOUBLE_EQ(reward_high(100, 80.0), 1.0);
  EXPECT_DOUBLE_EQ(reward_high(30, 40.0), -0.4);
  EXPECT_DOUBLE_EQ(reward_high(10, 0.0), -1.0);
}

TEST(Rewards, LowCases) {
  EXPECT_DOUBLE_EQ(reward_low(false, 0.0), -1.0);
  EXPECT_DOUBLE_EQ(reward_low(true, 25.0), -0.25);
  EXPECT_DOUBLE_EQ(reward_low(true, 0.0), 0.0);
}

TEST(EnvConfigTest, Validation) {
  EnvConfig c;
  EXPECT_NO_THROW(c.validate());
  c.horizon_low = 0;
  EXPECT_THROW(c.validate(), RangeError);
  c = {};
  c.distance_min_cm = 120.0;
  EXPECT_THROW(c.validate(), RangeError);
  c = {};
  c.factory_exposure_index = 146;
  EXPECT_THROW(c.validate(), RangeError);
}

TEST(Env, ResetProducesFactoryState) {
  HierarchicalEnv env(quiet_config(), default_context());
  const HighObs obs = env.reset();
  EXPECT_EQ(env.state().phase, Phase::kAwaitHigh);
  EXPECT_EQ(obs.flat().size(), 2069);
  EXPECT_EQ(obs.flat().size(), kHighObsDim);
  EXPECT_DOUBLE_EQ(env.state().lens.control(), kLensMin);
  EXPECT_EQ(env.state().camera.exposure_index(), env.config().factory_exposure_index);
  const auto& s = env.state().scene;
  EXPECT_GE(s.distance_cm(), 140.0);
  EXPECT_LE(s.distance_cm(), 200.0);
  EXPECT_GE(s.illuminance_lx(), 13.0);
  EXPECT_LE(s.illuminance_lx(), 300.0);
}

TEST(Env, ResetIsDeterministicPerSeed) {
  EnvConfig c;
  c.seed = 77;
  HierarchicalEnv a(c, default_context());
  HierarchicalEnv b(c, default_context());
  for (int i = 0; i < 3; ++i) {
    const auto oa = a.reset();
    const auto ob = b.reset();
    EXPECT_EQ(oa.flat(), ob.flat());
    EXPECT_EQ(a.state().scene.distance_cm(), b.state().scene.distance_cm());
    EXPECT_EQ(a.state().scene.illuminance_lx(), b.state().scene.illuminance_lx());
  }
}

TEST(Env, NearBlackExposureEndsEpisode) {
  HierarchicalEnv env(quiet_config(), default_context());
  env.reset(default_context()->scenes[0].with_conditions(170.0, 13.0));
  const HighStep st = env.step_high(0);
  EXPECT_TRUE(st.done);
  EXPECT_FALSE(st.handoff);
  EXPECT_DOUBLE_EQ(st.reward, -1.0);
  EXPECT_LT(st.peak, 25);
  EXPECT_EQ(env.state().phase, Phase::kDone);
  EXPECT_THROW(env.step_low({}), ProtocolError);
  EXPECT_THROW(env.step_high(3), ProtocolError);
}

TEST(Env, GoodExposureHandsOff) {
  HierarchicalEnv env(quiet_config(), default_context());
  const Scene scene = default_context()->scenes[2].with_conditions(160.0, 120.0);
  env.reset(scene);
  const HighStep st = env.step_high(well_exposed_index(scene));
  EXPECT_GE(st.peak, 50);
  EXPECT_LE(st.peak, 150);
  EXPECT_TRUE(st.handoff);
  EXPECT_FALSE(st.done);
  EXPECT_DOUBLE_EQ(st.reward, 1.0);
  EXPECT_TRUE(std::isnan(st.quality));
  EXPECT_EQ(env.state().phase, Phase::kAwaitLow);
  EXPECT_THROW(env.step_high(10), ProtocolError);
}

TEST(Env, PenaltyBandIsScored) {
  HierarchicalEnv env(quiet_config(), default_context());
  const Scene scene = default_context()->scenes[2].with_conditions(160.0, 120.0);
  int idx = -1;
  for (int i = 0; i < kExposureCount && idx < 0; ++i) {
    const int p = histogram256(render(scene, LensState(kLensMin), CameraState(i), {})).peak;
    if (p >= 25 && p < 50) idx = i;
  }
  ASSERT_GE(idx, 0);
  env.reset(scene);
  const HighStep st = env.step_high(idx);
  EXPECT_TRUE(st.handoff);
  ASSERT_FALSE(std::isnan(st.quality));
  EXPECT_NEAR(st.reward, -0.01 * st.quality, 1e-12);
  EXPECT_LE(st.reward, 0.0);
  EXPECT_GE(st.reward, -1.0);
}

TEST(Env, LowStepNearFocusDetects) {
  HierarchicalEnv env(quiet_config(), default_context());
  const Scene scene = default_context()->scenes[1].with_conditions(170.0, 100.0);
  env.reset(scene);
  ASSERT_TRUE(env.step_high(well_exposed_index(scene)).handoff);
  const LowAction a = action_for_lens(env.f_star() + 0.3);
  ASSERT_LE(std::abs(lens_from_action(a) - env.f_star()), 0.5);
  const LowStep st = env.step_low(a);
  EXPECT_TRUE(st.detected);
  EXPECT_TRUE(st.done);
  EXPECT_LE(st.reward, 0.0);
  EXPECT_GT(st.reward, -1.0);
  EXPECT_NEAR(st.reward, -0.01 * st.quality, 1e-12);
  EXPECT_EQ(st.obs.features.size(), kLowObsDim);
  EXPECT_THROW(env.step_low(a), ProtocolError);
}

TEST(Env, HorizonExhaustion) {
  HierarchicalEnv env(quiet_config(), default_context());
  const Scene scene = default_context()->scenes[1].with_conditions(140.0, 100.0);
  env.reset(scene);
  ASSERT_TRUE(env.step_high(well_exposed_index(scene)).handoff);
  const LowAction far{23, 20};
  for (int i = 1; i <= env.config().horizon_low; ++i) {
    const LowStep st = env.step_low(far);
    EXPECT_FALSE(st.detected);
    EXPECT_DOUBLE_EQ(st.reward, -1.0);
    EXPECT_TRUE(std::isnan(st.quality));
    EXPECT_EQ(st.done, i == env.config().horizon_low);
  }
  EXPECT_EQ(env.state().phase, Phase::kDone);
  EXPECT_THROW(env.step_low(far), ProtocolError);
}

TEST(Env, ProbeLeavesEpisodeAlone) {
  HierarchicalEnv env(quiet_config(), default_context());
  const Scene scene = default_context()->scenes[3].with_conditions(150.0, 200.0);
  env.reset(scene);
  ASSERT_TRUE(env.step_high(well_exposed_index(scene)).handoff);
  const auto before = env.state().last_frame;
  const auto frame = env.probe(env.f_star());
  EXPECT_TRUE(env.probe_detect(frame));
  EXPECT_EQ(env.state().last_frame, before);
  EXPECT_DOUBLE_EQ(env.state().lens.control(), kLensMin);
  EXPECT_EQ(env.state().phase, Phase::kAwaitLow);
}

TEST(Env, ExposureOnlyModeEndsAfterHighStep) {
  EnvConfig c = quiet_config();
  c.mode = EnvMode::kExposureOnly;
  HierarchicalEnv env(c, default_context());
  const Scene scene = default_context()->scenes[2].with_conditions(160.0, 120.0);
  env.reset(scene);
  const HighStep st = env.step_high(well_exposed_index(scene));
  EXPECT_TRUE(st.done);
  EXPECT_FALSE(st.handoff);
  EXPECT_DOUBLE_EQ(st.reward, 1.0);
}

TEST(Env, RandomEpisodesRespectBounds) {
  EnvConfig c;
  c.seed = 5;
  HierarchicalEnv env(c, default_context());
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<int> hi(0, kExposureCount - 1), co(0, kCoarseCount - 1),
      fi(0, kFineCount - 1);
  for (int ep = 0; ep < 30; ++ep) {
    env.reset();
    int steps = 1;
    const HighStep h = env.step_high(hi(rng));
    EXPECT_TRUE(h.reward == 1.0 || (h.reward >= -1.0 && h.reward <= 0.0));
    EXPECT_NE(h.handoff, h.done);
    bool done = h.done;
    while (!done) {
      const LowStep l = env.step_low({co(rng), fi(rng)});
      EXPECT_TRUE(l.reward == -1.0 || (l.reward > -1.0 && l.reward <= 0.0));
      done = l.done;
      ++steps;
    }
    EXPECT_LE(steps, 1 + c.horizon_low);
  }
}

}  // namespace
}  // namespace hieraf
