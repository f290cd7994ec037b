#include <benchmark/benchmark.h>

#include <random>

#include "hieraf/detect.hpp"
#include "hieraf/encoder.hpp"
#include "hieraf/harness.hpp"
#include "hieraf/iqa.hpp"
#include "hieraf/optics.hpp"
#include "hieraf/ppo.hpp"
#include "hieraf/scene.hpp"

using namespace hieraf;

namespace {

const Scene& scene() {
  static const Scene s = bundled_scenes()[3];
  return s;
}

SensorImage frame(double blur_offset) {
  const double f = in_focus_control(scene().distance_cm());
  return render(scene(), LensState(f + blur_offset), CameraState(well_exposed_index(scene())), {true, 11});
}

}  // namespace

static void BM_Render(benchmark::State& state) {
  const double offset = static_cast<double>(state.range(0));
  const double f = in_focus_control(scene().distance_cm());
  const CameraState cam(well_exposed_index(scene()));
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(render(scene(), LensState(f + offset), cam, {true, ++seed}));
}
BENCHMARK(BM_Render)->Arg(0)->Arg(8)->Arg(36);

static void BM_Tenengrad(benchmark::State& state) {
  const auto img = frame(0);
  for (auto _ : state) benchmark::DoNotOptimize(tenengrad(img));
}
BENCHMARK(BM_Tenengrad);

static void BM_BrisqueFeatures(benchmark::State& state) {
  const auto img = frame(4);
  for (auto _ : state) benchmark::DoNotOptimize(brisque_features(img));
}
BENCHMARK(BM_BrisqueFeatures);

static void BM_Encode(benchmark::State& state) {
  const auto params = init_encoder(1);
  const auto img = frame(0);
  for (auto _ : state) benchmark::DoNotOptimize(encode(params, img));
}
BENCHMARK(BM_Encode);

static void BM_PolicyForward(benchmark::State& state) {
  const auto spec = low_agent_spec();
  const auto params = init_policy<float>(spec, 3);
  const Eigen::VectorXf obs = Eigen::VectorXf::Random(spec.obs_dim);
  for (auto _ : state) benchmark::DoNotOptimize(policy_forward(params, obs));
}
BENCHMARK(BM_PolicyForward);

// One PPO update over a rollout of range(0) low-level transitions.
static void BM_PpoUpdate(benchmark::State& state) {
  const auto spec = low_agent_spec();
  const auto n = static_cast<int>(state.range(0));
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (auto _ : state) {
    state.PauseTiming();
    auto params = init_policy<float>(spec, 3);
    RolloutBuffer buf;
    for (int i = 0; i < n; ++i) {
      buf.transitions.push_back({Eigen::VectorXf::Random(spec.obs_dim), {i % 24, i % 21}, -6.2, u(rng), u(rng),
                                 i % 10 == 9});
    }
    compute_advantages(buf, 0.99, 0.95);
    state.ResumeTiming();
    benchmark::DoNotOptimize(ppo_update(params, buf, PpoConfig{}, rng));
  }
}
BENCHMARK(BM_PpoUpdate)->Arg(256)->Arg(2048)->Unit(benchmark::kMillisecond);

static void BM_EnvEpisode(benchmark::State& state) {
  static const SystemState system = calibrate_system(RunConfig{});
  const RunConfig config;
  HierarchicalEnv env(config.env, make_context(system, config));
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> coarse(0, 23), fine(0, 20);
  for (auto _ : state) {
    env.reset();
    const auto h = env.step_high(well_exposed_index(env.state().scene));
    if (h.done) continue;
    for (bool done = false; !done;) done = env.step_low({coarse(rng), fine(rng)}).done;
  }
}
BENCHMARK(BM_EnvEpisode)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
