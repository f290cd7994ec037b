// Acceptance runner: one PASS/FAIL line per criterion.
//
//   hieraf_acceptance [--criterion N] [--work DIR]
//
// Criteria 5 and 6 share one staged training run whose checkpoint is cached
// in the work directory.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hieraf/bench.hpp"
#include "hieraf/checkpoint.hpp"
#include "hieraf/detect.hpp"
#include "hieraf/env.hpp"
#include "hieraf/harness.hpp"
#include "hieraf/iqa.hpp"
#include "hieraf/persist.hpp"
#include "hieraf/ppo.hpp"
#include "hieraf/scene.hpp"
#include "hieraf/trainer.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace hieraf;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

Outcome gradient_check() {
  const auto t0 = Clock::now();
  const double worst = oracle::ppo_gradient_check(100, 2024);
  const double secs = seconds_since(t0);
  return {worst <= 1e-4 && secs < 60.0,
          "max relative error " + fmt("%.3g", worst) + " over 100 batches, " + fmt("%.1f", secs) + " s"};
}

Outcome advantage_oracle() {
  std::mt19937_64 rng(99);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_int_distribution<int> len(1, 10);
  std::uniform_real_distribution<double> gam(0.5, 1.0);
  double worst = 0.0;
  for (int ep = 0; ep < 1000; ++ep) {
    const int n = len(rng);
    const double gamma = gam(rng);
    RolloutBuffer buf;
    std::vector<double> r(n), v(n);
    for (int t = 0; t < n; ++t) {
      r[t] = normal(rng);
      v[t] = normal(rng);
      buf.transitions.push_back({Eigen::VectorXf::Zero(1), {0}, 0.0, r[t], v[t], t + 1 == n});
    }
    compute_advantages(buf, gamma, 1.0);
    const auto expected = oracle::mc_advantages(r, v, gamma);
    for (int t = 0; t < n; ++t) worst = std::max(worst, std::abs(buf.advantages[t] - expected[t]));
  }
  return {worst <= 1e-10, "max |GAE - brute force| " + fmt("%.3g", worst) + " over 1000 episodes"};
}

Outcome reward_tables() {
  const int peaks[] = {0, 24, 25, 49, 50, 150, 151, 175, 176, 255};
  const double qualities[] = {0.0, 40.0, 100.0};
  // Rows: peak; columns: B = 0, 40, 100.
  const double high[10][3] = {
      {-1.0, -1.0, -1.0},  // 0
      {-1.0, -1.0, -1.0},  // 24
      {-0.0, -0.4, -1.0},  // 25
      {-0.0, -0.4, -1.0},  // 49
      {1.0, 1.0, 1.0},     // 50
      {1.0, 1.0, 1.0},     // 150
      {-0.0, -0.4, -1.0},  // 151
      {-0.0, -0.4, -1.0},  // 175
      {-1.0, -1.0, -1.0},  // 176
      {-1.0, -1.0, -1.0},  // 255
  };
  const double low_detected[3] = {-0.0, -0.4, -1.0};
  int cases = 0, wrong = 0;
  for (int i = 0; i < 10; ++i) {
    for (int j = 0; j < 3; ++j) {
      ++cases;
      if (reward_high(peaks[i], qualities[j]) != high[i][j]) ++wrong;
    }
  }
  for (int j = 0; j < 3; ++j) {
    cases += 2;
    if (reward_low(true, qualities[j]) != low_detected[j]) ++wrong;
    if (reward_low(false, qualities[j]) != -1.0) ++wrong;
  }
  return {wrong == 0, std::to_string(cases - wrong) + "/" + std::to_string(cases) + " table cases exact"};
}

Outcome iqa_monotonicity() {
  const auto t0 = Clock::now();
  // The ladder is rendered without noise, so the pristine statistics are too.
  RunConfig rc;
  rc.env.noise_enabled = false;
  const SystemState system = calibrate_system(rc);
  double worst_rho = 1.0;
  double worst_fine_rho = 1.0;
  int tenengrad_failures = 0;
  for (const auto& scene : bundled_scenes()) {
    const double f_star = in_focus_control(scene.distance_cm());
    const CameraState camera(well_exposed_index(scene));
    // sigma 0..5 in quarter steps, defocusing toward the side with more room.
    const double side = kLensMax - f_star >= f_star - kLensMin ? 1.0 : -1.0;
    std::vector<double> sigmas, scores, ladder_sigmas, ladder_scores;
    double previous = std::numeric_limits<double>::infinity();
    for (int k = 0; k <= 20; ++k) {
      const double lens = f_star + side * 0.25 * k / kBlurPerControl;
      const auto frame = render(scene, LensState(lens), camera, {});
      const double sigma = blur_sigma(LensState(lens), f_star);
      const double b = quality_score(frame, *system.quality);
      sigmas.push_back(sigma);
      scores.push_back(b);
      if (k % 4 == 0) {
        ladder_sigmas.push_back(sigma);
        ladder_scores.push_back(b);
      }
      const double t = tenengrad(frame);
      if (!(t < previous)) ++tenengrad_failures;
      previous = t;
    }
    worst_rho = std::min(worst_rho, oracle::spearman(ladder_sigmas, ladder_scores));
    worst_fine_rho = std::min(worst_fine_rho, oracle::spearman(sigmas, scores));
  }
  const double secs = seconds_since(t0);
  return {worst_rho >= 0.9 && tenengrad_failures == 0 && secs < 120.0,
          "min Spearman rho(sigma in {0..5}, B) " + fmt("%.3f", worst_rho) + " (quarter steps " +
              fmt("%.3f", worst_fine_rho) + "), Tenengrad non-decreasing steps " +
              std::to_string(tenengrad_failures) + ", " + fmt("%.1f", secs) + " s"};
}

// Default staged training on the default configuration, cached on disk.
struct Trained {
  SystemState system;
  std::shared_ptr<const EnvContext> context;
  RunConfig config;
  double train_seconds = 0.0;
  std::int64_t low_env_steps = 0;
};

Trained trained_system(const fs::path& work) {
  RunConfig rc;
  rc.seed = 1;
  rc.train.seed = 1;
  const fs::path ckpt = work / "acceptance_checkpoint.dash";
  const fs::path meta = work / "acceptance_train.txt";
  Trained t;
  t.config = rc;
  if (fs::exists(ckpt) && fs::exists(meta)) {
    t.system = load_system(ckpt);
    std::ifstream in(meta);
    in >> t.train_seconds >> t.low_env_steps;
    std::cerr << "using cached training run from " << ckpt.string() << "\n";
  } else {
    t.system = calibrate_system(rc);
    const auto ctx = make_context(t.system, rc);
    const auto t0 = Clock::now();
    std::ofstream curve(work / "acceptance_learning_curve.csv");
    write_curve_header(curve);
    auto result = train(rc.train, rc.env, ctx, std::nullopt, std::nullopt, [&](const CurveRow& row) {
      write_curve_row(curve, row);
      curve.flush();
    });
    t.train_seconds = seconds_since(t0);
    t.low_env_steps = result.low_env_steps;
    t.system.high = std::move(result.high);
    t.system.low = std::move(result.low);
    save_system(ckpt, t.system);
    std::ofstream(meta) << t.train_seconds << ' ' << t.low_env_steps << '\n';
  }
  t.context = make_context(t.system, rc);
  return t;
}

EnvConfig eval_env(const RunConfig& rc) {
  EnvConfig e = rc.env;
  e.seed = rc.eval_seed;
  return e;
}

Outcome trained_af(const Trained& t) {
  const EnvConfig env = eval_env(t.config);
  const int n = 200;
  GreedyHighPolicy high(*t.system.high);
  GreedyLowPolicy low(*t.system.low);
  const auto rl = evaluate(high, low, env, t.context, n, "rl");
  AutoExposurePolicy ae;
  const auto sweep = evaluate_classical(ClassicalAf::kSweep, ae, env, t.context, n);
  UniformHighPolicy uh(t.config.eval_seed + 1);
  UniformLowPolicy ul(t.config.eval_seed + 2);
  const auto random = evaluate(uh, ul, env, t.context, n, "random");
  bool sweep_fixed = true;
  for (const auto& r : sweep.records) {
    if (r.handoff && r.af_steps != kSweepPositions) sweep_fixed = false;
  }
  const bool budget = t.low_env_steps <= 500000 && t.train_seconds <= 1800.0;
  const bool pass = rl.success_rate >= 0.9 && rl.median_af_steps <= 3.0 && sweep_fixed &&
                    random.success_rate <= 0.2 && budget;
  return {pass, "RL success " + fmt("%.3f", rl.success_rate) + ", median AF steps " +
                    fmt("%.1f", rl.median_af_steps) + "; sweep " + fmt("%.0f", sweep.median_af_steps) +
                    " steps; random success " + fmt("%.3f", random.success_rate) + "; training " +
                    std::to_string(t.low_env_steps) + " lens steps in " + fmt("%.0f", t.train_seconds) + " s"};
}

Outcome trained_exposure(const Trained& t) {
  const EnvConfig env = eval_env(t.config);
  const int n = 200;
  GreedyHighPolicy high(*t.system.high);
  GreedyLowPolicy low(*t.system.low);
  const auto rl = evaluate(high, low, env, t.context, n, "rl");
  AutoExposurePolicy ae;
  OracleFocusPolicy oracle;
  const auto base = evaluate(ae, oracle, env, t.context, n, "auto exposure");
  double lo = 1e9, hi = -1e9;
  for (const auto& r : rl.records) {
    lo = std::min(lo, r.illuminance_lx);
    hi = std::max(hi, r.illuminance_lx);
  }
  const double gap = rl.median_mean_intensity - base.median_mean_intensity;
  const bool pass = rl.peak_in_band_rate >= 0.9 && std::abs(gap) <= 25.0;
  return {pass, "peaks in [50, 150] " + fmt("%.3f", rl.peak_in_band_rate) + " over " + fmt("%.0f", lo) + "-" +
                    fmt("%.0f", hi) + " lx; median mean intensity " + fmt("%.1f", rl.median_mean_intensity) +
                    " vs auto exposure " + fmt("%.1f", base.median_mean_intensity) + " (gap " +
                    fmt("%+.1f", gap) + " DN)"};
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome determinism(const SystemState& calibrated, const fs::path& work) {
  RunConfig rc;
  rc.seed = 7;
  rc.train.seed = 7;
  rc.train.stage = Stage::kStaged;
  rc.train.af_steps = 1024;
  rc.train.exposure_steps = 512;
  rc.train.hierarchical_steps = 512;
  rc.train.ppo_high.rollout_size = 256;
  rc.train.ppo_low.rollout_size = 256;
  const auto ctx = make_context(calibrated, rc);
  std::vector<std::string> curves;
  std::vector<fs::path> ckpts;
  for (int run = 0; run < 2; ++run) {
    const fs::path csv = work / ("determinism_curve_" + std::to_string(run) + ".csv");
    {
      std::ofstream out(csv);
      write_curve_header(out);
      auto result = train(rc.train, rc.env, ctx, std::nullopt, std::nullopt,
                          [&](const CurveRow& row) { write_curve_row(out, row); });
      SystemState st = calibrated;
      st.high = std::move(result.high);
      st.low = std::move(result.low);
      ckpts.push_back(work / ("determinism_" + std::to_string(run) + ".dash"));
      save_system(ckpts.back(), st);
    }
    curves.push_back(read_file(csv));
  }
  const bool same_curve = curves[0] == curves[1] && !curves[0].empty();
  const bool same_ckpt = read_file(ckpts[0]) == read_file(ckpts[1]);
  const fs::path again = work / "determinism_roundtrip.dash";
  save_system(again, load_system(ckpts[0]));
  const bool roundtrip = read_file(again) == read_file(ckpts[0]);
  const auto blocks = load_checkpoint(ckpts[0]);
  const std::string raw = read_file(ckpts[0]);
  const bool block_identity = encode_checkpoint(blocks) == std::vector<char>(raw.begin(), raw.end());
  std::size_t lines = 0;
  for (char ch : curves[0]) lines += ch == '\n';
  return {same_curve && same_ckpt && roundtrip && block_identity,
          std::string("learning curves ") + (same_curve ? "identical" : "DIFFER") + " (" + std::to_string(lines) +
              " lines), checkpoints " + (same_ckpt ? "identical" : "DIFFER") + ", load/save round trip " +
              (roundtrip && block_identity ? "bitwise" : "NOT bitwise")};
}

Outcome pca_separation(const SystemState& calibrated) {
  RunConfig rc;
  const auto ctx = make_context(calibrated, rc);
  const auto grid = exposure_focus_grid(*ctx, ctx->scenes[static_cast<std::size_t>(rc.analyze_scene)],
                                        analysis_grid(rc), rc.seed);
  const auto pca = pca3(grid.features);
  const auto sep = linear_separability(pca.projections, grid.detected);
  return {sep.accuracy >= 0.85,
          "accuracy " + fmt("%.3f", sep.accuracy) + " (balanced " + fmt("%.3f", sep.balanced_accuracy) +
              ", majority baseline " + fmt("%.3f", sep.majority_baseline) + ") on " +
              std::to_string(sep.positives + sep.negatives) + " frames at " +
              fmt("%.0f", rc.analyze_illuminance_lx) + " lx, " + std::to_string(sep.positives) + " detected"};
}

Outcome bandit() {
  const auto out = oracle::run_bandit(200, 0.95, 1);
  return {out.reached, "p(better arm) " + fmt("%.3f", out.best_arm_probability) + " after " +
                           std::to_string(out.updates) + " updates"};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  int only = 0;
  std::string work = "acceptance_work";
  app.add_option("--criterion", only, "Run a single criterion (1-9); default all")->check(CLI::Range(0, 9));
  app.add_option("--work", work, "Scratch directory for training artifacts");
  CLI11_PARSE(app, argc, argv);
  fs::create_directories(work);

  std::optional<SystemState> calibrated;
  auto system = [&]() -> const SystemState& {
    if (!calibrated) calibrated = calibrate_system(RunConfig{});
    return *calibrated;
  };
  std::optional<Trained> trained;
  auto trained_run = [&]() -> const Trained& {
    if (!trained) trained = trained_system(work);
    return *trained;
  };

  const std::map<int, std::pair<std::string, std::function<Outcome()>>> criteria = {
      {1, {"PPO gradient check", gradient_check}},
      {2, {"advantage oracle", advantage_oracle}},
      {3, {"reward tables", reward_tables}},
      {4, {"IQA monotonicity", iqa_monotonicity}},
      {5, {"trained AF analog", [&] { return trained_af(trained_run()); }}},
      {6, {"exposure agent analog", [&] { return trained_exposure(trained_run()); }}},
      {7, {"determinism", [&] { return determinism(system(), work); }}},
      {8, {"PCA separation", [&] { return pca_separation(system()); }}},
      {9, {"bandit sanity", bandit}},
  };

  bool all = true;
  for (const auto& [id, entry] : criteria) {
    if (only != 0 && id != only) continue;
    Outcome o;
    try {
      o = entry.second();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    std::cout << (o.pass ? "PASS" : "FAIL") << "  criterion " << id << " (" << entry.first << "): " << o.detail
              << std::endl;
    all = all && o.pass;
  }
  return all ? 0 : 1;
}
