// hieraf: calibrate, train, evaluate and analyze the two-agent exposure and
// focus controller on the simulated camera.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "hieraf/bench.hpp"
#include "hieraf/error.hpp"
#include "hieraf/harness.hpp"
#include "hieraf/scene.hpp"

namespace fs = std::filesystem;
using namespace hieraf;

namespace {

struct Common {
  std::optional<std::uint64_t> seed;
  std::string config;
  std::string out;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--seed", c.seed, "Run seed (overrides the config)");
  cmd->add_option("--config", c.config, "JSON run config (see `hieraf config-keys`)");
  cmd->add_option("--out", c.out, "Output directory (overrides the config)");
}

RunConfig resolve(const Common& c) {
  RunConfig rc = c.config.empty() ? parse_run_config("{}") : load_run_config(c.config);
  if (c.seed) {
    rc.seed = *c.seed;
    rc.train.seed = *c.seed;
  }
  if (!c.out.empty()) rc.out = c.out;
  return rc;
}

void ensure_dir(const fs::path& p) {
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) throw IoError("cannot create output directory " + p.string() + ": " + ec.message());
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream f(p);
  if (!f) throw IoError("cannot write " + p.string());
  return f;
}

SystemState system_for(const RunConfig& rc, const std::string& checkpoint) {
  if (!checkpoint.empty()) return load_system(checkpoint);
  const fs::path default_ckpt = rc.out / "checkpoint.dash";
  if (fs::exists(default_ckpt)) return load_system(default_ckpt);
  throw IoError("no checkpoint given and " + default_ckpt.string() + " does not exist; run `train` first");
}

Scene scene_arg(const std::string& scene, std::optional<double> distance, std::optional<double> lux) {
  Scene s = [&] {
    if (!scene.empty() && scene.find_first_not_of("0123456789") == std::string::npos) {
      const auto idx = std::stoul(scene);
      const auto all = bundled_scenes();
      if (idx >= all.size()) throw RangeError("bundled scene index must be < " + std::to_string(all.size()));
      return all[idx];
    }
    return load_scene_descriptor(scene);
  }();
  return s.with_conditions(distance.value_or(s.distance_cm()), lux.value_or(s.illuminance_lx()));
}

int cmd_calibrate(const Common& c) {
  const RunConfig rc = resolve(c);
  ensure_dir(rc.out);
  const SystemState st = calibrate_system(rc);
  save_system(rc.out / "calibration.dash", st);
  std::cout << "quality model: tau " << st.quality->tau() << "\n"
            << "detector: sharp_min " << st.thresholds.sharp_min << ", contrast_min " << st.thresholds.contrast_min
            << ", mean window [" << st.thresholds.mean_lo << ", " << st.thresholds.mean_hi << "]\n"
            << "wrote " << (rc.out / "calibration.dash").string() << "\n";
  return 0;
}

int cmd_train(const Common& c, const std::string& stage, const std::string& init, bool quiet) {
  RunConfig rc = resolve(c);
  if (!stage.empty()) rc.train.stage = parse_stage(stage);
  ensure_dir(rc.out);
  SystemState st = init.empty() ? prepare_system(rc) : load_system(init);
  const auto ctx = make_context(st, rc);

  auto curve = open_out(rc.out / "learning_curve.csv");
  write_curve_header(curve);
  const auto t0 = std::chrono::steady_clock::now();
  auto result = train(rc.train, rc.env, ctx, st.high, st.low, [&](const CurveRow& row) {
    write_curve_row(curve, row);
    curve.flush();
    if (!quiet) {
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      std::fprintf(stderr, "[%s] update %lld  env_steps %lld  success %.3f  median_af %s  %.0fs\n",
                   row.stage.c_str(), static_cast<long long>(row.update), static_cast<long long>(row.env_steps),
                   row.success_rate, row.median_af_steps ? std::to_string(*row.median_af_steps).c_str() : "-",
                   secs);
    }
  });
  st.high = std::move(result.high);
  st.low = std::move(result.low);
  save_system(rc.out / "checkpoint.dash", st);
  std::cout << "lens-agent env steps " << result.low_env_steps << ", exposure decisions " << result.high_env_steps
            << "\nwrote " << (rc.out / "learning_curve.csv").string() << " and "
            << (rc.out / "checkpoint.dash").string() << "\n";
  return 0;
}

EnvConfig eval_env(const RunConfig& rc) {
  EnvConfig e = rc.env;
  e.seed = rc.eval_seed;
  return e;
}

void emit_report(const RunConfig& rc, const EvalReport& r, const std::string& file) {
  auto f = open_out(rc.out / file);
  write_report_csv(f, r);
}

int cmd_eval(const Common& c, const std::string& checkpoint, std::optional<int> episodes) {
  RunConfig rc = resolve(c);
  if (episodes) rc.eval_episodes = *episodes;
  ensure_dir(rc.out);
  const SystemState st = system_for(rc, checkpoint);
  if (!st.high || !st.low) throw ContractError("checkpoint lacks one of the two agents");
  const auto ctx = make_context(st, rc);
  GreedyHighPolicy high(*st.high);
  GreedyLowPolicy low(*st.low);
  auto report = evaluate(high, low, eval_env(rc), ctx, rc.eval_episodes, "hierarchical RL");
  emit_report(rc, report, "eval_policy.csv");
  write_summary_table(std::cout, {summary_row(report, "BRISQUE-style")});
  std::cout << "exposure peaks in [50, 150]: " << report.peak_in_band_rate
            << ", median mean intensity: " << report.median_mean_intensity << "\n";
  return 0;
}

int cmd_bench(const Common& c, const std::string& checkpoint, std::optional<int> episodes) {
  RunConfig rc = resolve(c);
  if (episodes) rc.eval_episodes = *episodes;
  ensure_dir(rc.out);
  const SystemState st = checkpoint.empty() && !fs::exists(rc.out / "checkpoint.dash") ? prepare_system(rc)
                                                                                        : system_for(rc, checkpoint);
  const auto ctx = make_context(st, rc);
  const EnvConfig env = eval_env(rc);
  std::vector<SummaryRow> rows;

  AutoExposurePolicy ae;
  auto sweep = evaluate_classical(ClassicalAf::kSweep, ae, env, ctx, rc.eval_episodes);
  sweep.method = "focus sweep + auto exposure";
  emit_report(rc, sweep, "bench_sweep.csv");
  rows.push_back(summary_row(sweep, "Tenengrad"));

  auto hill = evaluate_classical(ClassicalAf::kHillclimb, ae, env, ctx, rc.eval_episodes);
  hill.method = "hill climb + auto exposure";
  emit_report(rc, hill, "bench_hillclimb.csv");
  rows.push_back(summary_row(hill, "Tenengrad"));

  UniformHighPolicy uh(rc.eval_seed + 1);
  UniformLowPolicy ul(rc.eval_seed + 2);
  auto random = evaluate(uh, ul, env, ctx, rc.eval_episodes, "uniform random");
  emit_report(rc, random, "bench_random.csv");
  rows.push_back(summary_row(random, "-"));

  OracleFocusPolicy oracle;
  auto upper = evaluate(ae, oracle, env, ctx, rc.eval_episodes, "f* oracle + auto exposure");
  emit_report(rc, upper, "bench_oracle.csv");
  rows.push_back(summary_row(upper, "-"));

  if (st.high && st.low) {
    GreedyHighPolicy high(*st.high);
    GreedyLowPolicy low(*st.low);
    auto rl = evaluate(high, low, env, ctx, rc.eval_episodes, "hierarchical RL");
    emit_report(rc, rl, "eval_policy.csv");
    rows.push_back(summary_row(rl, "BRISQUE-style"));
  }
  rows.push_back({"phase-shift AF (cited, not simulated)", "-", "-", "-"});
  write_summary_table(std::cout, rows);
  auto table = open_out(rc.out / "summary.txt");
  write_summary_table(table, rows);

  // Auto-exposure histograms over the evaluation illuminance grid.
  auto hist = open_out(rc.out / "auto_exposure_histograms.csv");
  hist << "scene,illuminance_lx,index,saturated,mean";
  for (int v = 0; v < 256; ++v) hist << ",h" << v;
  hist << "\n";
  const auto scenes = bundled_scenes();
  for (std::size_t s = 0; s < scenes.size(); ++s) {
    for (double lux = kIlluminanceMinLx; lux <= kIlluminanceMaxLx; lux += 41.0) {
      const auto r = auto_exposure_baseline(scenes[s].with_conditions(scenes[s].distance_cm(), lux));
      hist << s << ',' << lux << ',' << r.index << ',' << r.saturated << ',' << r.mean;
      for (auto n : r.histogram) hist << ',' << n;
      hist << "\n";
    }
  }
  return 0;
}

int cmd_render(const Common& c, const std::string& scene, double focus, int exposure,
               std::optional<double> distance, std::optional<double> lux, bool noise, const std::string& file) {
  const RunConfig rc = resolve(c);
  ensure_dir(rc.out);
  const Scene s = scene_arg(scene, distance, lux);
  const auto frame = render(s, LensState(focus), CameraState(exposure), {noise, rc.seed});
  const fs::path path = rc.out / file;
  write_pgm(path, frame);
  std::cout << "f* " << in_focus_control(s.distance_cm()) << ", sigma "
            << blur_sigma(LensState(focus), in_focus_control(s.distance_cm())) << ", peak "
            << histogram256(frame).peak << "\nwrote " << path.string() << "\n";
  return 0;
}

int cmd_analyze(const Common& c) {
  const RunConfig rc = resolve(c);
  ensure_dir(rc.out);
  const SystemState st = prepare_system(rc);
  const auto ctx = make_context(st, rc);
  const auto grid = exposure_focus_grid(*ctx, ctx->scenes[static_cast<std::size_t>(rc.analyze_scene)],
                                        analysis_grid(rc), rc.seed);
  const auto pca = pca3(grid.features);
  auto csv = open_out(rc.out / "pca_projections.csv");
  write_projections_csv(csv, pca, grid.detected);
  const auto sep = linear_separability(pca.projections, grid.detected);
  std::cout << "frames " << grid.detected.size() << " (detected " << sep.positives << ")\n"
            << "eigenvalues " << pca.eigenvalues.transpose() << "\n"
            << "linear accuracy " << sep.accuracy << ", balanced " << sep.balanced_accuracy
            << ", majority baseline " << sep.majority_baseline << "\n"
            << "wrote " << (rc.out / "pca_projections.csv").string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-agent exposure and autofocus control on a simulated camera"};
  app.require_subcommand(1);
  Common common;

  auto* calibrate = app.add_subcommand("calibrate", "Fit the quality model and detector thresholds");
  add_common(calibrate, common);

  auto* train_cmd = app.add_subcommand("train", "Train the agents and write a learning curve and checkpoint");
  add_common(train_cmd, common);
  std::string stage;
  std::string init;
  bool quiet = false;
  train_cmd->add_option("--stage", stage, "single-agent-AF | single-agent-exposure | hierarchical | staged");
  train_cmd->add_option("--init", init, "Checkpoint to start from (agents and calibration)");
  train_cmd->add_flag("--quiet", quiet, "No progress lines");

  std::string checkpoint;
  std::optional<int> episodes;
  auto* eval_cmd = app.add_subcommand("eval", "Greedy evaluation of a trained checkpoint");
  add_common(eval_cmd, common);
  eval_cmd->add_option("--checkpoint", checkpoint, "Checkpoint (default <out>/checkpoint.dash)");
  eval_cmd->add_option("--episodes", episodes, "Evaluation episodes");

  auto* bench_cmd = app.add_subcommand("bench", "Classical baselines, random and oracle policies");
  add_common(bench_cmd, common);
  bench_cmd->add_option("--checkpoint", checkpoint, "Also evaluate this checkpoint");
  bench_cmd->add_option("--episodes", episodes, "Evaluation episodes");

  auto* render_cmd = app.add_subcommand("render", "Write one simulated frame as PGM");
  add_common(render_cmd, common);
  std::string scene = "0";
  double focus = kLensMin;
  int exposure = 87;
  std::optional<double> distance;
  std::optional<double> lux;
  bool no_noise = false;
  std::string file = "frame.pgm";
  render_cmd->add_option("--scene", scene, "Bundled scene index or scene descriptor path");
  render_cmd->add_option("--focus", focus, "Lens control value [24, 70]");
  render_cmd->add_option("--exposure-index", exposure, "Exposure table index [0, 145]");
  render_cmd->add_option("--distance", distance, "Object distance in cm (default: scene's)");
  render_cmd->add_option("--illuminance", lux, "Illuminance in lx (default: scene's)");
  render_cmd->add_flag("--no-noise", no_noise, "Disable sensor noise");
  render_cmd->add_option("--file", file, "Output file name inside --out");

  auto* analyze_cmd = app.add_subcommand("analyze", "Exposure x focus grid, PCA projections, separability");
  add_common(analyze_cmd, common);

  auto* keys_cmd = app.add_subcommand("config-keys", "Print the config key reference");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*calibrate) return cmd_calibrate(common);
    if (*train_cmd) return cmd_train(common, stage, init, quiet);
    if (*eval_cmd) return cmd_eval(common, checkpoint, episodes);
    if (*bench_cmd) return cmd_bench(common, checkpoint, episodes);
    if (*render_cmd) return cmd_render(common, scene, focus, exposure, distance, lux, !no_noise, file);
    if (*analyze_cmd) return cmd_analyze(common);
    if (*keys_cmd) {
      std::cout << run_config_reference();
      return 0;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
