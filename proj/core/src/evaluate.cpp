#include <algorithm>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "hieraf/bench.hpp"
#include "hieraf/error.hpp"

namespace hieraf {

namespace {

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

void check_agent(const Agent& agent, const AgentSpec& expected, const char* role) {
  if (!(agent.params.spec == expected)) {
    throw ContractError(std::string("agent does not match the ") + role + " action/observation spec");
  }
}

}  // namespace

GreedyHighPolicy::GreedyHighPolicy(const Agent& agent) : agent_(agent) {
  check_agent(agent, high_agent_spec(), "exposure");
}

int GreedyHighPolicy::act(const HighObs& obs, const HierarchicalEnv&) {
  const auto out = agent_.forward(agent_.normalizer.apply(obs.flat()));
  return greedy_action(out.probs).actions[0];
}

GreedyLowPolicy::GreedyLowPolicy(const Agent& agent) : agent_(agent) {
  check_agent(agent, low_agent_spec(), "lens");
}

LowAction GreedyLowPolicy::act(const LowObs& obs, const HierarchicalEnv&) {
  const auto out = agent_.forward(agent_.normalizer.apply(obs.features));
  const auto a = greedy_action(out.probs).actions;
  return {a[0], a[1]};
}

int UniformHighPolicy::act(const HighObs&, const HierarchicalEnv&) {
  return std::uniform_int_distribution<int>(0, kHighActionCount - 1)(rng_);
}

LowAction UniformLowPolicy::act(const LowObs&, const HierarchicalEnv&) {
  const int coarse = std::uniform_int_distribution<int>(0, kCoarseCount - 1)(rng_);
  const int fine = std::uniform_int_distribution<int>(0, kFineCount - 1)(rng_);
  return {coarse, fine};
}

int AutoExposurePolicy::act(const HighObs&, const HierarchicalEnv& env) {
  return auto_exposure_baseline(env.state().scene).index;
}

LowAction OracleFocusPolicy::act(const LowObs&, const HierarchicalEnv& env) {
  return action_for_lens(env.f_star());
}

void summarize(EvalReport& report) {
  report.episodes = static_cast<int>(report.records.size());
  if (report.records.empty()) return;
  std::vector<double> steps;
  std::vector<double> means;
  int hits = 0;
  int in_band = 0;
  double time = 0.0;
  for (const auto& r : report.records) {
    hits += r.detected;
    in_band += r.peak >= 50 && r.peak <= 150;
    steps.push_back(r.af_steps);
    means.push_back(r.mean_intensity);
    time += r.af_steps * kStepLatencySeconds;
  }
  const double n = static_cast<double>(report.records.size());
  report.success_rate = hits / n;
  report.peak_in_band_rate = in_band / n;
  report.median_af_steps = median(steps);
  report.mean_af_time_s = time / n;
  report.median_mean_intensity = median(means);
}

namespace {

template <typename LensPhase>
EvalReport run_episodes(HighPolicy& high, const EnvConfig& env_config,
                        std::shared_ptr<const EnvContext> context, int episodes, std::string method,
                        LensPhase&& lens_phase) {
  if (episodes <= 0) throw RangeError("evaluation needs at least one episode");
  HierarchicalEnv env(env_config, std::move(context));
  EvalReport report;
  report.method = std::move(method);
  for (int e = 0; e < episodes; ++e) {
    const auto obs = env.reset();
    EpisodeRecord rec;
    rec.episode = e;
    rec.distance_cm = env.state().scene.distance_cm();
    rec.illuminance_lx = env.state().scene.illuminance_lx();
    rec.exposure_index = high.act(obs, env);
    const auto hs = env.step_high(rec.exposure_index);
    rec.peak = hs.peak;
    rec.mean_intensity = hs.mean_intensity;
    rec.handoff = hs.handoff;
    rec.af_steps = env_config.horizon_low;
    if (hs.handoff) lens_phase(env, rec);
    rec.final_lens = rec.final_lens == 0.0 ? env.state().lens.control() : rec.final_lens;
    report.records.push_back(rec);
  }
  summarize(report);
  return report;
}

}  // namespace

EvalReport evaluate(HighPolicy& high, LowPolicy& low, const EnvConfig& env_config,
                    std::shared_ptr<const EnvContext> context, int episodes, std::string method) {
  return run_episodes(high, env_config, std::move(context), episodes, std::move(method),
                      [&](HierarchicalEnv& env, EpisodeRecord& rec) {
                        int steps = 0;
                        while (true) {
                          const auto ls = env.step_low(low.act(env.low_observation(), env));
                          ++steps;
                          if (ls.detected) {
                            rec.detected = true;
                            rec.af_steps = steps;
                          }
                          if (ls.done) break;
                        }
                      });
}

EvalReport evaluate_classical(ClassicalAf kind, HighPolicy& high, const EnvConfig& env_config,
                              std::shared_ptr<const EnvContext> context, int episodes) {
  const bool sweep = kind == ClassicalAf::kSweep;
  return run_episodes(high, env_config, std::move(context), episodes, sweep ? "sweep" : "hillclimb",
                      [&](HierarchicalEnv& env, EpisodeRecord& rec) {
                        if (sweep) {
                          const auto r = sweep_af(env);
                          rec.af_steps = r.steps;
                          rec.final_lens = r.best_lens;
                          rec.detected = env.probe_detect(env.probe(r.best_lens));
                        } else {
                          const auto r = hillclimb_af(env);
                          rec.af_steps = r.steps;
                          rec.final_lens = r.lens;
                          rec.detected = r.detected;
                        }
                      });
}

void write_report_csv(std::ostream& out, const EvalReport& report) {
  out << "episode,distance_cm,illuminance_lx,exposure_index,peak,mean_intensity,handoff,detected,"
         "af_steps,final_lens\n";
  for (const auto& r : report.records) {
    out << r.episode << ',' << r.distance_cm << ',' << r.illuminance_lx << ',' << r.exposure_index << ','
        << r.peak << ',' << r.mean_intensity << ',' << r.handoff << ',' << r.detected << ',' << r.af_steps
        << ',' << r.final_lens << '\n';
  }
}

SummaryRow summary_row(const EvalReport& report, std::string iqa) {
  std::ostringstream steps;
  std::ostringstream time;
  steps << std::fixed << std::setprecision(1) << report.median_af_steps << " (success "
        << std::setprecision(2) << report.success_rate << ")";
  time << std::fixed << std::setprecision(2) << report.mean_af_time_s << " s";
  return {report.method, std::move(iqa), steps.str(), time.str()};
}

void write_summary_table(std::ostream& out, const std::vector<SummaryRow>& rows) {
  std::vector<SummaryRow> all = {{"Method", "IQA", "AF steps", "AF time (sim)"}};
  all.insert(all.end(), rows.begin(), rows.end());
  std::size_t w[4] = {0, 0, 0, 0};
  for (const auto& r : all) {
    w[0] = std::max(w[0], r.method.size());
    w[1] = std::max(w[1], r.iqa.size());
    w[2] = std::max(w[2], r.af_steps.size());
    w[3] = std::max(w[3], r.af_time.size());
  }
  for (std::size_t i = 0; i < all.size(); ++i) {
    const auto& r = all[i];
    out << std::left << std::setw(static_cast<int>(w[0])) << r.method << " | " << std::setw(static_cast<int>(w[1]))
        << r.iqa << " | " << std::setw(static_cast<int>(w[2])) << r.af_steps << " | " << r.af_time << '\n';
    if (i == 0) out << std::string(w[0] + w[1] + w[2] + w[3] + 9, '-') << '\n';
  }
}

}  // namespace hieraf
