#ifndef HIERAF_BENCH_HPP_
#define HIERAF_BENCH_HPP_

#include <array>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hieraf/agent.hpp"
#include "hieraf/env.hpp"

namespace hieraf {

// ---- classical baselines -------------------------------------------------

inline constexpr int kSweepPositions = 93;  // 24.0, 24.5, ..., 70.0
inline constexpr int kHillclimbMaxRenders = 40;

struct SweepResult {
  double best_lens = kLensMin;
  int steps = 0;
  std::vector<double> lens;
  std::vector<double> profile;  // full-frame Tenengrad per position
};

// Exhaustive focus sweep. Renders through env.probe(), leaving the episode
// untouched. Throws ProtocolError unless the env is in AwaitLow.
SweepResult sweep_af(HierarchicalEnv& env);

struct HillclimbResult {
  double lens = kLensMin;
  int steps = 0;  // renders
  bool detected = false;
};

// Contrast-detection hill climb from the current lens value: probe one step
// each way, move while full-frame Tenengrad improves, halve the step when
// neither direction does. Stops on detection, when the step falls below
// 0.25, or after 40 renders.
HillclimbResult hillclimb_af(HierarchicalEnv& env, double step0 = 4.0);

inline constexpr double kAutoExposureTargetMean = 110.0;

struct AutoExposureResult {
  int index = kExposureCount - 1;
  bool saturated = false;  // no index reaches the target
  double mean = 0.0;
  std::array<std::int64_t, 256> histogram{};
};

// Smallest index whose in-focus, noise-free render has mean >= 110 (the
// mean is monotone in the index, so the scan is a bisection).
AutoExposureResult auto_exposure_baseline(const Scene& scene);

// ---- policies and evaluation ---------------------------------------------

class HighPolicy {
 public:
  virtual ~HighPolicy() = default;
  virtual int act(const HighObs& obs, const HierarchicalEnv& env) = 0;
};

class LowPolicy {
 public:
  virtual ~LowPolicy() = default;
  virtual LowAction act(const LowObs& obs, const HierarchicalEnv& env) = 0;
};

// Argmax of a trained agent.
class GreedyHighPolicy final : public HighPolicy {
 public:
  explicit GreedyHighPolicy(const Agent& agent);
  int act(const HighObs& obs, const HierarchicalEnv& env) override;

 private:
  const Agent& agent_;
};

class GreedyLowPolicy final : public LowPolicy {
 public:
  explicit GreedyLowPolicy(const Agent& agent);
  LowAction act(const LowObs& obs, const HierarchicalEnv& env) override;

 private:
  const Agent& agent_;
};

class UniformHighPolicy final : public HighPolicy {
 public:
  explicit UniformHighPolicy(std::uint64_t seed) : rng_(seed) {}
  int act(const HighObs& obs, const HierarchicalEnv& env) override;

 private:
  std::mt19937_64 rng_;
};

class UniformLowPolicy final : public LowPolicy {
 public:
  explicit UniformLowPolicy(std::uint64_t seed) : rng_(seed) {}
  LowAction act(const LowObs& obs, const HierarchicalEnv& env) override;

 private:
  std::mt19937_64 rng_;
};

// Camera-style mean targeting; reads the scene.
class AutoExposurePolicy final : public HighPolicy {
 public:
  int act(const HighObs& obs, const HierarchicalEnv& env) override;
};

// Cheating upper bound: jumps straight to f*.
class OracleFocusPolicy final : public LowPolicy {
 public:
  LowAction act(const LowObs& obs, const HierarchicalEnv& env) override;
};

struct EpisodeRecord {
  int episode = 0;
  double distance_cm = 0.0;
  double illuminance_lx = 0.0;
  int exposure_index = 0;
  int peak = 0;
  double mean_intensity = 0.0;
  bool handoff = false;
  bool detected = false;
  int af_steps = 0;  // lens steps to detection; horizon on failure
  double final_lens = 0.0;
};

struct EvalReport {
  std::string method;
  int episodes = 0;
  double success_rate = 0.0;
  double median_af_steps = 0.0;
  double mean_af_time_s = 0.0;
  double peak_in_band_rate = 0.0;  // fraction with P in [50, 150]
  double median_mean_intensity = 0.0;
  std::vector<EpisodeRecord> records;
};

// Recomputes the summary fields from `records`.
void summarize(EvalReport& report);

// Greedy/baseline rollouts over `episodes` fresh episodes drawn by an env
// seeded with `env_config.seed`. Deterministic for deterministic policies.
EvalReport evaluate(HighPolicy& high, LowPolicy& low, const EnvConfig& env_config,
                    std::shared_ptr<const EnvContext> context, int episodes,
                    std::string method = "policy");

enum class ClassicalAf { kSweep, kHillclimb };

// Same episodes as evaluate(), with the lens phase replaced by a classical
// search. A sweep counts 93 steps and succeeds when its best position is
// detected.
EvalReport evaluate_classical(ClassicalAf kind, HighPolicy& high, const EnvConfig& env_config,
                              std::shared_ptr<const EnvContext> context, int episodes);

void write_report_csv(std::ostream& out, const EvalReport& report);

struct SummaryRow {
  std::string method;
  std::string iqa;
  std::string af_steps;
  std::string af_time;
};
// Fixed-width text table: method, IQA type, AF steps, simulated AF time.
void write_summary_table(std::ostream& out, const std::vector<SummaryRow>& rows);
SummaryRow summary_row(const EvalReport& report, std::string iqa);

// ---- feature-space analysis ----------------------------------------------

struct PcaResult {
  Eigen::MatrixXd projections;  // N x 3
  Eigen::Vector3d eigenvalues;  // non-increasing
  Eigen::MatrixXd components;   // D x 3, unit columns
};

// Top-3 principal components of the mean-centred rows by power iteration
// with deflation (covariance normalized by N - 1, never formed explicitly).
// Throws RangeError for N < 4 or D < 3, DegenerateInputError for zero
// variance.
PcaResult pca3(const Eigen::MatrixXd& features, int iterations = 50, double tolerance = 1e-9);

void write_projections_csv(std::ostream& out, const PcaResult& pca, const std::vector<bool>& labels);

struct Separability {
  double accuracy = 0.0;
  double balanced_accuracy = 0.0;
  double majority_baseline = 0.0;
  int positives = 0;
  int negatives = 0;
};

// Fisher discriminant on the rows of `points` followed by the accuracy-
// maximizing threshold (training accuracy).
Separability linear_separability(const Eigen::MatrixXd& points, const std::vector<bool>& labels);

struct GridSpec {
  double illuminance_lx = 37.0;
  double distance_cm = 170.0;
  std::vector<int> exposure_indices;
  std::vector<double> lens_values;
};

// Every 5th exposure index and lens values 24, 26, ..., 70.
GridSpec default_grid();

struct GridData {
  Eigen::MatrixXd features;  // one encoded frame per row
  std::vector<bool> detected;
  std::vector<int> exposure_index;
  std::vector<double> lens;
};

// Renders `scene` at the grid distance and illuminance over exposure x lens with
// sensor noise seeded by `seed`, encoding and detecting every frame.
GridData exposure_focus_grid(const EnvContext& context, const Scene& scene, const GridSpec& grid,
                             std::uint64_t seed);

}  // namespace hieraf

#endif  // HIERAF_BENCH_HPP_
