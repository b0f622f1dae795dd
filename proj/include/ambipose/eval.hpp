#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ambipose/geometry.hpp"
#include "ambipose/model.hpp"
#include "ambipose/scenes.hpp"

namespace ambipose {

/// Paired threshold: a sample counts when its translation error is at most
/// trans_max (m) AND its geodesic rotation error is at most rot_max_deg.
/// A query is a true positive when at least a fraction gamma of its samples
/// count (both comparisons inclusive).
struct RecallThreshold {
  double trans_max = 0.1;
  double rot_max_deg = 10.0;
  double gamma = 0.1;
};

void validate(const RecallThreshold& th);

/// The three paired thresholds 0.1m/10deg, 0.2m/15deg, 0.3m/20deg.
std::vector<RecallThreshold> default_thresholds(double gamma = 0.1, double trans_scale = 1.0);

bool within(const Pose& sample, const Pose& target, const RecallThreshold& th);

std::size_t count_within(std::span<const Pose> samples, const Pose& target, const RecallThreshold& th);

bool is_true_positive(std::span<const Pose> samples, const Pose& truth, const RecallThreshold& th);

double recall(std::span<const PoseSampleSet> predictions, std::span<const Pose> truths,
              const RecallThreshold& th);

/// Median with the even-count rule: mean of the two central values.
double median(std::vector<double> values);

struct MedianErrors {
  double translation_m = 0.0;
  double rotation_deg = 0.0;
  std::size_t used = 0;
  std::size_t degenerate = 0;  // queries whose rotation mean was degenerate
};

MedianErrors median_errors(std::span<const PoseSampleSet> predictions, std::span<const Pose> truths);

/// Fraction of samples within `th` of each oracle mode (gamma unused).
std::vector<double> mode_coverage(std::span<const Pose> samples, std::span<const Pose> modes,
                                  const RecallThreshold& th);

struct TimingStats {
  double mean_ms = 0.0;
  double std_ms = 0.0;
  int repeats = 0;
};

/// Wall-clock of predict_posterior after three discarded warm-up calls;
/// sample standard deviation over `repeats` timed calls.
TimingStats benchmark_inference(const PoseRegressor& model, const Vec& obs, std::size_t M,
                                int repeats, std::uint64_t seed = 0);

/// Test-split posteriors with per-query seeds derived from `seed`.
std::vector<PoseSampleSet> predict_test_posteriors(const PoseRegressor& model,
                                                   std::span<const LabeledSample> queries,
                                                   std::size_t M, std::uint64_t seed,
                                                   int threads = 1);

struct ThresholdRecall {
  RecallThreshold threshold;
  double recall = 0.0;
};

struct CoverageSummary {
  RecallThreshold threshold;
  double floor = 0.1;
  // Mean over queries of the fraction of samples near mode j (mode 0 = truth).
  std::vector<double> mean_per_mode;
  // Fraction of queries where every mode holds at least `floor` of the mass.
  double all_modes_covered = 0.0;
  // Fraction of queries where some mode holds less than `floor`.
  double some_mode_missed = 0.0;
};

struct EvalReport {
  std::string scene;
  std::size_t queries = 0;
  std::size_t mc_samples = 0;
  std::uint64_t seed = 0;
  std::vector<ThresholdRecall> recalls;
  MedianErrors medians;
  CoverageSummary coverage;
  TimingStats timing;
};

struct EvalOptions {
  std::vector<RecallThreshold> thresholds = default_thresholds();
  std::size_t mc_samples = 1000;
  std::uint64_t seed = 0;
  int timing_repeats = 0;  // 0 disables the timing pass
  int threads = 1;
  double coverage_floor = 0.1;
};

EvalReport evaluate(const PoseRegressor& model, const SceneSpec& spec,
                    std::span<const LabeledSample> queries, const EvalOptions& options);

/// Builds the report from precomputed posteriors; no timing pass.
EvalReport summarize(const SceneSpec& spec, std::span<const LabeledSample> queries,
                     std::span<const PoseSampleSet> predictions, const EvalOptions& options);

nlohmann::json to_json(const EvalReport& r);
/// Aligned-column table with one row per (scene, threshold).
void write_eval_table(std::ostream& out, const EvalReport& r);

}  // namespace ambipose
