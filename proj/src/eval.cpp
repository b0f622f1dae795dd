#include "ambipose/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <ostream>
#include <sstream>
#include <thread>

#include "ambipose/errors.hpp"
#include "ambipose/seeding.hpp"

namespace ambipose {

namespace {

constexpr double kRadToDeg = 180.0 / std::numbers::pi;

}  // namespace

void validate(const RecallThreshold& th) {
  if (!(th.trans_max > 0.0) || !(th.rot_max_deg > 0.0)) {
    throw ValidationError("recall threshold components must be positive");
  }
  if (!(th.gamma > 0.0 && th.gamma <= 1.0)) throw ValidationError("gamma must lie in (0, 1]");
}

std::vector<RecallThreshold> default_thresholds(double gamma, double trans_scale) {
  return {{0.1 * trans_scale, 10.0, gamma},
          {0.2 * trans_scale, 15.0, gamma},
          {0.3 * trans_scale, 20.0, gamma}};
}

bool within(const Pose& sample, const Pose& target, const RecallThreshold& th) {
  return (sample.t - target.t).norm() <= th.trans_max &&
         geodesic_angle(sample.R, target.R) * kRadToDeg <= th.rot_max_deg;
}

std::size_t count_within(std::span<const Pose> samples, const Pose& target, const RecallThreshold& th) {
  return static_cast<std::size_t>(
      std::count_if(samples.begin(), samples.end(), [&](const Pose& p) { return within(p, target, th); }));
}

bool is_true_positive(std::span<const Pose> samples, const Pose& truth, const RecallThreshold& th) {
  if (samples.empty()) throw ValidationError("is_true_positive: empty sample set");
  // count / M >= gamma, evaluated without division.
  return static_cast<double>(count_within(samples, truth, th)) >=
         th.gamma * static_cast<double>(samples.size());
}

double recall(std::span<const PoseSampleSet> predictions, std::span<const Pose> truths,
              const RecallThreshold& th) {
  if (predictions.empty() || predictions.size() != truths.size()) {
    throw ValidationError("recall: need one nonempty prediction per query");
  }
  std::size_t hits = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    if (is_true_positive(predictions[i].poses, truths[i], th)) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(predictions.size());
}

double median(std::vector<double> v) {
  if (v.empty()) throw ValidationError("median of an empty list");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

MedianErrors median_errors(std::span<const PoseSampleSet> predictions, std::span<const Pose> truths) {
  if (predictions.empty() || predictions.size() != truths.size()) {
    throw ValidationError("median_errors: need one nonempty prediction per query");
  }
  std::vector<double> te, re;
  MedianErrors out;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    try {
      const Pose p = point_prediction(predictions[i].poses);
      te.push_back((p.t - truths[i].t).norm());
      re.push_back(geodesic_angle(p.R, truths[i].R) * kRadToDeg);
    } catch (const DegenerateMeanError&) {
      ++out.degenerate;
    }
  }
  out.used = te.size();
  if (!te.empty()) {
    out.translation_m = median(te);
    out.rotation_deg = median(re);
  } else {
    out.translation_m = out.rotation_deg = std::nan("");
  }
  return out;
}

std::vector<double> mode_coverage(std::span<const Pose> samples, std::span<const Pose> modes,
                                  const RecallThreshold& th) {
  if (samples.empty()) throw ValidationError("mode_coverage: empty sample set");
  std::vector<double> out;
  out.reserve(modes.size());
  for (const auto& mode : modes) {
    out.push_back(static_cast<double>(count_within(samples, mode, th)) /
                  static_cast<double>(samples.size()));
  }
  return out;
}

TimingStats benchmark_inference(const PoseRegressor& model, const Vec& obs, std::size_t M,
                                int repeats, std::uint64_t seed) {
  if (repeats < 2) throw ValidationError("benchmark_inference: repeats must be >= 2");
  for (int i = 0; i < 3; ++i) (void)predict_posterior(model, obs, M, seed);
  std::vector<double> ms;
  ms.reserve(static_cast<std::size_t>(repeats));
  for (int i = 0; i < repeats; ++i) {
    const auto start = std::chrono::steady_clock::now();
    const auto set = predict_posterior(model, obs, M, seed);
    const auto stop = std::chrono::steady_clock::now();
    if (set.poses.size() != M) throw NumericalError("benchmark: unexpected sample count");
    ms.push_back(std::chrono::duration<double, std::milli>(stop - start).count());
  }
  double mean = 0.0;
  for (double v : ms) mean += v;
  mean /= static_cast<double>(ms.size());
  double var = 0.0;
  for (double v : ms) var += (v - mean) * (v - mean);
  var /= static_cast<double>(ms.size() - 1);
  return {mean, std::sqrt(var), repeats};
}

std::vector<PoseSampleSet> predict_test_posteriors(const PoseRegressor& model,
                                                   std::span<const LabeledSample> queries,
                                                   std::size_t M, std::uint64_t seed, int threads) {
  std::vector<PoseSampleSet> out(queries.size());
  auto work = [&](std::size_t begin, std::size_t stride) {
    for (std::size_t i = begin; i < queries.size(); i += stride) {
      out[i] = predict_posterior(model, queries[i].obs, M, derive_seed(seed, {seed_stream::kEval, i}));
    }
  };
  const auto n_threads = static_cast<std::size_t>(std::max(1, threads));
  if (n_threads == 1 || queries.size() < 2) {
    work(0, 1);
    return out;
  }
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(work, t, n_threads);
  for (auto& t : pool) t.join();
  return out;
}

EvalReport summarize(const SceneSpec& spec, std::span<const LabeledSample> queries,
                     std::span<const PoseSampleSet> predictions, const EvalOptions& options) {
  if (queries.empty()) throw ValidationError("evaluate: empty query set");
  if (options.thresholds.empty()) throw ValidationError("evaluate: no thresholds");
  for (const auto& th : options.thresholds) validate(th);

  EvalReport r;
  r.scene = spec.name;
  r.queries = queries.size();
  r.mc_samples = options.mc_samples;
  r.seed = options.seed;

  std::vector<Pose> truths;
  truths.reserve(queries.size());
  for (const auto& q : queries) truths.push_back(q.pose);
  for (const auto& th : options.thresholds) r.recalls.push_back({th, recall(predictions, truths, th)});
  r.medians = median_errors(predictions, truths);

  const int k = spec.symmetry_order;
  r.coverage.threshold = options.thresholds.front();
  r.coverage.floor = options.coverage_floor;
  r.coverage.mean_per_mode.assign(static_cast<std::size_t>(k), 0.0);
  std::size_t covered = 0, missed = 0;
  for (std::size_t i = 0; i < queries.size(); ++i) {
    const auto modes = oracle_modes(spec, truths[i]);
    const auto cov = mode_coverage(predictions[i].poses, modes, r.coverage.threshold);
    bool all = true;
    for (std::size_t j = 0; j < cov.size(); ++j) {
      r.coverage.mean_per_mode[j] += cov[j];
      if (cov[j] < options.coverage_floor) all = false;
    }
    all ? ++covered : ++missed;
  }
  for (auto& v : r.coverage.mean_per_mode) v /= static_cast<double>(queries.size());
  r.coverage.all_modes_covered = static_cast<double>(covered) / static_cast<double>(queries.size());
  r.coverage.some_mode_missed = static_cast<double>(missed) / static_cast<double>(queries.size());
  return r;
}

EvalReport evaluate(const PoseRegressor& model, const SceneSpec& spec,
                    std::span<const LabeledSample> queries, const EvalOptions& options) {
  if (queries.empty()) throw ValidationError("evaluate: empty query set");
  if (queries.front().obs.size() != model.obs_dim()) {
    throw ValidationError("evaluate: dataset obs_dim " + std::to_string(queries.front().obs.size()) +
                          " does not match checkpoint obs_dim " + std::to_string(model.obs_dim()));
  }
  const auto predictions =
      predict_test_posteriors(model, queries, options.mc_samples, options.seed, options.threads);
  EvalReport r = summarize(spec, queries, predictions, options);
  if (options.timing_repeats >= 2) {
    r.timing = benchmark_inference(model, queries.front().obs, options.mc_samples,
                                   options.timing_repeats, options.seed);
  }
  return r;
}

nlohmann::json to_json(const EvalReport& r) {
  nlohmann::json recalls = nlohmann::json::array();
  for (const auto& tr : r.recalls) {
    recalls.push_back({{"trans_max_m", tr.threshold.trans_max},
                       {"rot_max_deg", tr.threshold.rot_max_deg},
                       {"gamma", tr.threshold.gamma},
                       {"recall", tr.recall}});
  }
  return nlohmann::json{
      {"scene", r.scene},
      {"queries", r.queries},
      {"mc_samples", r.mc_samples},
      {"seed", r.seed},
      {"recall", recalls},
      {"median_error",
       {{"translation_m", r.medians.translation_m},
        {"rotation_deg", r.medians.rotation_deg},
        {"queries_used", r.medians.used},
        {"degenerate_queries", r.medians.degenerate}}},
      {"mode_coverage",
       {{"trans_max_m", r.coverage.threshold.trans_max},
        {"rot_max_deg", r.coverage.threshold.rot_max_deg},
        {"floor", r.coverage.floor},
        {"mean_per_mode", r.coverage.mean_per_mode},
        {"all_modes_covered", r.coverage.all_modes_covered},
        {"some_mode_missed", r.coverage.some_mode_missed}}},
      {"timing", {{"mean_ms", r.timing.mean_ms}, {"std_ms", r.timing.std_ms}, {"repeats", r.timing.repeats}}},
  };
}

void write_eval_table(std::ostream& out, const EvalReport& r) {
  auto fmt = [](double v, int prec) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(prec) << v;
    return s.str();
  };
  out << std::left << std::setw(16) << "Scene" << std::setw(18) << "Threshold" << std::setw(8)
      << "gamma" << "Recall\n";
  bool first = true;
  for (const auto& tr : r.recalls) {
    const std::string th = fmt(tr.threshold.trans_max, 2) + "m / " + fmt(tr.threshold.rot_max_deg, 0) + "deg";
    out << std::left << std::setw(16) << (first ? r.scene : "") << std::setw(18) << th << std::setw(8)
        << fmt(tr.threshold.gamma, 2) << fmt(tr.recall, 2) << '\n';
    first = false;
  }
  out << "median error: " << fmt(r.medians.translation_m, 3) << " m / " << fmt(r.medians.rotation_deg, 2)
      << " deg (" << r.medians.used << " queries, " << r.medians.degenerate << " degenerate)\n";
  out << "mode coverage >= " << fmt(r.coverage.floor, 2) << " on all modes: " << fmt(r.coverage.all_modes_covered, 2)
      << '\n';
  if (r.timing.repeats > 0) {
    out << "inference: " << fmt(r.timing.mean_ms, 2) << " +- " << fmt(r.timing.std_ms, 2) << " ms\n";
  }
}

}  // namespace ambipose
