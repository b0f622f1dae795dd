#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"

#include "ambipose/errors.hpp"
#include "ambipose/eval.hpp"

using namespace ambipose;

namespace {

constexpr double kDeg = std::numbers::pi / 180;

Pose at(double x, double yaw_deg = 0.0) {
  Pose p;
  p.t = Vec3(x, 0, 0);
  p.R = Rotation::about_z(yaw_deg * kDeg);
  return p;
}

PoseSampleSet set_of(std::vector<Pose> poses) { return {std::move(poses), 0}; }

}  // namespace

TEST_CASE("default thresholds") {
  const auto th = default_thresholds();
  REQUIRE(th.size() == 3);
  CHECK(th[0].trans_max == 0.1);
  CHECK(th[0].rot_max_deg == 10.0);
  CHECK(th[1].trans_max == 0.2);
  CHECK(th[1].rot_max_deg == 15.0);
  CHECK(th[2].trans_max == doctest::Approx(0.3));
  CHECK(th[2].rot_max_deg == 20.0);
  CHECK(th[0].gamma == 0.1);
  CHECK(default_thresholds(0.05, 2.0)[1].trans_max == 0.4);
  CHECK_THROWS_AS(validate(RecallThreshold{0.1, 10, 0.0}), ValidationError);
  CHECK_THROWS_AS(validate(RecallThreshold{-0.1, 10, 0.1}), ValidationError);
}

TEST_CASE("true positive boundary semantics") {
  const RecallThreshold th{0.1, 10.0, 0.1};
  const Pose truth = at(0.0);
  // Exactly gamma * M samples inside counts.
  std::vector<Pose> s(10, at(5.0));
  s[0] = at(0.05);
  CHECK(is_true_positive(s, truth, th));
  s[0] = at(5.0);
  CHECK_FALSE(is_true_positive(s, truth, th));

  // Translation threshold is inclusive; just beyond fails.
  std::vector<Pose> edge(1, at(0.1));
  CHECK(within(edge[0], truth, th));
  CHECK_FALSE(within(at(0.1 + 1e-9), truth, th));
  // Both conditions are required.
  CHECK_FALSE(within(at(0.0, 10.5), truth, th));
  CHECK(within(at(0.0, 9.5), truth, th));
  CHECK_FALSE(within(at(0.2, 1.0), truth, th));

  CHECK_THROWS_AS(is_true_positive(std::vector<Pose>{}, truth, th), ValidationError);
}

TEST_CASE("recall is monotone in thresholds and gamma") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.0, 0.15);
  std::vector<PoseSampleSet> preds;
  std::vector<Pose> truths;
  for (int q = 0; q < 60; ++q) {
    std::vector<Pose> s;
    const double spread = 0.2 + 0.02 * q;
    for (int i = 0; i < 100; ++i) s.push_back(at(spread * n(rng) / 0.15, 40 * n(rng)));
    preds.push_back(set_of(s));
    truths.push_back(at(0.0));
  }
  double prev = -1;
  for (const auto& th : default_thresholds()) {
    const double r = recall(preds, truths, th);
    CHECK(r >= prev);
    prev = r;
  }
  prev = 2;
  for (double g : {0.01, 0.05, 0.1, 0.3, 0.6}) {
    const double r = recall(preds, truths, {0.2, 15.0, g});
    CHECK(r <= prev);
    prev = r;
  }
  CHECK_THROWS_AS(recall(preds, std::vector<Pose>{}, default_thresholds()[0]), ValidationError);
}

TEST_CASE("median even-count rule") {
  CHECK(median({3.0, 1.0, 2.0}) == 2.0);
  CHECK(median({4.0, 1.0, 3.0, 2.0}) == 2.5);
  CHECK(median({7.0}) == 7.0);
  CHECK_THROWS_AS(median({}), ValidationError);
}

TEST_CASE("median errors use the point prediction") {
  std::vector<PoseSampleSet> preds{set_of({at(0.1), at(0.3)}), set_of({at(1.0, 20), at(1.0, 20)}),
                                   set_of({at(0.0, 0), at(0.0, 180)})};
  std::vector<Pose> truths{at(0.0), at(1.0), at(0.0)};
  const auto m = median_errors(preds, truths);
  CHECK(m.used == 2);
  CHECK(m.degenerate == 1);
  CHECK(m.translation_m == doctest::Approx(0.1));
  CHECK(m.rotation_deg == doctest::Approx(10.0));
}

TEST_CASE("mode coverage on a bimodal sample set") {
  const SceneSpec s = builtin_scene("dinner_table");
  const Pose truth = sample_trajectory(s, 1, 1).front();
  const auto modes = oracle_modes(s, truth);
  std::vector<Pose> samples;
  for (int i = 0; i < 70; ++i) samples.push_back(modes[0]);
  for (int i = 0; i < 30; ++i) samples.push_back(modes[1]);
  const auto cov = mode_coverage(samples, modes, default_thresholds()[0]);
  CHECK(cov[0] == doctest::Approx(0.7));
  CHECK(cov[1] == doctest::Approx(0.3));
}

TEST_CASE("summarize reports coverage per oracle mode") {
  const SceneSpec s = builtin_scene("round_table");
  const Dataset ds = generate_dataset(s, 4, 8, 2);
  const auto queries = ds.test_samples();
  std::vector<PoseSampleSet> preds;
  for (std::size_t q = 0; q < queries.size(); ++q) {
    const auto modes = oracle_modes(s, queries[q].pose);
    std::vector<Pose> samples;
    // Even queries: all four modes; odd queries: only the truth.
    for (int i = 0; i < 40; ++i) samples.push_back(q % 2 == 0 ? modes[i % 4] : modes[0]);
    preds.push_back(set_of(samples));
  }
  EvalOptions opt;
  opt.thresholds = default_thresholds(0.1, s.scale());
  const auto r = summarize(s, queries, preds, opt);
  CHECK(r.coverage.all_modes_covered == doctest::Approx(0.5));
  CHECK(r.coverage.some_mode_missed == doctest::Approx(0.5));
  CHECK(r.coverage.mean_per_mode[0] == doctest::Approx(0.625));
  CHECK(r.recalls[0].recall == 1.0);
  const auto j = to_json(r);
  CHECK(j["scene"] == "round_table");
  CHECK(j["recall"].size() == 3);
}

TEST_CASE("evaluate rejects a dimension mismatch and is thread-count invariant") {
  const SceneSpec s = builtin_scene("round_table");
  const Dataset ds = generate_dataset(s, 4, 6, 2);
  ArchConfig a;
  a.latent_dim = 4;
  a.posemap_width = 16;
  a.posemap_layers = 1;
  a.encoder_hidden = {16};
  const auto m = make_regressor(kObsDim, a, s.bounds, RegressorMode::Variational, 1);
  const auto queries = ds.test_samples();
  const auto p1 = predict_test_posteriors(m, queries, 20, 9, 1);
  const auto p3 = predict_test_posteriors(m, queries, 20, 9, 3);
  for (std::size_t q = 0; q < queries.size(); ++q) CHECK(p1[q].poses[7].t == p3[q].poses[7].t);

  const auto wrong = make_regressor(10, a, s.bounds, RegressorMode::Variational, 1);
  try {
    evaluate(wrong, s, queries, EvalOptions{});
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("64") != std::string::npos);
  }
  const auto t = benchmark_inference(m, queries[0].obs, 50, 5);
  CHECK(t.repeats == 5);
  CHECK(t.mean_ms > 0.0);
  CHECK(t.std_ms >= 0.0);
}
