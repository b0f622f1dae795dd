#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <numbers>
#include <random>
#include <string>

#include "doctest.h"

#include "ambipose/errors.hpp"
#include "ambipose/scenes.hpp"

using namespace ambipose;

namespace {

constexpr double kPi = std::numbers::pi;

std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), {}};
}

std::filesystem::path scratch_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("ambipose_test_" + name);
  std::filesystem::remove_all(p);
  return p;
}

SceneSpec noiseless(const std::string& name) {
  SceneSpec s = builtin_scene(name);
  s.noise_std = 0.0;
  return s;
}

}  // namespace

TEST_CASE("built-in scenes") {
  CHECK(builtin_scene("round_table").symmetry_order == 4);
  CHECK(builtin_scene("dinner_table").symmetry_order == 2);
  CHECK(builtin_scene("ceiling_grid").symmetry_order == 6);
  CHECK(builtin_scene("unambiguous").symmetry_order == 1);
  CHECK(builtin_scene("unambiguous").distinguishing_strength == 1.0);
  CHECK_THROWS_AS(builtin_scene("atrium"), ValidationError);
  for (const auto& n : builtin_scene_names()) {
    const SceneSpec s = builtin_scene(n);
    CHECK_NOTHROW(validate(s));
    nlohmann::json j = s;
    const SceneSpec back = j.get<SceneSpec>();
    CHECK(nlohmann::json(back) == j);
  }
}

TEST_CASE("invalid scene specs are rejected") {
  SceneSpec s = builtin_scene("round_table");
  s.symmetry_order = 0;
  CHECK_THROWS_AS(validate(s), ValidationError);
  s = builtin_scene("round_table");
  s.distinguishing_strength = 1.5;
  CHECK_THROWS_AS(validate(s), ValidationError);
  s = builtin_scene("round_table");
  s.landmark_layout.clear();
  CHECK_THROWS_AS(validate(s), ValidationError);
}

TEST_CASE("look_at_origin points the optical axis at the origin") {
  const Pose p = look_at_origin(Vec3(1.0, 0.5, 0.4));
  const Vec3 axis = p.R.matrix().col(2);
  CHECK(axis.cross(-p.t.normalized()).norm() < 1e-12);
  CHECK(axis.dot(-p.t) > 0);
}

TEST_CASE("symmetric images render identical observations") {
  for (const char* name : {"round_table", "dinner_table", "ceiling_grid"}) {
    const SceneSpec s = noiseless(name);
    for (const auto& pose : sample_trajectory(s, 37, 4)) {
      const Vec ref = render_clean(s, pose);
      for (const auto& mode : oracle_modes(s, pose)) CHECK((render_clean(s, mode) - ref).norm() == 0.0);
    }
  }
}

TEST_CASE("distinguishing channels separate symmetric images") {
  SceneSpec s = builtin_scene("round_table");
  s.distinguishing_strength = 1.0;
  const double floor = 10 * s.noise_std;
  for (const auto& pose : sample_trajectory(s, 60, 8)) {
    const auto modes = oracle_modes(s, pose);
    const Vec ref = render_clean(s, pose);
    for (std::size_t j = 1; j < modes.size(); ++j) {
      const Vec other = render_clean(s, modes[j]);
      CHECK((ref.head(2 * kBearingBins) - other.head(2 * kBearingBins)).norm() == doctest::Approx(0.0).scale(1e-9));
      CHECK((ref.tail(kIdentityChannels) - other.tail(kIdentityChannels)).norm() >= floor);
    }
  }
}

TEST_CASE("observation noise") {
  const SceneSpec clean = noiseless("round_table");
  const Pose pose = sample_trajectory(clean, 1, 1).front();
  std::mt19937_64 a(1), b(2);
  CHECK(render_observation(clean, pose, a) == render_observation(clean, pose, b));
  const SceneSpec s = builtin_scene("round_table");
  std::mt19937_64 rng(3);
  const Vec noisy = render_observation(s, pose, rng);
  const Vec diff = noisy - render_clean(s, pose);
  const double sd = std::sqrt(diff.squaredNorm() / diff.size());
  CHECK(sd > 0.5 * s.noise_std);
  CHECK(sd < 1.5 * s.noise_std);
  Pose outside = pose;
  outside.t = Vec3(100, 0, 0);
  CHECK_THROWS_AS(render_clean(s, outside), ValidationError);
}

TEST_CASE("trajectory examples") {
  SceneSpec s = builtin_scene("round_table");
  s.yaw_jitter = s.radius_jitter = s.height_jitter = 0.0;
  const auto poses = sample_trajectory(s, 4, 1);
  for (int i = 0; i < 4; ++i) {
    const double yaw = std::atan2(poses[i].t.y(), poses[i].t.x());
    CHECK(std::remainder(yaw - i * kPi / 2, 2 * kPi) == doctest::Approx(0.0).scale(1e-12));
    CHECK(std::hypot(poses[i].t.x(), poses[i].t.y()) == doctest::Approx(s.ring_radius));
    CHECK(poses[i].R.matrix().col(2).cross(-poses[i].t.normalized()).norm() < 1e-9);
  }
  const auto a = sample_trajectory(builtin_scene("round_table"), 20, 5);
  const auto b = sample_trajectory(builtin_scene("round_table"), 20, 5);
  for (int i = 0; i < 20; ++i) CHECK(a[i].t == b[i].t);
}

TEST_CASE("oracle modes form the symmetry orbit") {
  const SceneSpec s = builtin_scene("round_table");
  SceneSpec flat = s;
  flat.yaw_jitter = flat.radius_jitter = flat.height_jitter = 0.0;
  const Pose p = sample_trajectory(flat, 1, 1).front();
  const auto modes = oracle_modes(s, p);
  REQUIRE(modes.size() == 4);
  CHECK(modes[0].t == p.t);
  for (int j = 0; j < 4; ++j) {
    const double yaw = std::atan2(modes[j].t.y(), modes[j].t.x());
    CHECK(std::remainder(yaw - j * kPi / 2, 2 * kPi) == doctest::Approx(0.0).scale(1e-12));
    CHECK(modes[j].t.z() == doctest::Approx(p.t.z()));
    // Closure: the orbit of any element is the same set.
    for (const auto& q : oracle_modes(s, modes[j])) {
      double best = 1e9;
      for (const auto& m : modes) best = std::min(best, (q.t - m.t).norm() + chordal_distance(q.R, m.R));
      CHECK(best < 1e-9);
    }
  }
  const auto twice = oracle_modes(builtin_scene("dinner_table"), oracle_modes(builtin_scene("dinner_table"), p)[1])[1];
  CHECK((twice.t - p.t).norm() < 1e-12);
  CHECK(oracle_modes(builtin_scene("unambiguous"), p).size() == 1);
}

TEST_CASE("dataset generation, bounds and round trip") {
  const SceneSpec s = builtin_scene("dinner_table");
  const Dataset ds = generate_dataset(s, 30, 10, 7);
  CHECK(ds.train.size() == 30);
  CHECK(ds.test.size() == 10);
  CHECK(ds.manifest.test_seed == (7ull ^ kTestSeedXor));
  for (const auto& sample : ds.train_samples()) {
    for (int i = 0; i < 3; ++i) {
      CHECK(sample.pose.t(i) > s.bounds.min(i));
      CHECK(sample.pose.t(i) < s.bounds.max(i));
    }
    CHECK(sample.obs.size() == kObsDim);
  }

  const auto dir = scratch_dir("dataset");
  write_dataset(dir, ds);
  const Dataset back = read_dataset(dir);
  CHECK(back.train == ds.train);
  CHECK(back.test == ds.test);
  CHECK(back.manifest.n_train == 30);
  CHECK(std::filesystem::file_size(dir / "train.bin") == 30 * (kObsDim + 7) * sizeof(float));

  const auto dir2 = scratch_dir("dataset2");
  write_dataset(dir2, generate_dataset(s, 30, 10, 7));
  for (const char* f : {"manifest.json", "train.bin", "test.bin"}) CHECK(slurp(dir / f) == slurp(dir2 / f));

  std::filesystem::resize_file(dir2 / "test.bin", 100);
  CHECK_THROWS_AS(read_dataset(dir2), IoError);
  CHECK_THROWS_AS(read_dataset(scratch_dir("missing")), IoError);
  std::filesystem::remove_all(dir);
  std::filesystem::remove_all(dir2);
}

TEST_CASE("ambiguous test observations have training neighbours at symmetric poses") {
  const SceneSpec s = builtin_scene("round_table");
  const Dataset ds = generate_dataset(s, 300, 100, 3);
  const auto train = ds.train_samples();
  const auto test = ds.test_samples();
  int matched = 0, across_modes = 0;
  for (const auto& q : test) {
    std::size_t best = 0;
    double best_d = 1e300;
    for (std::size_t i = 0; i < train.size(); ++i) {
      const double d = (train[i].obs - q.obs).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = i;
      }
    }
    const auto modes = oracle_modes(s, q.pose);
    for (std::size_t j = 0; j < modes.size(); ++j) {
      if ((modes[j].t - train[best].pose.t).norm() <= 0.1 * s.scale() &&
          geodesic_angle(modes[j].R, train[best].pose.R) <= 10.0 * kPi / 180) {
        ++matched;
        if (j != 0) ++across_modes;
        break;
      }
    }
  }
  CHECK(matched >= 95);
  // The neighbour usually sits in another sector: the scene really is ambiguous.
  CHECK(across_modes >= 50);
}
