#pragma once

// Procedural ambiguous scenes: a camera circles a landmark layout that is
// invariant under a k-fold rotation about the vertical axis, so every
// observation is explained equally well by k distinct poses.

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ambipose/diffnet.hpp"
#include "ambipose/geometry.hpp"
#include "ambipose/model.hpp"

namespace ambipose {

inline constexpr int kObsDim = 64;
inline constexpr int kBearingBins = 24;
inline constexpr int kIdentityChannels = 16;
inline constexpr std::uint32_t kDatasetFormatVersion = 1;

/// A landmark of the base sector. The full layout repeats the base sector
/// symmetry_order times about the z axis.
struct BaseLandmark {
  Vec3 position = Vec3::Zero();
  int feature = 0;
};

/// Landmark of the expanded layout; `copy` is the sector it belongs to.
struct Landmark {
  Vec3 position = Vec3::Zero();
  int feature = 0;
  int copy = 0;
};

struct SceneSpec {
  std::string name;
  int symmetry_order = 1;
  SceneBounds bounds;
  double ring_radius = 1.0;
  double camera_height = 0.5;
  std::vector<BaseLandmark> landmark_layout;
  double noise_std = 0.01;
  // 0: copies indistinguishable; 1: identity channels fully on.
  double distinguishing_strength = 0.0;
  double radius_jitter = 0.02;
  double height_jitter = 0.02;
  // Fraction of the 2*pi/n yaw spacing used for random offsets.
  double yaw_jitter = 1.0;

  int obs_dim() const { return kObsDim; }
  /// Metric scale used to express thresholds relative to the scene.
  double scale() const { return ring_radius; }
  std::vector<Landmark> landmarks() const;
};

void validate(const SceneSpec& spec);

/// Built-ins: round_table (k=4), dinner_table (k=2), ceiling_grid (k=6),
/// unambiguous (k=1, eta=1). Throws ValidationError for unknown names.
SceneSpec builtin_scene(const std::string& name);
std::vector<std::string> builtin_scene_names();

void to_json(nlohmann::json& j, const SceneSpec& s);
void from_json(const nlohmann::json& j, SceneSpec& s);

/// Camera at `position` looking at the scene origin; camera z is the viewing
/// axis, x points right and y down.
Pose look_at_origin(const Vec3& position);

/// Noise-free observation. Throws ValidationError for poses outside bounds.
Vec render_clean(const SceneSpec& spec, const Pose& pose);
/// render_clean plus N(0, noise_std^2) per channel drawn from `rng`.
Vec render_observation(const SceneSpec& spec, const Pose& pose, std::mt19937_64& rng);

std::vector<Pose> sample_trajectory(const SceneSpec& spec, std::size_t n, std::uint64_t seed);

/// Images of `pose` under rotations by 2*pi*j/k about z, j = 0..k-1; entry 0
/// is the input pose.
std::vector<Pose> oracle_modes(const SceneSpec& spec, const Pose& pose);

struct LabeledSample {
  Vec obs;
  Pose pose;
};

/// On-disk record: float32 observation, translation, quaternion (w >= 0).
struct DatasetRecord {
  std::vector<float> obs;
  std::array<float, 3> t{};
  std::array<float, 4> q{};

  LabeledSample to_sample() const;
  bool operator==(const DatasetRecord&) const = default;
};

DatasetRecord make_record(const Vec& obs, const Pose& pose);

struct DatasetManifest {
  std::uint32_t format_version = kDatasetFormatVersion;
  SceneSpec spec;
  std::size_t n_train = 0;
  std::size_t n_test = 0;
  int obs_dim = kObsDim;
  std::uint64_t seed = 0;
  std::uint64_t train_seed = 0;
  std::uint64_t test_seed = 0;
  // Command-level seed the dataset seed was derived from, when known.
  std::optional<std::uint64_t> global_seed;
};

void to_json(nlohmann::json& j, const DatasetManifest& m);
void from_json(const nlohmann::json& j, DatasetManifest& m);

struct Dataset {
  DatasetManifest manifest;
  std::vector<DatasetRecord> train;
  std::vector<DatasetRecord> test;

  std::vector<LabeledSample> train_samples() const;
  std::vector<LabeledSample> test_samples() const;
};

inline constexpr std::uint64_t kTestSeedXor = 0x7e57da7a5eed0001ull;

Dataset generate_dataset(const SceneSpec& spec, std::size_t n_train, std::size_t n_test,
                         std::uint64_t seed);

void write_dataset(const std::filesystem::path& dir, const Dataset& ds);
Dataset read_dataset(const std::filesystem::path& dir);

}  // namespace ambipose
