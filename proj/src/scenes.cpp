#include "ambipose/scenes.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

#include "ambipose/errors.hpp"
#include "ambipose/seeding.hpp"
#include "binary_io.hpp"

namespace ambipose {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kFieldOfView = 70.0 * std::numbers::pi / 180.0;  // half-angle
constexpr int kCoarseBins = 4;
constexpr int kCodeDims = 4;
// Canonical poses are snapped to this grid so that symmetry-equivalent poses
// render bit-identical observations.
constexpr double kSnap = 1073741824.0;  // 2^30

double snap(double x) { return std::round(x * kSnap) / kSnap; }

double wrap_angle(double a) {
  a = std::fmod(a, kTwoPi);
  return a < 0.0 ? a + kTwoPi : a;
}

std::array<double, kCodeDims> identity_code(int copy, int k) {
  const double th = kTwoPi * copy / k;
  return {std::cos(th), std::sin(th), std::cos(2.0 * th), std::sin(2.0 * th)};
}

bool inside(const SceneBounds& b, const Vec3& t) {
  return (t.array() >= b.min.array()).all() && (t.array() <= b.max.array()).all();
}

struct PolarLandmark {
  double radius, sector_fraction, height;
  int feature;
};

SceneSpec make_ring_scene(std::string name, int k, double radius, double height,
                          std::initializer_list<PolarLandmark> base, double eta) {
  SceneSpec s;
  s.name = std::move(name);
  s.symmetry_order = k;
  s.ring_radius = radius;
  s.camera_height = height;
  s.bounds.min = Vec3(-radius - 0.5, -radius - 0.5, height - 0.5);
  s.bounds.max = Vec3(radius + 0.5, radius + 0.5, height + 0.5);
  const double sector = kTwoPi / k;
  for (const auto& l : base) {
    const double a = l.sector_fraction * sector;
    s.landmark_layout.push_back(
        {Vec3(l.radius * std::cos(a), l.radius * std::sin(a), l.height), l.feature});
  }
  s.distinguishing_strength = eta;
  return s;
}

}  // namespace

std::vector<Landmark> SceneSpec::landmarks() const {
  std::vector<Landmark> out;
  out.reserve(landmark_layout.size() * static_cast<std::size_t>(symmetry_order));
  for (int c = 0; c < symmetry_order; ++c) {
    const Rotation g = c == 0 ? Rotation::identity() : Rotation::about_z(kTwoPi * c / symmetry_order);
    for (const auto& b : landmark_layout) out.push_back({g * b.position, b.feature, c});
  }
  return out;
}

void validate(const SceneSpec& s) {
  if (s.symmetry_order < 1) throw ValidationError("scene: symmetry_order must be >= 1");
  if (!(s.ring_radius > 0.0)) throw ValidationError("scene: ring_radius must be > 0");
  if (!(s.distinguishing_strength >= 0.0 && s.distinguishing_strength <= 1.0)) {
    throw ValidationError("scene: distinguishing_strength must lie in [0, 1]");
  }
  if (!(s.noise_std >= 0.0)) throw ValidationError("scene: noise_std must be >= 0");
  if (!(s.radius_jitter >= 0.0) || !(s.height_jitter >= 0.0) ||
      !(s.yaw_jitter >= 0.0 && s.yaw_jitter <= 1.0)) {
    throw ValidationError("scene: jitter values must be >= 0 (yaw_jitter <= 1)");
  }
  if (s.landmark_layout.empty()) throw ValidationError("scene: landmark layout is empty");
  validate(s.bounds);
  const double r_max = s.ring_radius + s.radius_jitter;
  if (r_max > s.bounds.max.x() || r_max > s.bounds.max.y() || -r_max < s.bounds.min.x() ||
      -r_max < s.bounds.min.y() || s.camera_height - s.height_jitter < s.bounds.min.z() ||
      s.camera_height + s.height_jitter > s.bounds.max.z()) {
    throw ValidationError("scene: camera ring does not fit inside bounds");
  }
}

SceneSpec builtin_scene(const std::string& name) {
  if (name == "round_table") {
    return make_ring_scene(name, 4, 1.0, 0.5,
                           {{0.45, 0.0, 0.0, 0}, {0.25, 0.35, 0.35, 1}, {0.65, 0.6, 0.15, 2}}, 0.0);
  }
  if (name == "dinner_table") {
    return make_ring_scene(name, 2, 1.5, 0.6,
                           {{0.8, 0.0, 0.0, 0},
                            {0.4, 0.15, 0.4, 1},
                            {0.9, 0.3, 0.2, 2},
                            {0.5, 0.55, 0.0, 0},
                            {1.0, 0.75, 0.3, 1}},
                           0.0);
  }
  if (name == "ceiling_grid") {
    return make_ring_scene(name, 6, 1.2, 0.5,
                           {{0.6, 0.0, 0.9, 0}, {0.35, 0.5, 0.9, 1}, {0.8, 0.3, 0.6, 2}}, 0.0);
  }
  if (name == "unambiguous") {
    return make_ring_scene(name, 1, 1.0, 0.5,
                           {{0.45, 0.0, 0.0, 0},
                            {0.25, 0.12, 0.35, 1},
                            {0.65, 0.27, 0.15, 2},
                            {0.5, 0.41, 0.3, 0},
                            {0.3, 0.58, 0.1, 2},
                            {0.7, 0.73, 0.25, 1},
                            {0.4, 0.88, 0.05, 0}},
                           1.0);
  }
  throw ValidationError("unknown scene '" + name + "'");
}

std::vector<std::string> builtin_scene_names() {
  return {"round_table", "dinner_table", "ceiling_grid", "unambiguous"};
}

void to_json(nlohmann::json& j, const SceneSpec& s) {
  nlohmann::json layout = nlohmann::json::array();
  for (const auto& l : s.landmark_layout) {
    layout.push_back({{"position", {l.position.x(), l.position.y(), l.position.z()}},
                      {"feature", l.feature}});
  }
  j = nlohmann::json{
      {"name", s.name},
      {"symmetry_order", s.symmetry_order},
      {"bounds",
       {{"min", {s.bounds.min.x(), s.bounds.min.y(), s.bounds.min.z()}},
        {"max", {s.bounds.max.x(), s.bounds.max.y(), s.bounds.max.z()}}}},
      {"ring_radius", s.ring_radius},
      {"camera_height", s.camera_height},
      {"landmark_layout", layout},
      {"noise_std", s.noise_std},
      {"distinguishing_strength", s.distinguishing_strength},
      {"radius_jitter", s.radius_jitter},
      {"height_jitter", s.height_jitter},
      {"yaw_jitter", s.yaw_jitter},
      {"obs_dim", s.obs_dim()},
  };
}

void from_json(const nlohmann::json& j, SceneSpec& s) {
  auto vec3 = [](const nlohmann::json& a) {
    if (!a.is_array() || a.size() != 3) throw ValidationError("scene: expected a 3-vector");
    return Vec3(a[0].get<double>(), a[1].get<double>(), a[2].get<double>());
  };
  try {
    s.name = j.at("name").get<std::string>();
    s.symmetry_order = j.at("symmetry_order").get<int>();
    s.bounds.min = vec3(j.at("bounds").at("min"));
    s.bounds.max = vec3(j.at("bounds").at("max"));
    s.ring_radius = j.at("ring_radius").get<double>();
    s.camera_height = j.at("camera_height").get<double>();
    s.landmark_layout.clear();
    for (const auto& l : j.at("landmark_layout")) {
      s.landmark_layout.push_back({vec3(l.at("position")), l.value("feature", 0)});
    }
    s.noise_std = j.value("noise_std", 0.01);
    s.distinguishing_strength = j.value("distinguishing_strength", 0.0);
    s.radius_jitter = j.value("radius_jitter", 0.02);
    s.height_jitter = j.value("height_jitter", 0.02);
    s.yaw_jitter = j.value("yaw_jitter", 1.0);
    if (j.contains("obs_dim") && j.at("obs_dim").get<int>() != kObsDim) {
      throw ValidationError("scene: obs_dim must be " + std::to_string(kObsDim));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("scene spec: ") + e.what());
  }
}

Pose look_at_origin(const Vec3& position) {
  const Vec3 f = (-position).normalized();
  Vec3 right = f.cross(Vec3::UnitZ());
  if (right.norm() < 1e-12) right = Vec3::UnitX();
  right.normalize();
  const Vec3 down = f.cross(right);
  Mat3 m;
  m.col(0) = right;
  m.col(1) = down;
  m.col(2) = f;
  return Pose{position, Rotation(m)};
}

Vec render_clean(const SceneSpec& spec, const Pose& pose) {
  if (!inside(spec.bounds, pose.t)) throw ValidationError("render: pose outside scene bounds");
  const int k = spec.symmetry_order;
  const double sector = kTwoPi / k;

  // Reduce to the fundamental sector, then snap.
  int j = static_cast<int>(std::floor(wrap_angle(std::atan2(pose.t.y(), pose.t.x())) / sector));
  j = std::clamp(j, 0, k - 1);
  Vec3 tc = pose.t;
  Mat3 Rc = pose.R.matrix();
  if (j != 0) {
    const Mat3 G = Rotation::about_z(-sector * j).matrix();
    tc = G * tc;
    Rc = G * Rc;
  }
  tc = tc.unaryExpr(&snap);
  Rc = Rc.unaryExpr(&snap);

  const double eta = spec.distinguishing_strength;
  const double bin_step = 2.0 * kFieldOfView / (kBearingBins - 1);
  const double coarse_step = 2.0 * kFieldOfView / (kCoarseBins - 1);
  const double coarse_width = 0.6 * coarse_step;

  Vec obs = Vec::Zero(kObsDim);
  for (const auto& l : spec.landmarks()) {
    const Vec3 p = Rc.transpose() * (l.position - tc);
    const double rho = p.norm();
    if (p.z() <= 0.0 || rho <= 0.0) continue;
    const double visibility = p.z() / rho;
    const double bearing = std::atan2(p.x(), p.z());
    const double amplitude = 1.0 + 0.5 * l.feature;
    for (int b = 0; b < kBearingBins; ++b) {
      const double d = (bearing - (-kFieldOfView + b * bin_step)) / bin_step;
      const double w = visibility * std::exp(-0.5 * d * d);
      obs(b) += amplitude * w;
      obs(kBearingBins + b) += w / rho;
    }
    if (eta > 0.0) {
      const auto code = identity_code((l.copy + j) % k, k);
      for (int q = 0; q < kCoarseBins; ++q) {
        const double d = (bearing - (-kFieldOfView + q * coarse_step)) / coarse_width;
        const double w = eta * visibility * std::exp(-0.5 * d * d);
        for (int e = 0; e < kCodeDims; ++e) obs(2 * kBearingBins + q * kCodeDims + e) += w * code[e];
      }
    }
  }
  return obs;
}

Vec render_observation(const SceneSpec& spec, const Pose& pose, std::mt19937_64& rng) {
  Vec obs = render_clean(spec, pose);
  if (spec.noise_std > 0.0) {
    std::normal_distribution<double> noise(0.0, spec.noise_std);
    for (Eigen::Index i = 0; i < obs.size(); ++i) obs(i) += noise(rng);
  }
  return obs;
}

std::vector<Pose> sample_trajectory(const SceneSpec& spec, std::size_t n, std::uint64_t seed) {
  if (n < 1) throw ValidationError("sample_trajectory: n must be >= 1");
  validate(spec);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Pose> poses;
  poses.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double u_yaw = unit(rng);
    const double u_r = unit(rng);
    const double u_h = unit(rng);
    const double yaw = kTwoPi * (static_cast<double>(i) + spec.yaw_jitter * u_yaw) / static_cast<double>(n);
    const double r = spec.ring_radius + spec.radius_jitter * (2.0 * u_r - 1.0);
    const double h = spec.camera_height + spec.height_jitter * (2.0 * u_h - 1.0);
    poses.push_back(look_at_origin(Vec3(r * std::cos(yaw), r * std::sin(yaw), h)));
  }
  return poses;
}

std::vector<Pose> oracle_modes(const SceneSpec& spec, const Pose& pose) {
  if (!inside(spec.bounds, pose.t)) throw ValidationError("oracle_modes: pose outside scene bounds");
  const int k = spec.symmetry_order;
  std::vector<Pose> modes;
  modes.reserve(static_cast<std::size_t>(k));
  modes.push_back(pose);
  for (int j = 1; j < k; ++j) {
    const Rotation g = Rotation::about_z(kTwoPi * j / k);
    modes.push_back(Pose{g * pose.t, g * pose.R});
  }
  return modes;
}

LabeledSample DatasetRecord::to_sample() const {
  LabeledSample s;
  s.obs.resize(static_cast<Eigen::Index>(obs.size()));
  for (std::size_t i = 0; i < obs.size(); ++i) s.obs(static_cast<Eigen::Index>(i)) = obs[i];
  s.pose.t = Vec3(t[0], t[1], t[2]);
  s.pose.R = Rotation::from_quaternion(q[0], q[1], q[2], q[3]);
  return s;
}

DatasetRecord make_record(const Vec& obs, const Pose& pose) {
  DatasetRecord r;
  r.obs.resize(static_cast<std::size_t>(obs.size()));
  for (Eigen::Index i = 0; i < obs.size(); ++i) r.obs[static_cast<std::size_t>(i)] = static_cast<float>(obs(i));
  for (int i = 0; i < 3; ++i) r.t[i] = static_cast<float>(pose.t(i));
  const Eigen::Vector4d q = pose.R.quaternion();
  for (int i = 0; i < 4; ++i) r.q[i] = static_cast<float>(q(i));
  return r;
}

std::vector<LabeledSample> Dataset::train_samples() const {
  std::vector<LabeledSample> out;
  out.reserve(train.size());
  for (const auto& r : train) out.push_back(r.to_sample());
  return out;
}

std::vector<LabeledSample> Dataset::test_samples() const {
  std::vector<LabeledSample> out;
  out.reserve(test.size());
  for (const auto& r : test) out.push_back(r.to_sample());
  return out;
}

void to_json(nlohmann::json& j, const DatasetManifest& m) {
  j = nlohmann::json{{"format_version", m.format_version},
                     {"scene", m.spec},
                     {"n_train", m.n_train},
                     {"n_test", m.n_test},
                     {"obs_dim", m.obs_dim},
                     {"seed", m.seed},
                     {"train_seed", m.train_seed},
                     {"test_seed", m.test_seed}};
  if (m.global_seed) j["global_seed"] = *m.global_seed;
}

void from_json(const nlohmann::json& j, DatasetManifest& m) {
  try {
    m.format_version = j.at("format_version").get<std::uint32_t>();
    m.spec = j.at("scene").get<SceneSpec>();
    m.n_train = j.at("n_train").get<std::size_t>();
    m.n_test = j.at("n_test").get<std::size_t>();
    m.obs_dim = j.at("obs_dim").get<int>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.train_seed = j.at("train_seed").get<std::uint64_t>();
    m.test_seed = j.at("test_seed").get<std::uint64_t>();
    if (j.contains("global_seed")) m.global_seed = j["global_seed"].get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("manifest: ") + e.what());
  }
}

namespace {

std::vector<DatasetRecord> render_split(const SceneSpec& spec, std::size_t n, std::uint64_t seed) {
  const auto poses = sample_trajectory(spec, n, seed);
  std::vector<DatasetRecord> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::mt19937_64 rng(derive_seed(seed, {i}));
    out.push_back(make_record(render_observation(spec, poses[i], rng), poses[i]));
  }
  return out;
}

void write_records(const std::filesystem::path& path, const std::vector<DatasetRecord>& records) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open " + path.string() + " for writing");
  for (const auto& r : records) {
    for (float v : r.obs) binio::put<float>(f, v);
    for (float v : r.t) binio::put<float>(f, v);
    for (float v : r.q) binio::put<float>(f, v);
  }
}

std::vector<DatasetRecord> read_records(const std::filesystem::path& path, std::size_t count,
                                        int obs_dim) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path.string());
  const auto expected = count * static_cast<std::size_t>(obs_dim + 7) * sizeof(float);
  const auto actual = std::filesystem::file_size(path);
  if (actual != expected) {
    throw IoError(path.string() + ": size " + std::to_string(actual) + " bytes, manifest implies " +
                  std::to_string(expected));
  }
  std::vector<DatasetRecord> out(count);
  for (auto& r : out) {
    r.obs.resize(static_cast<std::size_t>(obs_dim));
    for (float& v : r.obs) v = binio::get<float>(f);
    for (float& v : r.t) v = binio::get<float>(f);
    for (float& v : r.q) v = binio::get<float>(f);
  }
  return out;
}

}  // namespace

Dataset generate_dataset(const SceneSpec& spec, std::size_t n_train, std::size_t n_test,
                         std::uint64_t seed) {
  validate(spec);
  if (n_train < 1 || n_test < 1) throw ValidationError("generate_dataset: counts must be >= 1");
  Dataset ds;
  ds.manifest.spec = spec;
  ds.manifest.n_train = n_train;
  ds.manifest.n_test = n_test;
  ds.manifest.obs_dim = spec.obs_dim();
  ds.manifest.seed = seed;
  ds.manifest.train_seed = seed;
  ds.manifest.test_seed = seed ^ kTestSeedXor;
  ds.train = render_split(spec, n_train, ds.manifest.train_seed);
  ds.test = render_split(spec, n_test, ds.manifest.test_seed);
  return ds;
}

void write_dataset(const std::filesystem::path& dir, const Dataset& ds) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  {
    std::ofstream f(dir / "manifest.json", std::ios::trunc);
    if (!f) throw IoError("cannot write manifest in " + dir.string());
    f << nlohmann::json(ds.manifest).dump(2) << '\n';
  }
  write_records(dir / "train.bin", ds.train);
  write_records(dir / "test.bin", ds.test);
}

Dataset read_dataset(const std::filesystem::path& dir) {
  std::ifstream f(dir / "manifest.json");
  if (!f) throw IoError("no manifest.json in " + dir.string());
  Dataset ds;
  try {
    ds.manifest = nlohmann::json::parse(f).get<DatasetManifest>();
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("manifest.json: ") + e.what());
  }
  if (ds.manifest.format_version != kDatasetFormatVersion) {
    throw IoError("unsupported dataset format_version " + std::to_string(ds.manifest.format_version));
  }
  if (ds.manifest.obs_dim < 1) throw IoError("manifest: obs_dim must be >= 1");
  ds.train = read_records(dir / "train.bin", ds.manifest.n_train, ds.manifest.obs_dim);
  ds.test = read_records(dir / "test.bin", ds.manifest.n_test, ds.manifest.obs_dim);
  return ds;
}

}  // namespace ambipose
