#include "ambipose/model.hpp"

#include <cmath>
#include <fstream>
#include <random>

#include "ambipose/errors.hpp"
#include "ambipose/seeding.hpp"
#include "binary_io.hpp"

namespace ambipose {

namespace {

constexpr char kModelTag[4] = {'M', 'O', 'D', 'L'};
constexpr double kDegeneracyNudge = 1e-8;

bool recoverable(const Vec6& r) {
  const Vec3 u = r.head<3>();
  const Vec3 v = r.tail<3>();
  const double nu = u.norm();
  if (!std::isfinite(nu) || nu < 1e-12) return false;
  const Vec3 a1 = u / nu;
  const double nw = (v - a1.dot(v) * a1).norm();
  return std::isfinite(nw) && nw >= 1e-12 * std::max(1.0, v.norm());
}

}  // namespace

GaussianLatent::GaussianLatent(Vec mu, Vec log_var) : mu_(std::move(mu)), log_var_(std::move(log_var)) {
  if (mu_.size() != log_var_.size()) throw ShapeError("latent mu/log_var length mismatch");
  if (!mu_.allFinite() || log_var_.hasNaN()) throw NumericalError("latent parameters not finite");
  log_var_ = log_var_.cwiseMax(kLogVarMin).cwiseMin(kLogVarMax);
}

GaussianLatent GaussianLatent::point(Vec mu) {
  const auto d = mu.size();
  GaussianLatent g(std::move(mu), Vec::Constant(d, kLogVarMin));
  g.point_ = true;
  return g;
}

Vec GaussianLatent::sigma() const {
  if (point_) return Vec::Zero(mu_.size());
  return (0.5 * log_var_.array()).exp().matrix();
}

void validate(const SceneBounds& b) {
  if (!b.min.allFinite() || !b.max.allFinite()) throw ValidationError("scene bounds not finite");
  for (int i = 0; i < 3; ++i) {
    if (!(b.min(i) < b.max(i))) throw ValidationError("scene bounds need min < max on every axis");
  }
}

void validate(const ArchConfig& a) {
  if (a.latent_dim < 1) throw ValidationError("latent_dim must be >= 1");
  if (a.posemap_layers < 0) throw ValidationError("posemap_layers must be >= 0");
  if (a.posemap_width < 1) throw ValidationError("posemap_width must be >= 1");
  for (int h : a.encoder_hidden) {
    if (h < 1) throw ValidationError("encoder hidden widths must be >= 1");
  }
}

PoseRegressor make_regressor(int obs_dim, const ArchConfig& arch, const SceneBounds& bounds,
                             RegressorMode mode, std::uint64_t seed, std::string scene_id) {
  validate(arch);
  validate(bounds);
  if (obs_dim < 1) throw ValidationError("obs_dim must be >= 1");

  std::vector<LayerSpec> enc;
  for (int h : arch.encoder_hidden) enc.push_back({h, Activation::Relu});
  enc.push_back({2 * arch.latent_dim, Activation::Linear});

  std::vector<LayerSpec> pm;
  pm.push_back({arch.posemap_width, Activation::Relu});
  for (int i = 0; i < arch.posemap_layers; ++i) pm.push_back({arch.posemap_width, Activation::Relu});
  pm.push_back({9, Activation::Linear});

  PoseRegressor m;
  m.encoder = Network(obs_dim, enc, derive_seed(seed, {1}));
  m.posemap = Network(arch.latent_dim, pm, derive_seed(seed, {2}));
  m.bounds = bounds;
  m.latent_dim = arch.latent_dim;
  m.mode = mode;
  m.scene_id = std::move(scene_id);
  return m;
}

GaussianLatent latent_from_encoder_output(const PoseRegressor& m, const Vec& raw) {
  const Eigen::Index d = m.latent_dim;
  if (raw.size() != 2 * d) throw ShapeError("encoder output must have 2*latent_dim entries");
  if (m.mode == RegressorMode::Ablation) return GaussianLatent::point(raw.head(d));
  return GaussianLatent(raw.head(d), raw.tail(d));
}

GaussianLatent encode(const PoseRegressor& m, const Vec& obs) {
  if (obs.size() != m.encoder.input_dim()) {
    throw ShapeError("encode: observation has " + std::to_string(obs.size()) +
                     " entries, encoder expects " + std::to_string(m.encoder.input_dim()));
  }
  return latent_from_encoder_output(m, m.encoder.predict(obs));
}

Mat standard_normal_noise(Eigen::Index d, std::size_t M, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Mat eps(d, static_cast<Eigen::Index>(M));
  for (Eigen::Index j = 0; j < eps.cols(); ++j)
    for (Eigen::Index k = 0; k < d; ++k) eps(k, j) = normal(rng);
  return eps;
}

Mat sample_latent_matrix(const GaussianLatent& g, const Mat& eps) {
  if (eps.rows() != g.dim()) throw ShapeError("noise rows must equal latent dimension");
  if (g.is_point()) return g.mu().replicate(1, eps.cols());
  Mat Z = eps.array().colwise() * g.sigma().array();
  Z.colwise() += g.mu();
  return Z;
}

std::vector<LatentSample> sample_latent(const GaussianLatent& g, std::size_t M, std::uint64_t seed) {
  if (M < 1) throw ValidationError("sample_latent: M must be >= 1");
  const Mat Z = sample_latent_matrix(g, standard_normal_noise(g.dim(), M, seed));
  std::vector<LatentSample> out;
  out.reserve(M);
  for (Eigen::Index j = 0; j < Z.cols(); ++j) out.emplace_back(Z.col(j));
  return out;
}

Vec6 recoverable_6d(const Eigen::Ref<const Vec>& raw) {
  Vec6 r = raw.segment<6>(3);
  if (recoverable(r)) return r;
  if (!r.allFinite()) throw RecoveryError("6D rotation output is not finite");
  Vec3 u = r.head<3>();
  if (u.norm() < 1e-12) {
    Eigen::Index k;
    u.cwiseAbs().maxCoeff(&k);
    u(k) += kDegeneracyNudge;
    r.head<3>() = u;
  }
  if (!recoverable(r)) {
    const Vec3 a1 = r.head<3>().normalized();
    Eigen::Index k;
    a1.cwiseAbs().minCoeff(&k);
    r(3 + k) += kDegeneracyNudge;
  }
  if (!recoverable(r)) throw RecoveryError("6D rotation output degenerate after perturbation");
  return r;
}

Pose pose_from_raw(const SceneBounds& bounds, const Eigen::Ref<const Vec>& raw) {
  if (raw.size() != 9) throw ShapeError("pose head expects 9 raw outputs");
  Pose p;
  for (int i = 0; i < 3; ++i) {
    const double u = std::clamp(raw(i), -kTranslationLogitClamp, kTranslationLogitClamp);
    const double s = 1.0 / (1.0 + std::exp(-u));
    p.t(i) = bounds.min(i) + s * (bounds.max(i) - bounds.min(i));
  }
  p.R = rotation_from_6d(recoverable_6d(raw));
  return p;
}

Pose decode(const PoseRegressor& m, const LatentSample& z) {
  if (z.size() != m.latent_dim) throw ShapeError("decode: latent dimension mismatch");
  if (!z.allFinite()) throw ValidationError("decode: latent sample not finite");
  return pose_from_raw(m.bounds, m.posemap.predict(z));
}

std::vector<Pose> decode_batch(const PoseRegressor& m, const Mat& Z) {
  if (Z.rows() != m.latent_dim) throw ShapeError("decode: latent dimension mismatch");
  const Mat U = m.posemap.predict(Z);
  std::vector<Pose> poses;
  poses.reserve(static_cast<std::size_t>(U.cols()));
  for (Eigen::Index j = 0; j < U.cols(); ++j) poses.push_back(pose_from_raw(m.bounds, U.col(j)));
  return poses;
}

PoseSampleSet predict_posterior(const PoseRegressor& m, const Vec& obs, std::size_t M,
                                std::uint64_t seed) {
  if (M < 1) throw ValidationError("predict_posterior: M must be >= 1");
  const GaussianLatent g = encode(m, obs);
  PoseSampleSet out;
  out.seed = seed;
  if (g.is_point()) {
    // sigma = 0: every sample is the decoded mean.
    out.poses.assign(M, decode(m, g.mu()));
    return out;
  }
  out.poses = decode_batch(m, sample_latent_matrix(g, standard_normal_noise(g.dim(), M, seed)));
  return out;
}

double kl_to_standard_normal(const GaussianLatent& g) {
  const auto& mu = g.mu().array();
  const auto& lv = g.log_var().array();
  return 0.5 * (mu.square() + lv.exp() - 1.0 - lv).sum();
}

KlGradient kl_to_standard_normal_gradient(const GaussianLatent& g) {
  return {g.mu(), (0.5 * (g.log_var().array().exp() - 1.0)).matrix()};
}

// ---------------------------------------------------------------------------
// Checkpoints

void save_regressor(std::ostream& out, const PoseRegressor& m, const AdamState* enc_state,
                    const AdamState* pm_state) {
  using namespace binio;
  put_tag(out, kCheckpointMagic);
  put<std::uint32_t>(out, kCheckpointVersion);
  put_tag(out, kModelTag);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(m.latent_dim));
  put<std::uint8_t>(out, static_cast<std::uint8_t>(m.mode));
  for (int i = 0; i < 3; ++i) put<double>(out, m.bounds.min(i));
  for (int i = 0; i < 3; ++i) put<double>(out, m.bounds.max(i));
  put_string(out, m.scene_id);
  write_network_body(out, m.encoder);
  write_network_body(out, m.posemap);
  const bool has_state = enc_state != nullptr && pm_state != nullptr;
  put<std::uint8_t>(out, has_state ? 1 : 0);
  if (has_state) {
    write_adam_body(out, *enc_state);
    write_adam_body(out, *pm_state);
  }
}

void save_regressor(const std::filesystem::path& path, const PoseRegressor& m,
                    const AdamState* enc_state, const AdamState* pm_state) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open " + path.string() + " for writing");
  save_regressor(f, m, enc_state, pm_state);
}

PoseRegressor load_regressor(std::istream& in) {
  using namespace binio;
  expect_tag(in, kCheckpointMagic, "VAPR");
  const auto version = get<std::uint32_t>(in);
  if (version != kCheckpointVersion) {
    throw IoError("unsupported checkpoint version " + std::to_string(version));
  }
  expect_tag(in, kModelTag, "MODL");
  PoseRegressor m;
  m.latent_dim = static_cast<int>(get<std::uint32_t>(in));
  const auto mode = get<std::uint8_t>(in);
  if (mode > 1) throw IoError("checkpoint: unknown regressor mode");
  m.mode = static_cast<RegressorMode>(mode);
  for (int i = 0; i < 3; ++i) m.bounds.min(i) = get<double>(in);
  for (int i = 0; i < 3; ++i) m.bounds.max(i) = get<double>(in);
  m.scene_id = get_string(in);
  m.encoder = read_network_body(in);
  m.posemap = read_network_body(in);
  if (m.encoder.output_dim() != 2 * m.latent_dim || m.posemap.input_dim() != m.latent_dim ||
      m.posemap.output_dim() != 9) {
    throw IoError("checkpoint: network shapes inconsistent with latent dimension");
  }
  validate(m.bounds);
  // Optimizer state, if present, is only needed to resume training.
  return m;
}

PoseRegressor load_regressor(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open checkpoint " + path.string());
  return load_regressor(f);
}

}  // namespace ambipose
