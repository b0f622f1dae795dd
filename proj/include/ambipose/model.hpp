#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "ambipose/diffnet.hpp"
#include "ambipose/geometry.hpp"

namespace ambipose {

inline constexpr double kLogVarMin = -20.0;
inline constexpr double kLogVarMax = 20.0;

/// Diagonal Gaussian q(z|x) = N(mu, diag(exp(log_var))).
class GaussianLatent {
 public:
  GaussianLatent(Vec mu, Vec log_var);
  /// Degenerate latent with sigma treated as zero (ablation mode).
  static GaussianLatent point(Vec mu);

  const Vec& mu() const { return mu_; }
  const Vec& log_var() const { return log_var_; }
  bool is_point() const { return point_; }
  Eigen::Index dim() const { return mu_.size(); }
  Vec sigma() const;

 private:
  Vec mu_;
  Vec log_var_;
  bool point_ = false;
};

using LatentSample = Vec;

struct PoseSampleSet {
  std::vector<Pose> poses;
  std::uint64_t seed = 0;

  std::size_t size() const { return poses.size(); }
};

/// Per-axis translation range; decoded translations land strictly inside.
struct SceneBounds {
  Vec3 min = Vec3::Constant(-1.0);
  Vec3 max = Vec3::Constant(1.0);
};

void validate(const SceneBounds& b);

enum class RegressorMode : std::uint8_t { Variational = 0, Ablation = 1 };

struct ArchConfig {
  int latent_dim = 16;
  int posemap_layers = 3;  // hidden 128 -> 128 blocks after the first 128 layer
  int posemap_width = 128;
  std::vector<int> encoder_hidden = {256, 256};
};

void validate(const ArchConfig& a);

/// Encoder (obs -> mu, log_var) and PoseMap (z -> raw 9-vector: three
/// translation logits then a 6D rotation) plus the metric head.
struct PoseRegressor {
  Network encoder;
  Network posemap;
  SceneBounds bounds;
  int latent_dim = 16;
  RegressorMode mode = RegressorMode::Variational;
  std::string scene_id;

  Eigen::Index obs_dim() const { return encoder.input_dim(); }
};

PoseRegressor make_regressor(int obs_dim, const ArchConfig& arch, const SceneBounds& bounds,
                             RegressorMode mode, std::uint64_t seed, std::string scene_id = {});

GaussianLatent encode(const PoseRegressor& m, const Vec& obs);

/// Splits raw encoder output into a latent (clamping log_var, honoring mode).
GaussianLatent latent_from_encoder_output(const PoseRegressor& m, const Vec& raw);

/// Standard-normal noise for M samples (d x M), one seeded stream.
Mat standard_normal_noise(Eigen::Index d, std::size_t M, std::uint64_t seed);

/// z_j = mu + sigma * eps_j as columns of a d x M matrix.
Mat sample_latent_matrix(const GaussianLatent& g, const Mat& eps);
std::vector<LatentSample> sample_latent(const GaussianLatent& g, std::size_t M, std::uint64_t seed);

inline constexpr double kTranslationLogitClamp = 30.0;

/// Metric head applied to one raw PoseMap output column. Retries once with a
/// 1e-8 nudge on degenerate 6D input; throws RecoveryError if that fails.
Pose pose_from_raw(const SceneBounds& bounds, const Eigen::Ref<const Vec>& raw);

/// The 6D block actually used by pose_from_raw (after any degeneracy nudge).
Vec6 recoverable_6d(const Eigen::Ref<const Vec>& raw);

Pose decode(const PoseRegressor& m, const LatentSample& z);
std::vector<Pose> decode_batch(const PoseRegressor& m, const Mat& Z);

PoseSampleSet predict_posterior(const PoseRegressor& m, const Vec& obs, std::size_t M,
                                std::uint64_t seed);

/// 0.5 * sum(mu^2 + sigma^2 - 1 - log sigma^2)
double kl_to_standard_normal(const GaussianLatent& g);
struct KlGradient {
  Vec d_mu;
  Vec d_log_var;
};
KlGradient kl_to_standard_normal_gradient(const GaussianLatent& g);

// Model checkpoint: diffnet header, "MODL" section, both networks, optional
// optimizer states for encoder then posemap.
void save_regressor(std::ostream& out, const PoseRegressor& m, const AdamState* encoder_state = nullptr,
                    const AdamState* posemap_state = nullptr);
void save_regressor(const std::filesystem::path& path, const PoseRegressor& m,
                    const AdamState* encoder_state = nullptr,
                    const AdamState* posemap_state = nullptr);
PoseRegressor load_regressor(std::istream& in);
PoseRegressor load_regressor(const std::filesystem::path& path);

}  // namespace ambipose
