#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ambipose/diffnet.hpp"
#include "ambipose/geometry.hpp"
#include "ambipose/model.hpp"
#include "ambipose/scenes.hpp"

namespace ambipose {

enum class TrainMode : std::uint8_t { Wta = 0, Elbo = 1, Ablation = 2 };

std::string_view to_string(TrainMode m);
TrainMode train_mode_from_string(const std::string& s);

struct TrainConfig {
  double alpha = 0.20;
  // KL weight. Unset means 0.01 for wta and 1.0 for elbo; ablation has no KL.
  std::optional<double> beta;
  PoseDistanceWeights weights{5.0, 2.0};
  int mc_samples = 1000;
  int batch_size = 4;
  int epochs = 500;
  double lr0 = 1e-4;
  int n_lr_decay = 50;
  // L2 penalty on encoder weights.
  double weight_decay = 0.0;
  TrainMode mode = TrainMode::Wta;
  std::uint64_t seed = 0;
  ArchConfig arch;

  double effective_beta() const;
};

/// Throws ValidationError listing every offending field.
void validate(const TrainConfig& cfg);

void to_json(nlohmann::json& j, const TrainConfig& c);
/// Overlays the keys present in `j` onto `c`.
void overlay_from_json(const nlohmann::json& j, TrainConfig& c);

/// Indices of the max(1, floor(alpha * M)) smallest distances, ties broken by
/// lower index, returned in ascending index order.
std::vector<std::size_t> select_winners(std::span<const double> distances, double alpha);

struct LossTerms {
  double loss = 0.0;
  double prediction_error = 0.0;  // mean pose distance over the selected samples
  double kl = 0.0;
  std::size_t selected = 0;
};

/// Gradient sinks for per_image_loss; contributions are multiplied by `scale`
/// and added to the tapes.
struct GradientSink {
  GradientTape* encoder = nullptr;
  GradientTape* posemap = nullptr;
  double scale = 1.0;
};

/// Single-image objective. `sample_seed` drives the Monte Carlo draw.
LossTerms per_image_loss(const PoseRegressor& m, const LabeledSample& sample, const TrainConfig& cfg,
                         std::uint64_t sample_seed, const GradientSink* sink = nullptr);

/// Loss of a fixed latent sample set (no redraw); used to compare objectives on
/// identical samples.
LossTerms loss_on_latents(const PoseRegressor& m, const GaussianLatent& latent, const Mat& eps,
                          const Pose& truth, const TrainConfig& cfg);

struct EpochStats {
  int epoch = 0;
  double loss = 0.0;
  double prediction_error = 0.0;
  double kl = 0.0;
  double lr = 0.0;
  double seconds = 0.0;
};

struct TrainReport {
  std::vector<EpochStats> epochs;
  std::string checkpoint_path;
};

/// CSV columns: epoch,loss,prediction_error,kl,lr,seconds. With
/// include_timing = false the seconds column is written as 0.
void write_report_csv(std::ostream& out, const TrainReport& report, bool include_timing = true);

struct TrainResult {
  PoseRegressor model;
  TrainReport report;
  AdamState encoder_state;
  AdamState posemap_state;
};

using EpochCallback = std::function<void(const EpochStats&)>;

/// Deterministic given (dataset, cfg). Throws NumericalError on a non-finite
/// loss with the epoch, batch and term values.
TrainResult train(const Dataset& dataset, const TrainConfig& cfg, const EpochCallback& on_epoch = {});
TrainResult train(std::span<const LabeledSample> samples, const SceneSpec& spec,
                  const TrainConfig& cfg, const EpochCallback& on_epoch = {});

}  // namespace ambipose
