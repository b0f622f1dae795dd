#include "ambipose/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

#include "ambipose/errors.hpp"
#include "ambipose/seeding.hpp"

namespace ambipose {

std::string_view to_string(TrainMode m) {
  switch (m) {
    case TrainMode::Wta:
      return "wta";
    case TrainMode::Elbo:
      return "elbo";
    case TrainMode::Ablation:
      return "ablation";
  }
  return "unknown";
}

TrainMode train_mode_from_string(const std::string& s) {
  if (s == "wta") return TrainMode::Wta;
  if (s == "elbo") return TrainMode::Elbo;
  if (s == "ablation") return TrainMode::Ablation;
  throw ValidationError("mode: expected one of wta, elbo, ablation (got '" + s + "')");
}

double TrainConfig::effective_beta() const {
  if (mode == TrainMode::Ablation) return 0.0;
  if (beta) return *beta;
  return mode == TrainMode::Elbo ? 1.0 : 0.01;
}

void validate(const TrainConfig& c) {
  std::vector<std::string> problems;
  if (!(c.alpha > 0.0 && c.alpha <= 1.0)) problems.emplace_back("alpha must lie in (0, 1]");
  if (c.beta && !(*c.beta >= 0.0)) problems.emplace_back("beta must be >= 0");
  if (!(c.weights.translation > 0.0)) problems.emplace_back("lambda_t must be > 0");
  if (!(c.weights.rotation > 0.0)) problems.emplace_back("lambda_r must be > 0");
  if (c.mc_samples < 1) problems.emplace_back("mc_samples must be >= 1");
  if (c.batch_size < 1) problems.emplace_back("batch_size must be >= 1");
  if (c.epochs < 1) problems.emplace_back("epochs must be >= 1");
  if (!(c.lr0 > 0.0)) problems.emplace_back("lr0 must be > 0");
  if (c.n_lr_decay < 1) problems.emplace_back("n_lr_decay must be >= 1");
  if (!(c.weight_decay >= 0.0)) problems.emplace_back("weight_decay must be >= 0");
  if (c.arch.latent_dim < 1) problems.emplace_back("latent_dim must be >= 1");
  if (c.arch.posemap_layers < 0) problems.emplace_back("n_layers must be >= 0");
  if (c.arch.posemap_width < 1) problems.emplace_back("posemap_width must be >= 1");
  for (int h : c.arch.encoder_hidden) {
    if (h < 1) {
      problems.emplace_back("encoder_hidden widths must be >= 1");
      break;
    }
  }
  if (!problems.empty()) {
    std::string msg = "invalid training config:";
    for (const auto& p : problems) msg += "\n  " + p;
    throw ValidationError(msg);
  }
}

void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = nlohmann::json{{"alpha", c.alpha},
                     {"beta", c.effective_beta()},
                     {"lambda_t", c.weights.translation},
                     {"lambda_r", c.weights.rotation},
                     {"mc_samples", c.mc_samples},
                     {"batch_size", c.batch_size},
                     {"epochs", c.epochs},
                     {"lr0", c.lr0},
                     {"n_lr_decay", c.n_lr_decay},
                     {"weight_decay", c.weight_decay},
                     {"mode", std::string(to_string(c.mode))},
                     {"seed", c.seed},
                     {"latent_dim", c.arch.latent_dim},
                     {"n_layers", c.arch.posemap_layers},
                     {"posemap_width", c.arch.posemap_width},
                     {"encoder_hidden", c.arch.encoder_hidden}};
}

void overlay_from_json(const nlohmann::json& j, TrainConfig& c) {
  static const std::vector<std::string> known = {
      "alpha", "beta", "lambda_t", "lambda_r", "mc_samples", "batch_size", "epochs", "lr0",
      "n_lr_decay", "weight_decay", "mode", "seed", "latent_dim", "n_layers", "posemap_width",
      "encoder_hidden", "dataset", "scene"};
  if (!j.is_object()) throw ValidationError("training config must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw ValidationError("training config: unknown field '" + key + "'");
    }
  }
  try {
    if (j.contains("alpha")) c.alpha = j["alpha"].get<double>();
    if (j.contains("beta")) c.beta = j["beta"].get<double>();
    if (j.contains("lambda_t")) c.weights.translation = j["lambda_t"].get<double>();
    if (j.contains("lambda_r")) c.weights.rotation = j["lambda_r"].get<double>();
    if (j.contains("mc_samples")) c.mc_samples = j["mc_samples"].get<int>();
    if (j.contains("batch_size")) c.batch_size = j["batch_size"].get<int>();
    if (j.contains("epochs")) c.epochs = j["epochs"].get<int>();
    if (j.contains("lr0")) c.lr0 = j["lr0"].get<double>();
    if (j.contains("n_lr_decay")) c.n_lr_decay = j["n_lr_decay"].get<int>();
    if (j.contains("weight_decay")) c.weight_decay = j["weight_decay"].get<double>();
    if (j.contains("mode")) c.mode = train_mode_from_string(j["mode"].get<std::string>());
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("latent_dim")) c.arch.latent_dim = j["latent_dim"].get<int>();
    if (j.contains("n_layers")) c.arch.posemap_layers = j["n_layers"].get<int>();
    if (j.contains("posemap_width")) c.arch.posemap_width = j["posemap_width"].get<int>();
    if (j.contains("encoder_hidden")) c.arch.encoder_hidden = j["encoder_hidden"].get<std::vector<int>>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("training config: ") + e.what());
  }
}

std::vector<std::size_t> select_winners(std::span<const double> distances, double alpha) {
  if (distances.empty()) throw ValidationError("select_winners: empty distance list");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw ValidationError("select_winners: alpha must lie in (0, 1]");
  const std::size_t M = distances.size();
  const auto m = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::floor(alpha * static_cast<double>(M))));
  std::vector<std::size_t> idx(M);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  if (m < M) {
    auto by_distance = [&](std::size_t a, std::size_t b) {
      return distances[a] < distances[b] || (distances[a] == distances[b] && a < b);
    };
    std::nth_element(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(m), idx.end(), by_distance);
    idx.resize(m);
    std::sort(idx.begin(), idx.end());
  }
  return idx;
}

namespace {

// Pose distance of one raw PoseMap column against the label.
double raw_distance(const SceneBounds& bounds, const Eigen::Ref<const Vec>& raw, const Pose& truth,
                    const PoseDistanceWeights& w) {
  return pose_distance(pose_from_raw(bounds, raw), truth, w);
}

// dL/draw for L = pose_distance(head(raw), truth).
Vec raw_distance_gradient(const SceneBounds& bounds, const Eigen::Ref<const Vec>& raw,
                          const Pose& truth, const PoseDistanceWeights& w) {
  const Pose p = pose_from_raw(bounds, raw);
  const PoseDistanceGradient g = pose_distance_gradient(p.t, p.R.matrix(), truth, w);
  Vec out(9);
  for (int i = 0; i < 3; ++i) {
    const double u = raw(i);
    if (std::abs(u) >= kTranslationLogitClamp) {
      out(i) = 0.0;
    } else {
      const double s = 1.0 / (1.0 + std::exp(-u));
      out(i) = g.dt(i) * (bounds.max(i) - bounds.min(i)) * s * (1.0 - s);
    }
  }
  out.segment<6>(3) = rotation_from_6d_vjp(recoverable_6d(raw), g.dR);
  return out;
}

std::vector<std::size_t> selection_for(const TrainConfig& cfg, std::span<const double> distances) {
  if (cfg.mode == TrainMode::Elbo) return select_winners(distances, 1.0);
  return select_winners(distances, cfg.alpha);
}

}  // namespace

LossTerms loss_on_latents(const PoseRegressor& m, const GaussianLatent& latent, const Mat& eps,
                          const Pose& truth, const TrainConfig& cfg) {
  LossTerms t;
  if (cfg.mode == TrainMode::Ablation || latent.is_point()) {
    const Vec u = m.posemap.predict(latent.mu());
    t.prediction_error = raw_distance(m.bounds, u, truth, cfg.weights);
    t.selected = 1;
    t.loss = t.prediction_error;
    return t;
  }
  const Mat U = m.posemap.predict(sample_latent_matrix(latent, eps));
  std::vector<double> dist(static_cast<std::size_t>(U.cols()));
  for (Eigen::Index j = 0; j < U.cols(); ++j) dist[j] = raw_distance(m.bounds, U.col(j), truth, cfg.weights);
  const auto winners = selection_for(cfg, dist);
  double sum = 0.0;
  for (auto j : winners) sum += dist[j];
  t.selected = winners.size();
  t.prediction_error = sum / static_cast<double>(winners.size());
  t.kl = kl_to_standard_normal(latent);
  t.loss = cfg.effective_beta() * t.kl + t.prediction_error;
  return t;
}

LossTerms per_image_loss(const PoseRegressor& m, const LabeledSample& sample, const TrainConfig& cfg,
                         std::uint64_t sample_seed, const GradientSink* sink) {
  const Eigen::Index d = m.latent_dim;
  const bool ablation = cfg.mode == TrainMode::Ablation || m.mode == RegressorMode::Ablation;
  const bool want_grad = sink != nullptr && sink->encoder != nullptr && sink->posemap != nullptr;

  ForwardResult enc = forward(m.encoder, sample.obs);
  const Vec raw = enc.y.col(0);
  const Vec mu = raw.head(d);
  LossTerms t;

  if (ablation) {
    ForwardResult pm = forward(m.posemap, mu);
    t.prediction_error = raw_distance(m.bounds, pm.y.col(0), sample.pose, cfg.weights);
    t.loss = t.prediction_error;
    t.selected = 1;
    if (want_grad) {
      const Mat dU = sink->scale * raw_distance_gradient(m.bounds, pm.y.col(0), sample.pose, cfg.weights);
      const Mat dz = backward(m.posemap, pm.cache, dU, *sink->posemap);
      Mat draw = Mat::Zero(2 * d, 1);
      draw.topRows(d) = dz;
      backward(m.encoder, enc.cache, draw, *sink->encoder);
    }
    return t;
  }

  const GaussianLatent latent(mu, raw.tail(d));
  const Vec sigma = latent.sigma();
  const Mat eps = standard_normal_noise(d, static_cast<std::size_t>(cfg.mc_samples), sample_seed);
  const Mat Z = sample_latent_matrix(latent, eps);
  const Mat U = m.posemap.predict(Z);

  std::vector<double> dist(static_cast<std::size_t>(U.cols()));
  for (Eigen::Index j = 0; j < U.cols(); ++j) {
    dist[j] = raw_distance(m.bounds, U.col(j), sample.pose, cfg.weights);
  }
  const auto winners = selection_for(cfg, dist);
  const auto n_sel = static_cast<Eigen::Index>(winners.size());
  double sum = 0.0;
  for (auto j : winners) sum += dist[j];
  const double beta = cfg.effective_beta();
  t.selected = winners.size();
  t.prediction_error = sum / static_cast<double>(n_sel);
  t.kl = kl_to_standard_normal(latent);
  t.loss = beta * t.kl + t.prediction_error;
  if (!want_grad) return t;

  // Selection is held fixed; only the winners carry gradient.
  Mat Zsel(d, n_sel);
  Mat eps_sel(d, n_sel);
  for (Eigen::Index c = 0; c < n_sel; ++c) {
    Zsel.col(c) = Z.col(static_cast<Eigen::Index>(winners[c]));
    eps_sel.col(c) = eps.col(static_cast<Eigen::Index>(winners[c]));
  }
  ForwardResult pm = forward(m.posemap, Zsel);
  const double w = sink->scale / static_cast<double>(n_sel);
  Mat dU(9, n_sel);
  for (Eigen::Index c = 0; c < n_sel; ++c) {
    dU.col(c) = w * raw_distance_gradient(m.bounds, pm.y.col(c), sample.pose, cfg.weights);
  }
  const Mat dZ = backward(m.posemap, pm.cache, dU, *sink->posemap);

  const KlGradient kg = kl_to_standard_normal_gradient(latent);
  const Vec d_mu = dZ.rowwise().sum() + sink->scale * beta * kg.d_mu;
  Vec d_lv = (dZ.array() * eps_sel.array()).rowwise().sum().matrix().cwiseProduct(0.5 * sigma) +
             sink->scale * beta * kg.d_log_var;
  for (Eigen::Index k = 0; k < d; ++k) {
    const double lv = raw(d + k);
    if (lv < kLogVarMin || lv > kLogVarMax) d_lv(k) = 0.0;
  }
  Mat draw(2 * d, 1);
  draw.topRows(d) = d_mu;
  draw.bottomRows(d) = d_lv;
  backward(m.encoder, enc.cache, draw, *sink->encoder);
  return t;
}

void write_report_csv(std::ostream& out, const TrainReport& report, bool include_timing) {
  out << "epoch,loss,prediction_error,kl,lr,seconds\n";
  std::ostringstream line;
  for (const auto& e : report.epochs) {
    line.str({});
    line << e.epoch << ',' << std::setprecision(17) << e.loss << ',' << e.prediction_error << ','
         << e.kl << ',' << e.lr << ',' << std::setprecision(6) << (include_timing ? e.seconds : 0.0)
         << '\n';
    out << line.str();
  }
}

TrainResult train(std::span<const LabeledSample> samples, const SceneSpec& spec,
                  const TrainConfig& cfg, const EpochCallback& on_epoch) {
  validate(cfg);
  if (samples.empty()) throw ValidationError("train: dataset is empty");
  const auto obs_dim = static_cast<int>(samples.front().obs.size());

  const RegressorMode rmode =
      cfg.mode == TrainMode::Ablation ? RegressorMode::Ablation : RegressorMode::Variational;
  TrainResult r{make_regressor(obs_dim, cfg.arch, spec.bounds, rmode,
                               derive_seed(cfg.seed, {seed_stream::kInit}), spec.name),
                {}, {}, {}};
  r.encoder_state = AdamState::for_network(r.model.encoder, cfg.lr0, cfg.weight_decay);
  r.posemap_state = AdamState::for_network(r.model.posemap, cfg.lr0, 0.0);

  GradientTape enc_tape = GradientTape::zeros_like(r.model.encoder);
  GradientTape pm_tape = GradientTape::zeros_like(r.model.posemap);

  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto batch = static_cast<std::size_t>(cfg.batch_size);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    const double lr = lr_schedule(epoch, cfg.lr0, cfg.n_lr_decay);
    r.encoder_state.lr = lr;
    r.posemap_state.lr = lr;

    std::mt19937_64 shuffle_rng(derive_seed(cfg.seed, {seed_stream::kShuffle, static_cast<std::uint64_t>(epoch)}));
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    EpochStats stats;
    stats.epoch = epoch;
    stats.lr = lr;
    std::size_t batch_index = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += batch, ++batch_index) {
      const std::size_t end = std::min(order.size(), begin + batch);
      enc_tape.zero();
      pm_tape.zero();
      const GradientSink sink{&enc_tape, &pm_tape, 1.0 / static_cast<double>(end - begin)};
      for (std::size_t b = begin; b < end; ++b) {
        const std::size_t i = order[b];
        const std::uint64_t s = derive_seed(
            cfg.seed, {seed_stream::kSampling, static_cast<std::uint64_t>(epoch), i});
        LossTerms lt;
        try {
          lt = per_image_loss(r.model, samples[i], cfg, s, &sink);
        } catch (const NumericalError& e) {
          std::ostringstream msg;
          msg << "epoch " << epoch << ", batch " << batch_index << " (image " << i << "): " << e.what();
          throw NumericalError(msg.str());
        }
        if (!std::isfinite(lt.loss)) {
          std::ostringstream msg;
          msg << "non-finite loss at epoch " << epoch << ", batch " << batch_index << " (image " << i
              << "): loss=" << lt.loss << " prediction_error=" << lt.prediction_error
              << " kl=" << lt.kl;
          throw NumericalError(msg.str());
        }
        stats.loss += lt.loss;
        stats.prediction_error += lt.prediction_error;
        stats.kl += lt.kl;
      }
      adam_step(r.model.encoder, enc_tape, r.encoder_state);
      adam_step(r.model.posemap, pm_tape, r.posemap_state);
    }
    const auto n = static_cast<double>(samples.size());
    stats.loss /= n;
    stats.prediction_error /= n;
    stats.kl /= n;
    stats.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    r.report.epochs.push_back(stats);
    if (on_epoch) on_epoch(stats);
  }
  return r;
}

TrainResult train(const Dataset& dataset, const TrainConfig& cfg, const EpochCallback& on_epoch) {
  const auto samples = dataset.train_samples();
  return train(samples, dataset.manifest.spec, cfg, on_epoch);
}

}  // namespace ambipose
