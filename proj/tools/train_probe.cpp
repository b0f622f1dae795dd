// Quick training experiment: train_probe scene n_train n_test epochs alpha M mode seed [eta] [wd]
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <string>

#include "ambipose/eval.hpp"
#include "ambipose/scenes.hpp"
#include "ambipose/trainer.hpp"

using namespace ambipose;

int main(int argc, char** argv) {
  if (argc < 9) {
    std::fprintf(stderr, "usage: train_probe scene n_train n_test epochs alpha M mode seed [eta] [wd] [lr0]\n");
    return 1;
  }
  SceneSpec spec = builtin_scene(argv[1]);
  if (argc > 9) spec.distinguishing_strength = std::atof(argv[9]);
  const auto ds = generate_dataset(spec, std::stoul(argv[2]), std::stoul(argv[3]), 11);
  TrainConfig cfg;
  cfg.epochs = std::atoi(argv[4]);
  cfg.alpha = std::atof(argv[5]);
  cfg.mc_samples = std::atoi(argv[6]);
  cfg.mode = train_mode_from_string(argv[7]);
  cfg.seed = std::stoull(argv[8]);
  if (argc > 10) cfg.weight_decay = std::atof(argv[10]);
  if (argc > 11) cfg.lr0 = std::atof(argv[11]);
  const auto t0 = std::chrono::steady_clock::now();
  auto res = train(ds, cfg, [&](const EpochStats& s) {
    if (s.epoch % 10 == 0 || s.epoch == cfg.epochs - 1)
      std::printf("epoch %d loss %.4f pe %.4f kl %.4f lr %.2e %.2fs\n", s.epoch, s.loss, s.prediction_error,
                  s.kl, s.lr, s.seconds);
    std::fflush(stdout);
  });
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::printf("train seconds %.1f\n", secs);
  const auto test = ds.test_samples();
  EvalOptions opt;
  opt.thresholds = default_thresholds(0.1, spec.scale());
  opt.seed = 5;
  const auto r = evaluate(res.model, spec, test, opt);
  std::printf("recall %.3f %.3f %.3f covered %.3f missed %.3f\n", r.recalls[0].recall, r.recalls[1].recall,
              r.recalls[2].recall, r.coverage.all_modes_covered, r.coverage.some_mode_missed);
  std::printf("per-mode:");
  for (double v : r.coverage.mean_per_mode) std::printf(" %.3f", v);
  std::printf("\n");
  // Top-mode mass fraction for disambiguation checks.
  const auto preds = predict_test_posteriors(res.model, test, 1000, 5);
  int concentrated = 0, spread = 0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    const auto cov = mode_coverage(preds[i].poses, oracle_modes(spec, test[i].pose), opt.thresholds[0]);
    if (cov[0] >= 0.5) ++concentrated;
    int n = 0;
    for (double c : cov) n += c >= 0.1;
    if (n >= 2) ++spread;
  }
  std::printf("true-mode>=0.5 %.3f  >=2 modes %.3f\n", double(concentrated) / test.size(), double(spread) / test.size());
}
