#pragma once

// Command implementations behind the ambipose executable. Each command takes
// fully resolved options; flag parsing and config layering live in run_cli.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ambipose/eval.hpp"
#include "ambipose/scenes.hpp"
#include "ambipose/trainer.hpp"
#include "ambipose/viz.hpp"

namespace ambipose::cli {

/// Seed fan-out from the single --seed knob. Training derives its init,
/// shuffle and sampling streams from the train seed internally.
std::uint64_t dataset_seed(std::uint64_t global);
std::uint64_t eval_seed(std::uint64_t global);
std::uint64_t sweep_run_seed(std::uint64_t global, double alpha, int run);

struct GenOptions {
  std::string scene = "round_table";
  std::optional<std::filesystem::path> spec_file;  // overrides `scene`
  std::optional<double> eta;                       // distinguishing strength override
  std::size_t n_train = 900;
  std::size_t n_test = 300;
  std::uint64_t seed = 0;
  std::filesystem::path out;
};

Dataset cmd_gen(const GenOptions& o, std::ostream& log);

struct TrainOptions {
  std::filesystem::path dataset;
  TrainConfig config;
  std::filesystem::path out;
  bool timing = true;
  bool quiet = false;
};

/// Writes model.ckpt, report.csv and config.json into `out`.
TrainResult cmd_train(const TrainOptions& o, std::ostream& log);

struct EvalCliOptions {
  std::filesystem::path dataset;
  std::filesystem::path checkpoint;
  std::filesystem::path out;
  double gamma = 0.1;
  std::size_t mc_samples = 1000;
  std::uint64_t seed = 0;
  // Translation thresholds are multiplied by the scene scale unless set.
  bool absolute_thresholds = false;
  std::vector<RecallThreshold> thresholds;  // empty: defaults
  int threads = 1;
};

/// Writes eval.json and eval.txt into `out`.
EvalReport cmd_eval(const EvalCliOptions& o, std::ostream& log);

struct VizOptions {
  std::filesystem::path dataset;
  std::filesystem::path checkpoint;
  std::size_t index = 0;
  std::filesystem::path heatmap;          // position map; orientation map gets an _orientation suffix
  int nx = 100, ny = 100;
  std::optional<PlanarBounds> bounds;     // default: scene xy bounds
  std::size_t mc_samples = 1000;
  std::uint64_t seed = 0;
  int cell_px = 4;
};

struct VizOutputs {
  std::filesystem::path position_image, position_csv, orientation_image, orientation_csv;
  Histogram2D position, orientation;
};

VizOutputs cmd_viz(const VizOptions& o, std::ostream& log);

struct BenchOptions {
  std::filesystem::path checkpoint;
  std::size_t mc_samples = 1000;
  int repeats = 100;
  std::uint64_t seed = 0;
};

/// Prints "<mean> ± <std> ms".
TimingStats cmd_bench(const BenchOptions& o, std::ostream& out);

struct SweepOptions {
  std::filesystem::path dataset;
  std::vector<double> alphas = {0.01, 0.20, 1.00};
  int runs = 10;
  TrainConfig config;
  double gamma = 0.1;
  std::size_t mc_samples = 1000;  // evaluation draws
  bool absolute_thresholds = false;
  std::filesystem::path out;
  int threads = 1;
};

struct SweepSummary {
  double alpha = 0.0;
  std::vector<double> recalls;  // indexed by run
  double min = 0, q1 = 0, median = 0, q3 = 0, max = 0;
};

/// Writes sweep.csv (alpha,run,recall rows then min/q1/median/q3/max rows).
std::vector<SweepSummary> cmd_sweep_alpha(const SweepOptions& o, std::ostream& log);

/// Linear-interpolation quantile of sorted data, q in [0, 1].
double quantile(std::vector<double> values, double q);

/// Parses argv, applies defaults < config file < flags and env overrides
/// (AMBIPOSE_OUT_DIR, AMBIPOSE_THREADS), runs the command and maps errors
/// to exit codes: 0 success, 1 validation error, 2 runtime failure.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace ambipose::cli
