#include "ambipose/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "ambipose/errors.hpp"
#include "ambipose/seeding.hpp"

namespace ambipose::cli {

namespace fs = std::filesystem;

std::uint64_t dataset_seed(std::uint64_t global) { return derive_seed(global, {seed_stream::kDataset}); }
std::uint64_t eval_seed(std::uint64_t global) { return derive_seed(global, {seed_stream::kEval}); }

std::uint64_t sweep_run_seed(std::uint64_t global, double alpha, int run) {
  const auto key = static_cast<std::uint64_t>(std::llround(alpha * 1e6));
  return derive_seed(global, {key, static_cast<std::uint64_t>(run)});
}

namespace {

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
}

template <class Fn>
void write_file(const fs::path& path, Fn&& fn) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path.string() + " for writing");
  fn(f);
  if (!f) throw IoError("failed writing " + path.string());
}

nlohmann::json read_json(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw ValidationError("cannot read config " + path.string());
  try {
    return nlohmann::json::parse(f);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

std::vector<RecallThreshold> resolve_thresholds(const std::vector<RecallThreshold>& given, double gamma,
                                                bool absolute, const SceneSpec& spec) {
  std::vector<RecallThreshold> th = given.empty() ? default_thresholds(gamma) : given;
  for (auto& t : th) {
    t.gamma = gamma;
    if (!absolute) t.trans_max *= spec.scale();
  }
  return th;
}

void check_compatible(const PoseRegressor& m, const Dataset& ds) {
  if (m.obs_dim() != ds.manifest.obs_dim) {
    throw ValidationError("checkpoint obs_dim " + std::to_string(m.obs_dim()) + " does not match dataset manifest obs_dim " +
                          std::to_string(ds.manifest.obs_dim));
  }
}

}  // namespace

Dataset cmd_gen(const GenOptions& o, std::ostream& log) {
  SceneSpec spec = o.spec_file ? read_json(*o.spec_file).get<SceneSpec>() : builtin_scene(o.scene);
  if (o.eta) spec.distinguishing_strength = *o.eta;
  Dataset ds = generate_dataset(spec, o.n_train, o.n_test, dataset_seed(o.seed));
  ds.manifest.global_seed = o.seed;
  write_dataset(o.out, ds);
  log << "dataset " << o.out.string() << ": scene " << spec.name << " (k=" << spec.symmetry_order
      << ", eta=" << spec.distinguishing_strength << "), " << ds.manifest.n_train << " train / "
      << ds.manifest.n_test << " test, obs_dim " << ds.manifest.obs_dim << ", seed " << o.seed << '\n';
  return ds;
}

TrainResult cmd_train(const TrainOptions& o, std::ostream& log) {
  validate(o.config);
  const Dataset ds = read_dataset(o.dataset);
  ensure_dir(o.out);
  TrainResult r = train(ds, o.config, [&](const EpochStats& s) {
    if (o.quiet) return;
    if (s.epoch % 10 == 0 || s.epoch + 1 == o.config.epochs) {
      log << "epoch " << s.epoch << " loss " << s.loss << " error " << s.prediction_error << " kl " << s.kl
          << " lr " << s.lr << '\n';
    }
  });
  const fs::path ckpt = o.out / "model.ckpt";
  save_regressor(ckpt, r.model, &r.encoder_state, &r.posemap_state);
  r.report.checkpoint_path = ckpt.string();
  write_file(o.out / "report.csv", [&](std::ostream& f) { write_report_csv(f, r.report, o.timing); });
  nlohmann::json cfg;
  to_json(cfg, o.config);
  cfg["dataset"] = o.dataset.string();
  write_file(o.out / "config.json", [&](std::ostream& f) { f << cfg.dump(2) << '\n'; });
  log << "wrote " << ckpt.string() << '\n';
  return r;
}

EvalReport cmd_eval(const EvalCliOptions& o, std::ostream& log) {
  const Dataset ds = read_dataset(o.dataset);
  const PoseRegressor m = load_regressor(o.checkpoint);
  check_compatible(m, ds);
  EvalOptions opt;
  opt.thresholds = resolve_thresholds(o.thresholds, o.gamma, o.absolute_thresholds, ds.manifest.spec);
  opt.mc_samples = o.mc_samples;
  opt.seed = o.seed;
  opt.threads = o.threads;
  const auto queries = ds.test_samples();
  const EvalReport r = evaluate(m, ds.manifest.spec, queries, opt);
  ensure_dir(o.out);
  write_file(o.out / "eval.json", [&](std::ostream& f) { f << to_json(r).dump(2) << '\n'; });
  write_file(o.out / "eval.txt", [&](std::ostream& f) { write_eval_table(f, r); });
  write_eval_table(log, r);
  return r;
}

VizOutputs cmd_viz(const VizOptions& o, std::ostream& log) {
  const Dataset ds = read_dataset(o.dataset);
  const PoseRegressor m = load_regressor(o.checkpoint);
  check_compatible(m, ds);
  if (o.index >= ds.test.size()) {
    throw ValidationError("query index " + std::to_string(o.index) + " out of range (test split has " +
                          std::to_string(ds.test.size()) + " queries)");
  }
  const auto query = ds.test[o.index].to_sample();
  const auto set = predict_posterior(m, query.obs, o.mc_samples, derive_seed(o.seed, {seed_stream::kEval, o.index}));
  const auto& sb = ds.manifest.spec.bounds;
  const PlanarBounds pb = o.bounds.value_or(PlanarBounds{sb.min.x(), sb.max.x(), sb.min.y(), sb.max.y()});

  VizOutputs out;
  out.position = position_heatmap(set.poses, pb, o.nx, o.ny);
  out.orientation = orientation_heatmap(set.poses, o.nx, o.ny);
  if (o.heatmap.has_parent_path()) ensure_dir(o.heatmap.parent_path());
  out.position_image = o.heatmap;
  out.position_csv = fs::path(o.heatmap).replace_extension(".csv");
  out.orientation_image = o.heatmap.parent_path() / (o.heatmap.stem().string() + "_orientation.ppm");
  out.orientation_csv = fs::path(out.orientation_image).replace_extension(".csv");
  emit_heatmap(out.position, out.position_image, o.cell_px);
  emit_heatmap(out.orientation, out.orientation_image, o.cell_px);
  log << "wrote " << out.position_image.string() << " (" << out.position.clamped << " clamped) and "
      << out.orientation_image.string() << '\n';
  return out;
}

TimingStats cmd_bench(const BenchOptions& o, std::ostream& out) {
  const PoseRegressor m = load_regressor(o.checkpoint);
  // Any fixed input exercises the same arithmetic.
  const Vec obs = Vec::Constant(m.obs_dim(), 0.5);
  const TimingStats t = benchmark_inference(m, obs, o.mc_samples, o.repeats, o.seed);
  out << std::fixed << std::setprecision(3) << t.mean_ms << " ± " << t.std_ms << " ms\n";
  out.unsetf(std::ios::floatfield);
  return t;
}

double quantile(std::vector<double> v, double q) {
  if (v.empty()) throw ValidationError("quantile of an empty list");
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

std::vector<SweepSummary> cmd_sweep_alpha(const SweepOptions& o, std::ostream& log) {
  if (o.runs < 1) throw ValidationError("sweep: runs must be >= 1");
  if (o.alphas.empty()) throw ValidationError("sweep: alpha list is empty");
  for (double a : o.alphas) {
    TrainConfig c = o.config;
    c.alpha = a;
    validate(c);
  }
  const Dataset ds = read_dataset(o.dataset);
  const auto train_set = ds.train_samples();
  const auto queries = ds.test_samples();
  const auto& spec = ds.manifest.spec;
  const auto th = resolve_thresholds({}, o.gamma, o.absolute_thresholds, spec).front();

  struct Job {
    std::size_t a;
    int run;
  };
  std::vector<Job> jobs;
  for (std::size_t a = 0; a < o.alphas.size(); ++a)
    for (int r = 0; r < o.runs; ++r) jobs.push_back({a, r});

  std::vector<SweepSummary> out(o.alphas.size());
  for (std::size_t a = 0; a < o.alphas.size(); ++a) {
    out[a].alpha = o.alphas[a];
    out[a].recalls.assign(static_cast<std::size_t>(o.runs), 0.0);
  }
  std::mutex mu;
  std::size_t next = 0;
  std::exception_ptr failure;
  auto worker = [&] {
    for (;;) {
      Job job;
      {
        std::lock_guard lock(mu);
        if (next >= jobs.size() || failure) return;
        job = jobs[next++];
      }
      try {
        TrainConfig c = o.config;
        c.alpha = o.alphas[job.a];
        c.seed = sweep_run_seed(o.config.seed, c.alpha, job.run);
        const auto res = train(train_set, spec, c);
        const auto preds = predict_test_posteriors(res.model, queries, o.mc_samples, eval_seed(c.seed));
        std::vector<Pose> truths;
        for (const auto& q : queries) truths.push_back(q.pose);
        const double rec = recall(preds, truths, th);
        std::lock_guard lock(mu);
        out[job.a].recalls[static_cast<std::size_t>(job.run)] = rec;
        log << "alpha " << c.alpha << " run " << job.run << " recall " << rec << '\n';
      } catch (...) {
        std::lock_guard lock(mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const int n_threads = std::max(1, std::min<int>(o.threads, static_cast<int>(jobs.size())));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  for (auto& s : out) {
    s.min = quantile(s.recalls, 0.0);
    s.q1 = quantile(s.recalls, 0.25);
    s.median = quantile(s.recalls, 0.5);
    s.q3 = quantile(s.recalls, 0.75);
    s.max = quantile(s.recalls, 1.0);
  }
  ensure_dir(o.out);
  write_file(o.out / "sweep.csv", [&](std::ostream& f) {
    f << "alpha,run,recall\n" << std::setprecision(17);
    for (const auto& s : out)
      for (std::size_t r = 0; r < s.recalls.size(); ++r) f << s.alpha << ',' << r << ',' << s.recalls[r] << '\n';
    for (const auto& s : out) {
      f << s.alpha << ",min," << s.min << '\n' << s.alpha << ",q1," << s.q1 << '\n';
      f << s.alpha << ",median," << s.median << '\n' << s.alpha << ",q3," << s.q3 << '\n';
      f << s.alpha << ",max," << s.max << '\n';
    }
  });
  return out;
}

// ---------------------------------------------------------------------------
// Argument parsing

namespace {

std::string env_or(const char* name, const std::string& fallback) {
  const char* v = std::getenv(name);
  return v && *v ? std::string(v) : fallback;
}

int env_threads() {
  const char* v = std::getenv("AMBIPOSE_THREADS");
  if (!v || !*v) return 1;
  try {
    return std::max(1, std::stoi(v));
  } catch (const std::exception&) {
    throw ValidationError(std::string("AMBIPOSE_THREADS must be an integer, got '") + v + "'");
  }
}

// Training flags shared by train and sweep-alpha. Values land in `raw` and
// are applied only when the flag was given.
struct TrainFlags {
  std::string config_path;
  double alpha = 0, beta = 0, lr0 = 0, weight_decay = 0, lambda_t = 0, lambda_r = 0;
  int epochs = 0, mc_samples = 0, batch_size = 0, n_lr_decay = 0, latent_dim = 0, n_layers = 0;
  std::string mode;
  std::uint64_t seed = 0;

  void add(CLI::App* app, bool with_alpha) {
    const TrainConfig d;
    app->add_option("--config", config_path, "JSON training config (keys as in config.json)");
    if (with_alpha) app->add_option("--alpha", alpha, "WTA fraction of samples supervised")->default_val(d.alpha);
    app->add_option("--beta", beta, "KL weight (default 0.01 wta, 1 elbo)");
    app->add_option("--mode", mode, "wta, elbo or ablation")->default_val("wta");
    app->add_option("--epochs", epochs, "training epochs")->default_val(d.epochs);
    app->add_option("--mc-samples", mc_samples, "Monte Carlo samples per image")->default_val(d.mc_samples);
    app->add_option("--batch-size", batch_size, "images per batch")->default_val(d.batch_size);
    app->add_option("--lr0", lr0, "initial learning rate")->default_val(d.lr0);
    app->add_option("--n-lr-decay", n_lr_decay, "epochs between 0.8x decays")->default_val(d.n_lr_decay);
    app->add_option("--weight-decay", weight_decay, "L2 penalty on encoder weights")->default_val(d.weight_decay);
    app->add_option("--lambda-t", lambda_t, "translation weight")->default_val(d.weights.translation);
    app->add_option("--lambda-r", lambda_r, "rotation weight")->default_val(d.weights.rotation);
    app->add_option("--latent-dim", latent_dim, "latent dimension")->default_val(d.arch.latent_dim);
    app->add_option("--n-layers", n_layers, "extra PoseMap hidden layers")->default_val(d.arch.posemap_layers);
    app->add_option("--seed", seed, "global seed")->default_val(0);
  }

  // defaults < config file < flags
  TrainConfig resolve(const CLI::App* app, std::string* dataset_from_config) const {
    TrainConfig c;
    if (!config_path.empty()) {
      const auto j = read_json(config_path);
      overlay_from_json(j, c);
      if (dataset_from_config && j.contains("dataset")) *dataset_from_config = j["dataset"].get<std::string>();
    }
    auto given = [&](const char* f) {
      const auto* opt = app->get_option_no_throw(f);
      return opt != nullptr && opt->count() > 0;
    };
    if (given("--alpha")) c.alpha = alpha;
    if (given("--beta")) c.beta = beta;
    if (given("--mode")) c.mode = train_mode_from_string(mode);
    if (given("--epochs")) c.epochs = epochs;
    if (given("--mc-samples")) c.mc_samples = mc_samples;
    if (given("--batch-size")) c.batch_size = batch_size;
    if (given("--lr0")) c.lr0 = lr0;
    if (given("--n-lr-decay")) c.n_lr_decay = n_lr_decay;
    if (given("--weight-decay")) c.weight_decay = weight_decay;
    if (given("--lambda-t")) c.weights.translation = lambda_t;
    if (given("--lambda-r")) c.weights.rotation = lambda_r;
    if (given("--latent-dim")) c.arch.latent_dim = latent_dim;
    if (given("--n-layers")) c.arch.posemap_layers = n_layers;
    if (given("--seed")) c.seed = seed;
    validate(c);
    return c;
  }
};

std::vector<double> parse_list(const std::string& s, std::size_t expected, const char* what) {
  std::vector<double> v;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      v.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ValidationError(std::string(what) + ": cannot parse '" + item + "'");
    }
  }
  if (expected > 0 && v.size() != expected) {
    throw ValidationError(std::string(what) + ": expected " + std::to_string(expected) + " comma-separated values");
  }
  if (v.empty()) throw ValidationError(std::string(what) + ": empty list");
  return v;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multimodal camera pose regression on procedural ambiguous scenes", "ambipose"};
  app.require_subcommand(1);
  const std::string default_out = env_or("AMBIPOSE_OUT_DIR", "ambipose_out");

  // gen
  GenOptions gen;
  std::string gen_spec, gen_out;
  double gen_eta = 0.0;
  auto* g = app.add_subcommand("gen", "Generate a procedural dataset");
  g->add_option("--scene", gen.scene, "built-in scene: round_table, dinner_table, ceiling_grid, unambiguous")
      ->capture_default_str();
  g->add_option("--spec", gen_spec, "scene spec JSON file (overrides --scene)");
  g->add_option("--eta", gen_eta, "distinguishing strength override in [0, 1]");
  g->add_option("--train", gen.n_train, "training records")->capture_default_str();
  g->add_option("--test", gen.n_test, "test records")->capture_default_str();
  g->add_option("--seed", gen.seed, "global seed")->capture_default_str();
  g->add_option("--out", gen_out, "dataset directory (default $AMBIPOSE_OUT_DIR/<scene>)");

  // train
  TrainFlags tf;
  std::string tr_dataset, tr_out;
  bool no_timing = false, quiet = false;
  auto* t = app.add_subcommand("train", "Train a pose regressor");
  t->add_option("--dataset", tr_dataset, "dataset directory");
  tf.add(t, true);
  t->add_option("--out", tr_out, "run directory (default $AMBIPOSE_OUT_DIR/train)");
  t->add_flag("--no-timing", no_timing, "write 0 in the seconds column for byte-stable reports");
  t->add_flag("--quiet", quiet, "suppress per-epoch progress");

  // eval
  EvalCliOptions ev;
  std::string ev_out, ev_thresholds;
  auto* e = app.add_subcommand("eval", "Evaluate a checkpoint on a dataset's test split");
  e->add_option("--dataset", ev.dataset, "dataset directory")->required();
  e->add_option("--checkpoint", ev.checkpoint, "model checkpoint")->required();
  e->add_option("--gamma", ev.gamma, "minimum fraction of samples within the threshold")->capture_default_str();
  e->add_option("--mc-samples", ev.mc_samples, "posterior samples per query")->capture_default_str();
  e->add_option("--seed", ev.seed, "global seed")->capture_default_str();
  e->add_option("--thresholds", ev_thresholds,
                "paired thresholds t1,r1,t2,r2,... in metres and degrees (default 0.1,10,0.2,15,0.3,20)");
  e->add_flag("--absolute-thresholds", ev.absolute_thresholds,
              "use translation thresholds in metres instead of multiples of the scene scale");
  e->add_option("--out", ev_out, "output directory (default $AMBIPOSE_OUT_DIR/eval)");
  int ev_threads = 0;
  e->add_option("--threads", ev_threads, "worker threads (default $AMBIPOSE_THREADS or 1)");

  // viz
  VizOptions vz;
  std::string vz_bins = "100,100", vz_bounds, vz_heatmap;
  auto* v = app.add_subcommand("viz", "Emit position and orientation heatmaps for one query");
  v->add_option("--dataset", vz.dataset, "dataset directory")->required();
  v->add_option("--checkpoint", vz.checkpoint, "model checkpoint")->required();
  v->add_option("--index", vz.index, "test query index")->capture_default_str();
  v->add_option("--heatmap", vz_heatmap, "position heatmap path (default $AMBIPOSE_OUT_DIR/viz/position.ppm)");
  v->add_option("--bins", vz_bins, "histogram bins NX,NY")->capture_default_str();
  v->add_option("--bounds", vz_bounds, "position bounds x0,x1,y0,y1 (default scene bounds)");
  v->add_option("--mc-samples", vz.mc_samples, "posterior samples")->capture_default_str();
  v->add_option("--seed", vz.seed, "global seed")->capture_default_str();
  v->add_option("--cell-px", vz.cell_px, "pixels per histogram cell")->capture_default_str();

  // bench
  BenchOptions bn;
  auto* b = app.add_subcommand("bench", "Time posterior prediction for a single query");
  b->add_option("--checkpoint", bn.checkpoint, "model checkpoint")->required();
  b->add_option("--mc-samples", bn.mc_samples, "posterior samples")->capture_default_str();
  b->add_option("--repeats", bn.repeats, "timed repetitions")->capture_default_str();

  // sweep-alpha
  SweepOptions sw;
  TrainFlags sf;
  std::string sw_dataset, sw_alphas = "0.01,0.2,1.0", sw_out;
  auto* s = app.add_subcommand("sweep-alpha", "Recall statistics over repeated trainings per alpha");
  s->add_option("--dataset", sw_dataset, "dataset directory");
  s->add_option("--alphas", sw_alphas, "comma-separated alpha values")->capture_default_str();
  s->add_option("--runs", sw.runs, "training runs per alpha")->capture_default_str();
  s->add_option("--gamma", sw.gamma, "recall gamma")->capture_default_str();
  s->add_option("--eval-samples", sw.mc_samples, "posterior samples per query at evaluation")->capture_default_str();
  s->add_flag("--absolute-thresholds", sw.absolute_thresholds, "translation threshold in metres");
  sf.add(s, false);
  s->add_option("--out", sw_out, "output directory (default $AMBIPOSE_OUT_DIR/sweep)");
  int sw_threads = 0;
  s->add_option("--threads", sw_threads, "parallel trainings (default $AMBIPOSE_THREADS or 1)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& pe) {
    const int code = app.exit(pe, out, err);
    return code == 0 ? 0 : 1;
  }

  try {
    if (g->parsed()) {
      if (!gen_spec.empty()) gen.spec_file = gen_spec;
      if (g->count("--eta")) gen.eta = gen_eta;
      gen.out = gen_out.empty() ? fs::path(default_out) / gen.scene : fs::path(gen_out);
      cmd_gen(gen, out);
    } else if (t->parsed()) {
      TrainOptions o;
      std::string ds_cfg;
      o.config = tf.resolve(t, &ds_cfg);
      o.dataset = tr_dataset.empty() ? ds_cfg : tr_dataset;
      if (o.dataset.empty()) throw ValidationError("train: --dataset is required (flag or config key)");
      o.out = tr_out.empty() ? fs::path(default_out) / "train" : fs::path(tr_out);
      o.timing = !no_timing;
      o.quiet = quiet;
      cmd_train(o, out);
    } else if (e->parsed()) {
      if (!ev_thresholds.empty()) {
        const auto vals = parse_list(ev_thresholds, 0, "--thresholds");
        if (vals.size() % 2 != 0) throw ValidationError("--thresholds needs translation,rotation pairs");
        for (std::size_t i = 0; i < vals.size(); i += 2) ev.thresholds.push_back({vals[i], vals[i + 1], ev.gamma});
      }
      ev.out = ev_out.empty() ? fs::path(default_out) / "eval" : fs::path(ev_out);
      ev.threads = ev_threads > 0 ? ev_threads : env_threads();
      cmd_eval(ev, out);
    } else if (v->parsed()) {
      const auto bins = parse_list(vz_bins, 2, "--bins");
      vz.nx = static_cast<int>(bins[0]);
      vz.ny = static_cast<int>(bins[1]);
      if (vz.nx < 1 || vz.ny < 1 || bins[0] != vz.nx || bins[1] != vz.ny) {
        throw ValidationError("--bins must be two positive integers");
      }
      if (!vz_bounds.empty()) {
        const auto bb = parse_list(vz_bounds, 4, "--bounds");
        vz.bounds = PlanarBounds{bb[0], bb[1], bb[2], bb[3]};
        validate(*vz.bounds);
      }
      vz.heatmap = vz_heatmap.empty() ? fs::path(default_out) / "viz" / "position.ppm" : fs::path(vz_heatmap);
      cmd_viz(vz, out);
    } else if (b->parsed()) {
      cmd_bench(bn, out);
    } else if (s->parsed()) {
      std::string ds_cfg;
      sw.config = sf.resolve(s, &ds_cfg);
      sw.dataset = sw_dataset.empty() ? ds_cfg : sw_dataset;
      if (sw.dataset.empty()) throw ValidationError("sweep-alpha: --dataset is required (flag or config key)");
      sw.alphas = parse_list(sw_alphas, 0, "--alphas");
      sw.out = sw_out.empty() ? fs::path(default_out) / "sweep" : fs::path(sw_out);
      sw.threads = sw_threads > 0 ? sw_threads : env_threads();
      const auto summary = cmd_sweep_alpha(sw, out);
      for (const auto& row : summary) {
        out << "alpha " << row.alpha << ": min " << row.min << " q1 " << row.q1 << " median " << row.median
            << " q3 " << row.q3 << " max " << row.max << '\n';
      }
    }
  } catch (const ValidationError& ex) {
    err << "error: " << ex.what() << '\n';
    return 1;
  } catch (const std::exception& ex) {
    err << "error: " << ex.what() << '\n';
    return 2;
  }
  return 0;
}

}  // namespace ambipose::cli
