#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"

#include "ambipose/cli.hpp"

using namespace ambipose;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "ambipose");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), {}};
}

fs::path scratch() {
  static const fs::path root = [] {
    auto p = fs::temp_directory_path() / "ambipose_cli_test";
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
  }();
  return root;
}

// Small architecture and schedule so the end-to-end commands stay fast.
fs::path tiny_config() {
  const auto p = scratch() / "tiny.json";
  std::ofstream(p) << R"({"epochs": 3, "mc_samples": 20, "latent_dim": 4, "posemap_width": 16,
                         "n_layers": 1, "encoder_hidden": [16], "lr0": 0.001})";
  return p;
}

}  // namespace

TEST_CASE("help and argument errors map to exit codes") {
  CHECK(invoke({"--help"}).code == 0);
  const auto h = invoke({"train", "--help"});
  CHECK(h.code == 0);
  CHECK(h.out.find("--alpha") != std::string::npos);
  CHECK(h.out.find("0.2") != std::string::npos);
  CHECK(invoke({"bench", "--help"}).out.find("100") != std::string::npos);
  CHECK(invoke({}).code == 1);
  CHECK(invoke({"gen", "--scene", "atrium", "--out", (scratch() / "x").string()}).code == 1);
  CHECK(invoke({"eval", "--dataset", (scratch() / "missing").string(), "--checkpoint", "nope.ckpt"}).code == 2);
}

TEST_CASE("gen writes a reproducible dataset") {
  const auto a = scratch() / "gen_a", b = scratch() / "gen_b";
  const auto r = invoke({"gen", "--scene", "round_table", "--train", "12", "--test", "6", "--seed", "7", "--out", a.string()});
  CHECK(r.code == 0);
  CHECK(r.out.find("k=4") != std::string::npos);
  CHECK(invoke({"gen", "--scene", "round_table", "--train", "12", "--test", "6", "--seed", "7", "--out", b.string()}).code == 0);
  for (const char* f : {"manifest.json", "train.bin", "test.bin"}) CHECK(slurp(a / f) == slurp(b / f));
  const auto m = read_dataset(a).manifest;
  CHECK(m.spec.symmetry_order == 4);
  CHECK(m.global_seed == 7u);
  CHECK(m.seed == cli::dataset_seed(7));

  const auto d = scratch() / "gen_dinner";
  CHECK(invoke({"gen", "--scene", "dinner_table", "--train", "4", "--test", "2", "--out", d.string()}).code == 0);
  CHECK(read_dataset(d).manifest.spec.symmetry_order == 2);
}

TEST_CASE("env var supplies the default output directory") {
  const auto dir = scratch() / "envout";
  ::setenv("AMBIPOSE_OUT_DIR", dir.string().c_str(), 1);
  const auto r = invoke({"gen", "--scene", "dinner_table", "--train", "2", "--test", "1"});
  ::unsetenv("AMBIPOSE_OUT_DIR");
  CHECK(r.code == 0);
  CHECK(fs::exists(dir / "dinner_table" / "manifest.json"));
}

TEST_CASE("train, eval, viz and bench end to end") {
  const auto ds = scratch() / "e2e_data";
  REQUIRE(invoke({"gen", "--scene", "dinner_table", "--train", "8", "--test", "4", "--seed", "3", "--out", ds.string()}).code == 0);

  const auto run_a = scratch() / "e2e_a", run_b = scratch() / "e2e_b";
  const std::vector<std::string> train_args{"train", "--dataset", ds.string(), "--config", tiny_config().string(),
                                            "--epochs", "2", "--seed", "5", "--no-timing", "--quiet"};
  auto args_a = train_args, args_b = train_args;
  args_a.insert(args_a.end(), {"--out", run_a.string()});
  args_b.insert(args_b.end(), {"--out", run_b.string()});
  REQUIRE(invoke(args_a).code == 0);
  REQUIRE(invoke(args_b).code == 0);
  for (const char* f : {"model.ckpt", "report.csv", "config.json"}) CHECK(slurp(run_a / f) == slurp(run_b / f));

  // Flags override the config file, which overrides defaults.
  const auto cfg = nlohmann::json::parse(slurp(run_a / "config.json"));
  CHECK(cfg["epochs"] == 2);
  CHECK(cfg["mc_samples"] == 20);
  CHECK(cfg["alpha"] == 0.2);
  CHECK(cfg["seed"] == 5);
  const std::string report = slurp(run_a / "report.csv");
  CHECK(std::count(report.begin(), report.end(), '\n') == 3);

  const auto ckpt = (run_a / "model.ckpt").string();
  const auto ev_a = scratch() / "eval_a", ev_b = scratch() / "eval_b";
  const auto e1 = invoke({"eval", "--dataset", ds.string(), "--checkpoint", ckpt, "--mc-samples", "50", "--out", ev_a.string()});
  REQUIRE(e1.code == 0);
  CHECK(e1.out.find("dinner_table") != std::string::npos);
  CHECK(invoke({"eval", "--dataset", ds.string(), "--checkpoint", ckpt, "--mc-samples", "50", "--threads", "2",
             "--out", ev_b.string()}).code == 0);
  CHECK(slurp(ev_a / "eval.json") == slurp(ev_b / "eval.json"));
  const auto ej = nlohmann::json::parse(slurp(ev_a / "eval.json"));
  CHECK(ej["recall"].size() == 3);
  CHECK(ej["recall"][0]["gamma"] == 0.1);
  // Scene-relative by default: dinner_table scale is its ring radius.
  CHECK(ej["recall"][0]["trans_max_m"].get<double>() == doctest::Approx(0.1 * builtin_scene("dinner_table").scale()));

  const auto v1 = scratch() / "viz1" / "pos.ppm", v2 = scratch() / "viz2" / "pos.ppm";
  for (const auto& p : {v1, v2}) {
    CHECK(invoke({"viz", "--dataset", ds.string(), "--checkpoint", ckpt, "--index", "1", "--bins", "20,10",
               "--heatmap", p.string(), "--mc-samples", "100"}).code == 0);
  }
  CHECK(slurp(v1) == slurp(v2));
  CHECK(slurp(v1.parent_path() / "pos_orientation.ppm") == slurp(v2.parent_path() / "pos_orientation.ppm"));
  CHECK(slurp(v1.parent_path() / "pos.csv").rfind("ix,iy,count\n", 0) == 0);
  CHECK(invoke({"viz", "--dataset", ds.string(), "--checkpoint", ckpt, "--index", "99"}).code == 1);
  CHECK(invoke({"viz", "--dataset", ds.string(), "--checkpoint", ckpt, "--bins", "0,4"}).code == 1);

  const auto bench = invoke({"bench", "--checkpoint", ckpt, "--mc-samples", "50", "--repeats", "5"});
  REQUIRE(bench.code == 0);
  double mean = -1, sd = -1;
  char pm[8] = {};
  CHECK(std::sscanf(bench.out.c_str(), "%lf %7s %lf ms", &mean, pm, &sd) == 3);
  CHECK(mean > 0);
  CHECK(sd >= 0);

  // Incompatible checkpoint.
  const auto other = scratch() / "other_data";
  SceneSpec s = builtin_scene("round_table");
  write_dataset(other, generate_dataset(s, 2, 1, 1));
  auto manifest = nlohmann::json::parse(slurp(other / "manifest.json"));
  manifest["obs_dim"] = 10;
  std::ofstream(other / "manifest.json") << manifest.dump();
  const auto bad = invoke({"eval", "--dataset", other.string(), "--checkpoint", ckpt});
  CHECK(bad.code != 0);
}

TEST_CASE("config validation lists offending fields") {
  const auto ds = scratch() / "cfg_data";
  REQUIRE(invoke({"gen", "--scene", "dinner_table", "--train", "2", "--test", "1", "--out", ds.string()}).code == 0);
  const auto r = invoke({"train", "--dataset", ds.string(), "--alpha", "0", "--batch-size", "0"});
  CHECK(r.code == 1);
  CHECK(r.err.find("alpha") != std::string::npos);
  CHECK(r.err.find("batch_size") != std::string::npos);
  const auto p = scratch() / "bad.json";
  std::ofstream(p) << R"({"learning_rate": 0.1})";
  CHECK(invoke({"train", "--dataset", ds.string(), "--config", p.string()}).code == 1);
}

TEST_CASE("sweep-alpha writes per-run rows and quartile summaries") {
  const auto ds = scratch() / "sweep_data";
  REQUIRE(invoke({"gen", "--scene", "round_table", "--train", "6", "--test", "3", "--out", ds.string()}).code == 0);
  const auto out = scratch() / "sweep";
  const auto r = invoke({"sweep-alpha", "--dataset", ds.string(), "--config", tiny_config().string(), "--epochs", "1",
                      "--alphas", "0.2,1.0", "--runs", "3", "--eval-samples", "30", "--out", out.string()});
  REQUIRE(r.code == 0);
  const std::string csv = slurp(out / "sweep.csv");
  CHECK(csv.rfind("alpha,run,recall\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 6 + 10);
  CHECK(csv.find("0.20000000000000001,median,") != std::string::npos);
  CHECK(cli::sweep_run_seed(1, 0.2, 0) != cli::sweep_run_seed(1, 0.2, 1));
  CHECK(cli::sweep_run_seed(1, 0.2, 0) != cli::sweep_run_seed(1, 1.0, 0));
}

TEST_CASE("quantiles use linear interpolation") {
  CHECK(cli::quantile({1, 2, 3, 4}, 0.5) == 2.5);
  CHECK(cli::quantile({4, 1, 3, 2}, 0.25) == 1.75);
  CHECK(cli::quantile({5}, 0.75) == 5);
}
