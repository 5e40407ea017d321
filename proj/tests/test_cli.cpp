// Copyright (c) 2026 the mdf authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "mdf/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct RunResult {
  int exit_code;
  std::string output;  // stdout + stderr
};

RunResult run_cli(const std::string& args) {
  std::string cmd = std::string(MDF_CLI_PATH) + " " + args + " 2>&1";
  std::array<char, 512> buf;
  std::string output;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  while (fgets(buf.data(), buf.size(), pipe)) output += buf.data();
  int status = pclose(pipe);
  return {WEXITSTATUS(status), output};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Workspace {
  fs::path root;
  Workspace() {
    root = fs::temp_directory_path() / "mdf_cli_ws";
    fs::remove_all(root);
    fs::create_directories(root);
    mdf::synth_dataset((root / "seeds").string(), 2, 41, {.h = 48, .w = 48});
    mdf::synth_dataset((root / "imgs").string(), 4, 42, {.h = 48, .w = 48});
    mdf::synth_dataset((root / "gray").string(), 2, 43, {.h = 48, .w = 48, .channels = 1});
  }
  std::string p(const std::string& rel) const { return (root / rel).string(); }
};

Workspace& ws() {
  static Workspace w;
  return w;
}

// One tiny stack shared across CLI cases.
std::string shared_stack() {
  static std::string path = [] {
    RunResult r = run_cli("train-loss --seeds " + ws().p("seeds/synth_0000.png") +
                          " --scales 1 --iterations 6 --width 16 --task denoise --seed 3 --out " +
                          ws().p("runs"));
    REQUIRE(r.exit_code == 0);
    json out = json::parse(r.output.substr(r.output.find('{')));
    return out.at("stack").get<std::string>();
  }();
  return path;
}

}  // namespace

TEST_CASE("cli: missing seed image exits with code 2 and a message") {
  RunResult r = run_cli("train-loss --seeds /nowhere/missing.png --scales 1 --iterations 2");
  CHECK(r.exit_code == 2);
  CHECK(r.output.find("seed image does not exist") != std::string::npos);
}

TEST_CASE("cli: unknown config key is rejected before any work") {
  fs::path cfg = ws().root / "bad_config.json";
  std::ofstream(cfg) << R"({"unknown_knob": 3})";
  RunResult r = run_cli("train-loss --config " + cfg.string());
  CHECK(r.exit_code == 2);
  CHECK(r.output.find("unknown config key") != std::string::npos);
}

TEST_CASE("cli: train-loss writes a manifest carrying the task field") {
  std::string stack = shared_stack();
  json manifest = json::parse(slurp(fs::path(stack) / "manifest.json"));
  CHECK(manifest.at("task").at("name") == "denoise");
  CHECK(manifest.at("alpha") == 100.0);
  CHECK(manifest.at("receptive_field") == 11);
}

TEST_CASE("cli: multiple --seeds invoke the multi-seed path") {
  RunResult r = run_cli("train-loss --seeds " + ws().p("seeds/synth_0000.png") + "," +
                        ws().p("seeds/synth_0001.png") +
                        " --scales 1 --iterations 4 --width 16 --task denoise --seed 4 --out " +
                        ws().p("runs"));
  REQUIRE(r.exit_code == 0);
  json out = json::parse(r.output.substr(r.output.find('{')));
  json manifest = json::parse(slurp(fs::path(out.at("stack").get<std::string>()) / "manifest.json"));
  CHECK(manifest.at("seed_hashes").size() == 2);
}

TEST_CASE("cli: deterministic rerun reproduces byte-identical CSV outputs") {
  std::string args = "train-loss --seeds " + ws().p("seeds/synth_0001.png") +
                     " --scales 1 --iterations 5 --width 16 --task denoise --seed 7"
                     " --deterministic true --out " +
                     ws().p("runs_det");
  RunResult r1 = run_cli(args);
  REQUIRE(r1.exit_code == 0);
  json out = json::parse(r1.output.substr(r1.output.find('{')));
  fs::path run_dir = fs::path(out.at("stack").get<std::string>()).parent_path();
  std::string first = slurp(run_dir / "training_log.csv");
  RunResult r2 = run_cli(args);
  REQUIRE(r2.exit_code == 0);
  CHECK(slurp(run_dir / "training_log.csv") == first);
  CHECK(!first.empty());
}

TEST_CASE("cli: train-restore preflights a channel-mismatched mdf loss") {
  // Stack is 3-channel; train a 1-channel model against it.
  RunResult r = run_cli("train-restore --arch dncnn --preset toy --channels 1 --loss mdf:" +
                        shared_stack() + " --task denoise --train_dir " + ws().p("gray") +
                        " --val_dir " + ws().p("gray") +
                        " --patch 24 --epochs 1 --patches_per_epoch 8 --val_patches 4 --out " +
                        ws().p("runs"));
  CHECK(r.exit_code == 2);
  CHECK(r.output.find("channel count mismatch") != std::string::npos);
}

TEST_CASE("cli: train-restore history rows equal epochs; resume continues numbering") {
  std::string args = "train-restore --arch dncnn --preset toy --channels 3 --loss l2"
                     " --task denoise --noise_lo 25 --noise_hi 25 --train_dir " +
                     ws().p("imgs") + " --val_dir " + ws().p("imgs") +
                     " --patch 24 --epochs 2 --batch 4 --patches_per_epoch 24 --val_patches 8"
                     " --seed 5 --out " +
                     ws().p("runs_restore");
  RunResult r = run_cli(args);
  REQUIRE(r.exit_code == 0);
  json out = json::parse(r.output.substr(r.output.find('{')));
  CHECK(out.at("epochs") == 2);
  fs::path run_dir = fs::path(out.at("model").get<std::string>()).parent_path();
  {
    std::ifstream in(run_dir / "history.csv");
    std::string line;
    int rows = 0;
    std::getline(in, line);
    while (std::getline(in, line))
      if (!line.empty()) ++rows;
    CHECK(rows == 2);
  }
  // Resume: same config plus --resume; epoch numbering continues at 2.
  RunResult r2 = run_cli(args + " --resume true");
  REQUIRE(r2.exit_code == 0);
  std::string hist = slurp(run_dir / "history.csv");
  CHECK(hist.find("\n2,") != std::string::npos);
  CHECK(hist.find("\n3,") != std::string::npos);
}

TEST_CASE("cli: eval in stack mode prints the scalar and per-scale breakdown") {
  RunResult r = run_cli("eval --stack " + shared_stack() + " --ref " +
                        ws().p("imgs/synth_0000.png") + " --test " + ws().p("imgs/synth_0001.png") +
                        " --out " + ws().p("runs"));
  REQUIRE(r.exit_code == 0);
  json out = json::parse(r.output.substr(r.output.find('{')));
  CHECK(out.at("total").get<double>() > 0.0);
  CHECK(out.at("per_scale").size() == 1);
}

TEST_CASE("cli: eval of the identity model on clean pairs reports SSIM 1.0") {
  // Zero-epoch training saves the identity-initialized toy DnCNN.
  RunResult t = run_cli("train-restore --arch dncnn --preset toy --channels 3 --loss l2"
                        " --task denoise --train_dir " +
                        ws().p("imgs") + " --val_dir " + ws().p("imgs") +
                        " --patch 24 --epochs 0 --patches_per_epoch 8 --val_patches 4 --out " +
                        ws().p("runs_id"));
  REQUIRE(t.exit_code == 0);
  json tout = json::parse(t.output.substr(t.output.find('{')));
  std::string model = tout.at("model").get<std::string>();

  RunResult r = run_cli("eval --model " + model + " --test_dir " + ws().p("imgs") +
                        " --task denoise --sigma 0 --out " + ws().p("runs_id"));
  REQUIRE(r.exit_code == 0);
  json out = json::parse(r.output.substr(r.output.find('{')));
  CHECK(out.at("mean_ssim").get<double>() == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(out.at("images") == 4);
}

TEST_CASE("cli: scale prints delta for the two-condition 75% matrix") {
  fs::path m = ws().root / "matrix.csv";
  std::ofstream(m) << "0,1,75\n1,0,25\n";
  RunResult r = run_cli("scale --matrix " + m.string() + " --out " + ws().p("runs"));
  REQUIRE(r.exit_code == 0);
  json out = json::parse(r.output.substr(r.output.find('{')));
  CHECK(out.at("delta_jnd").get<double>() == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("cli: study row count is |losses| * |kinds| * |levels|") {
  RunResult r = run_cli("study --losses l1,l2 --kinds noise,brightness --levels 30,40"
                        " --images_dir " +
                        ws().p("imgs") + " --max_images 2 --out " + ws().p("runs"));
  REQUIRE(r.exit_code == 0);
  json out = json::parse(r.output.substr(r.output.find('{')));
  CHECK(out.at("rows") == 2 * 2 * 2);
  std::ifstream in(out.at("study").get<std::string>());
  std::string line;
  int rows = 0;
  std::getline(in, line);
  CHECK(line == "loss,kind,target_psnr_db,mean_loss,mean_achieved_psnr_db");
  while (std::getline(in, line))
    if (!line.empty()) ++rows;
  CHECK(rows == 8);
}

TEST_CASE("cli: probe emits silhouettes, embedding CSV and SVG") {
  mdf::synth_dataset(ws().p("probe_a"), 4, 60, {.h = 32, .w = 32});
  mdf::synth_dataset(ws().p("probe_b"), 4, 70, {.h = 32, .w = 32});
  RunResult r = run_cli("probe --stack " + shared_stack() + " --sets a=" + ws().p("probe_a") +
                        ",b=" + ws().p("probe_b") + " --tsne_iterations 60 --out " +
                        ws().p("runs_probe"));
  REQUIRE(r.exit_code == 0);
  json out = json::parse(r.output.substr(r.output.find('{')));
  CHECK(out.at("points") == 8);
  CHECK(out.at("silhouettes").size() == 1);
  // Artifacts land in the run directory.
  bool found_svg = false, found_csv = false;
  for (auto& e : fs::recursive_directory_iterator(ws().p("runs_probe"))) {
    if (e.path().filename() == "embedding.svg") found_svg = true;
    if (e.path().filename() == "embedding.csv") found_csv = true;
  }
  CHECK(found_svg);
  CHECK(found_csv);
}
