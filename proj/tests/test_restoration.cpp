// Copyright (c) 2026 the mdf authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "mdf/metrics.hpp"
#include "mdf/restoration.hpp"
#include "mdf/synth.hpp"

using namespace mdf;

namespace {

std::string make_dataset(const std::string& name, int count, int size, uint64_t seed) {
  std::string dir = "/tmp/mdf_test_data_" + name;
  std::filesystem::remove_all(dir);
  synth_dataset(dir, count, seed, {.h = size, .w = size});
  return dir;
}

}  // namespace

TEST_CASE("sisr pairs have the 96/24 patch geometry at factor 4") {
  std::string dir = make_dataset("sisr", 3, 128, 1);
  Recipe recipe;
  recipe.task = TaskSpec::sisr(4);
  recipe.patch = 96;
  recipe.seed = 5;
  PairStream stream(dir, recipe.task, recipe);
  auto pairs = stream.epoch(0, 4);
  REQUIRE(pairs.size() == 4);
  for (const auto& p : pairs) {
    CHECK(p.target.h == 96);
    CHECK(p.target.w == 96);
    CHECK(p.input.h == 24);
    CHECK(p.input.w == 24);
  }
}

TEST_CASE("denoise pair with zero sigma is the identity") {
  std::string dir = make_dataset("den0", 2, 64, 2);
  Recipe recipe;
  recipe.task = TaskSpec::denoise(0.0, 0.0);
  recipe.patch = 32;
  PairStream stream(dir, recipe.task, recipe);
  auto pairs = stream.epoch(0, 2);
  for (const auto& p : pairs) CHECK(p.input.v == p.target.v);
}

TEST_CASE("pair stream is deterministic per (seed, epoch) and reshuffles per epoch") {
  std::string dir = make_dataset("det", 3, 64, 3);
  Recipe recipe;
  recipe.task = TaskSpec::denoise();
  recipe.patch = 24;
  recipe.seed = 11;
  PairStream stream(dir, recipe.task, recipe);
  auto a = stream.epoch(0, 3);
  auto b = stream.epoch(0, 3);
  auto c = stream.epoch(1, 3);
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].input.v == b[i].input.v);
    CHECK(a[i].target.v == b[i].target.v);
  }
  bool any_diff = false;
  for (size_t i = 0; i < a.size(); ++i) any_diff |= a[i].target.v != c[i].target.v;
  CHECK(any_diff);
}

TEST_CASE("empty or unusable dataset directories are rejected") {
  std::string dir = "/tmp/mdf_test_data_empty";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  Recipe recipe;
  recipe.task = TaskSpec::denoise();
  CHECK_THROWS_AS(PairStream(dir, recipe.task, recipe), ValidationError);
  CHECK_THROWS_AS(PairStream("/tmp/no_such_dir_mdf", recipe.task, recipe), ValidationError);
}

TEST_CASE("dihedral variants are exactly the 8-element orbit") {
  // Asymmetric 3x3 marker.
  Image m(3, 3, 1);
  for (int i = 0; i < 9; ++i) m.data[i] = i / 10.0;

  // Brute-force orbit from primitive rot90/flip compositions.
  auto rot90 = [](const Image& img) {
    Image out(img.w, img.h, img.c);
    for (int y = 0; y < img.h; ++y)
      for (int x = 0; x < img.w; ++x) out.at(x, img.h - 1 - y, 0) = img.at(y, x, 0);
    return out;
  };
  auto fliph = [](const Image& img) {
    Image out(img.h, img.w, img.c);
    for (int y = 0; y < img.h; ++y)
      for (int x = 0; x < img.w; ++x) out.at(y, img.w - 1 - x, 0) = img.at(y, x, 0);
    return out;
  };
  std::vector<std::vector<double>> orbit;
  Image cur = m;
  for (int r = 0; r < 4; ++r) {
    orbit.push_back(cur.data);
    orbit.push_back(fliph(cur).data);
    cur = rot90(cur);
  }
  std::sort(orbit.begin(), orbit.end());
  CHECK(std::unique(orbit.begin(), orbit.end()) == orbit.end());  // 8 distinct

  std::vector<std::vector<double>> produced;
  for (int v = 0; v < 8; ++v) produced.push_back(dihedral(m, v).data);
  std::sort(produced.begin(), produced.end());
  CHECK(produced == orbit);
}

TEST_CASE("identity-initialized dncnn maps input to itself") {
  RestorationModel model(ModelConfig::dncnn_s(3), 7);
  Image img = synth_image(9, {.h = 40, .w = 40});
  Image out = model.infer(img);
  for (size_t i = 0; i < img.data.size(); ++i)
    CHECK(out.data[i] == doctest::Approx(img.data[i]).epsilon(1e-6));
}

TEST_CASE("tiled and untiled inference agree") {
  RestorationModel model(ModelConfig::dncnn_s(3), 11);
  // Give the final conv real weights so the model is not the identity.
  Rng rng(13);
  model.dncnn()->convs.back().init_gaussian(rng, 0.05);

  Image img = synth_image(10, {.h = 128, .w = 128});
  Image untiled = model.infer(img, 256, 16);  // single tile
  Image tiled = model.infer(img, 64, 16);     // 2x2 tiles with seams
  REQUIRE(untiled.same_shape(tiled));
  double worst = 0.0;
  for (size_t i = 0; i < untiled.data.size(); ++i)
    worst = std::max(worst, std::abs(untiled.data[i] - tiled.data[i]));
  CHECK(worst < 1e-4);
}

TEST_CASE("sisr output shape contract") {
  RestorationModel model(ModelConfig::edsr_s(3, 4), 17);
  Image img = synth_image(11, {.h = 30, .w = 40});
  Image out = model.infer(img);
  CHECK(out.h == 120);
  CHECK(out.w == 160);

  RestorationModel model2(ModelConfig::sr_resnet_s(3, 2), 18);
  Image out2 = model2.infer(img);
  CHECK(out2.h == 60);
  CHECK(out2.w == 80);
}

TEST_CASE("zero-epoch training returns the model unchanged with empty history") {
  std::string dir = make_dataset("zero", 2, 48, 4);
  RestorationModel model(ModelConfig::dncnn_s(3), 21);
  Image probe = synth_image(12, {.h = 32, .w = 32});
  Image before = model.infer(probe);
  Recipe recipe = Recipe::toy(TaskSpec::denoise(25, 25), 0, 24, 8);
  auto loss = make_l2_loss();
  TrainHistory h = train_restoration(model, *loss, recipe, dir, dir);
  CHECK(h.rows.empty());
  CHECK(h.best_epoch == -1);
  Image after = model.infer(probe);
  CHECK(before.data == after.data);
}

TEST_CASE("desk-scale training reduces the validation loss") {
  std::string train_dir = make_dataset("train", 6, 64, 5);
  std::string val_dir = make_dataset("val", 3, 64, 6);
  RestorationModel model(ModelConfig::dncnn_s(3), 23);
  Recipe recipe = Recipe::toy(TaskSpec::denoise(25, 25), 3, 24, 160);
  recipe.seed = 9;
  auto loss = make_l2_loss();
  TrainHistory h = train_restoration(model, *loss, recipe, train_dir, val_dir);
  REQUIRE(h.rows.size() == 3);
  CHECK(h.rows.back().val_loss < h.rows.front().val_loss);
  CHECK(h.best_epoch >= 0);
  // The selected checkpoint has the minimum validation loss of all rows.
  for (const auto& r : h.rows) CHECK(h.best_val_loss <= r.val_loss + 1e-12);

  std::string hist_path = "/tmp/mdf_test_history.csv";
  write_history_csv(h, hist_path);
  std::ifstream in(hist_path);
  std::string line;
  std::getline(in, line);
  CHECK(line == "epoch,lr,train_loss,val_loss");
}

TEST_CASE("model checkpoints round-trip with identical inference") {
  RestorationModel model(ModelConfig::edsr_s(3, 2), 29);
  std::string dir = "/tmp/mdf_test_model_ckpt";
  std::filesystem::remove_all(dir);
  model.save(dir);
  RestorationModel loaded = RestorationModel::load(dir);
  Image img = synth_image(13, {.h = 24, .w = 24});
  CHECK(model.infer(img).data == loaded.infer(img).data);
  CHECK(arch_name(loaded.config().arch) == "edsr_like");
}

TEST_CASE("recipe schedules interpolate between lr0 and lr1") {
  Recipe r = Recipe::denoise_full();
  CHECK(r.lr_at(0) == doctest::Approx(0.1));
  CHECK(r.lr_at(49) == doctest::Approx(1e-4));
  Recipe c = Recipe::sisr_full();
  CHECK(c.lr_at(0) == doctest::Approx(1e-3));
  CHECK(c.lr_at(499) == doctest::Approx(1e-5));
  CHECK(c.lr_at(250) < 1e-3);
  CHECK(c.lr_at(250) > 1e-5);
}
