// Copyright (c) 2026 the mdf authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "mdf/distort.hpp"
#include "mdf/jnd.hpp"
#include "mdf/metrics.hpp"
#include "mdf/study.hpp"
#include "mdf/synth.hpp"
#include "oracles.hpp"

using namespace mdf;

TEST_CASE("psnr closed forms and loop oracle") {
  Image zero(8, 8, 3, 0.0);
  Image half(8, 8, 3, 0.5);
  CHECK(psnr(zero, half) == doctest::Approx(6.0205999).epsilon(1e-7));
  CHECK(std::isinf(psnr(half, half)));

  Rng rng(3);
  Image a(8, 8, 1), b(8, 8, 1);
  for (auto& v : a.data) v = rng.uniform();
  for (auto& v : b.data) v = rng.uniform();
  CHECK(psnr(a, b) == doctest::Approx(oracles::psnr_loop(a, b)).epsilon(1e-9));
  CHECK_THROWS_AS(psnr(a, Image(4, 4, 1, 0.0)), ValidationError);
}

TEST_CASE("niqe model fits, scores and orders noise correctly") {
  // Pristine corpus: synthetic natural-statistics textures.
  std::vector<Image> pristine;
  for (uint64_t s = 0; s < 24; ++s)
    pristine.push_back(synth_image(1000 + s, {.h = 192, .w = 192}));
  NiqeModel model = fit_niqe_model(pristine, 96, 0.75, "unit-test corpus");
  CHECK(model.mean.size() == 36);

  std::string path = "/tmp/mdf_test_niqe.json";
  model.save(path);
  NiqeModel loaded = NiqeModel::load(path);
  CHECK(loaded.mean == model.mean);

  int monotone = 0, total = 20;
  double first_clean = 0.0;
  for (int i = 0; i < total; ++i) {
    Image img = synth_image(2000 + i, {.h = 192, .w = 192});
    Rng rng(50 + i);
    Image noisy = clamp01(add_gaussian_noise(img, 50.0, rng));
    double nc = niqe(img, model);
    double nn = niqe(noisy, model);
    if (i == 0) {
      first_clean = nc;
      CHECK(niqe(img, model) == nc);  // deterministic
    }
    if (nn > nc) ++monotone;
  }
  CHECK(monotone >= 18);  // >= 90%

  // Under a horizontal flip the NSS features are symmetric by construction:
  // GGD and H/V product fits are bit-identical, the two diagonal fits swap.
  // Dimensions are multiples of the patch so the flip maps the block grid
  // onto itself.
  Image img = synth_image(2000, {.h = 192, .w = 192});
  Image flipped(img.h, img.w, img.c);
  for (int y = 0; y < img.h; ++y)
    for (int x = 0; x < img.w; ++x)
      for (int c = 0; c < img.c; ++c) flipped.at(y, x, c) = img.at(y, img.w - 1 - x, c);
  std::vector<double> fa = niqe_features_for_test(img);
  std::vector<double> fb = niqe_features_for_test(flipped);
  auto swap_diag = [](std::vector<double> f) {
    for (int scale = 0; scale < 2; ++scale)
      for (int k = 0; k < 4; ++k) std::swap(f[scale * 18 + 10 + k], f[scale * 18 + 14 + k]);
    return f;
  };
  std::vector<double> fb_sw = swap_diag(fb);
  for (size_t i = 0; i < fa.size(); ++i) CHECK(fa[i] == doctest::Approx(fb_sw[i]).epsilon(1e-9));

  // The score itself moves only with the content's diagonal anisotropy;
  // empirically within 20% on this corpus.
  double nf = niqe(flipped, model);
  CHECK(std::abs(nf - first_clean) <= 0.2 * std::max(first_clean, nf));

  CHECK_THROWS_AS(niqe(Image(50, 50, 1, 0.4), model), ValidationError);
}

TEST_CASE("evaluate_model on the identity model against clean inputs") {
  std::string dir = "/tmp/mdf_test_eval_data";
  std::filesystem::remove_all(dir);
  synth_dataset(dir, 3, 77, {.h = 48, .w = 48});

  RestorationModel identity(ModelConfig::dncnn_s(3), 31);  // zero residual at init
  EvalOptions opts;
  opts.denoise_sigma = 0.0;  // clean/clean pairs
  MetricReport report = evaluate_model(identity, dir, TaskSpec::denoise(), opts);
  REQUIRE(report.rows.size() == 3);
  for (const auto& r : report.rows) {
    CHECK(r.psnr_infinite);
    CHECK(r.ssim == doctest::Approx(1.0).epsilon(1e-9));
  }

  // Mean equals the arithmetic mean of rows (recomputed externally).
  opts.denoise_sigma = 25.0;
  MetricReport noisy = evaluate_model(identity, dir, TaskSpec::denoise(), opts);
  double mean_psnr = 0.0;
  for (const auto& r : noisy.rows) mean_psnr += r.psnr_db;
  mean_psnr /= noisy.rows.size();
  CHECK(noisy.mean_psnr == doctest::Approx(mean_psnr).epsilon(1e-12));
}

TEST_CASE("jnd: 75% two-condition calibration") {
  ComparisonMatrix m;
  m.names = {"A", "B"};
  m.counts = {{0, 75}, {25, 0}};
  JndScores s = scale_jnd(m);
  CHECK(std::abs((s.q[0] - s.q[1]) - 1.0) < 0.05);
  CHECK(s.q[1] == 0.0);  // anchored at the minimum
  CHECK_FALSE(s.boundary);
  CHECK(s.ci95[0] > 0.0);
}

TEST_CASE("jnd: symmetric data gives all-zero scores") {
  ComparisonMatrix m;
  m.names = {"A", "B", "C"};
  m.counts = {{0, 40, 40}, {40, 0, 40}, {40, 40, 0}};
  JndScores s = scale_jnd(m);
  for (double q : s.q) CHECK(std::abs(q) < 1e-9);
}

TEST_CASE("jnd: synthetic recovery matches the grid-search oracle") {
  std::vector<double> truth{0.0, 0.5, 1.3};
  Rng rng(2024);
  ComparisonMatrix m = simulate_comparisons(truth, 200, rng);
  JndScores s = scale_jnd(m);
  for (int i = 0; i < 3; ++i) CHECK(std::abs(s.q[i] - truth[i]) <= 0.15);

  double grid_ll = 0.0;
  auto grid_q = oracles::grid_mle_3(m, -0.5, 2.0, 0.01, &grid_ll);
  // The Newton optimum must be at least as likely as any grid point.
  CHECK(s.log_likelihood >= grid_ll - 1e-6);
  // And the two optimizers should land on the same scores.
  for (int i = 1; i < 3; ++i) CHECK(std::abs((s.q[i] - s.q[0]) - (grid_q[i] - grid_q[0])) <= 0.02);
}

TEST_CASE("jnd: fitted differences are invariant to shifting the true scores") {
  std::vector<double> base{0.0, 0.4, 0.9};
  std::vector<double> shifted{2.0, 2.4, 2.9};
  Rng r1(5), r2(5);
  ComparisonMatrix m1 = simulate_comparisons(base, 150, r1);
  ComparisonMatrix m2 = simulate_comparisons(shifted, 150, r2);
  JndScores s1 = scale_jnd(m1);
  JndScores s2 = scale_jnd(m2);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      CHECK(std::abs((s1.q[i] - s1.q[j]) - (s2.q[i] - s2.q[j])) < 1e-6);
}

TEST_CASE("jnd: disconnected graphs and unanimous data") {
  ComparisonMatrix m;
  m.names = {"A", "B", "C", "D"};
  m.counts = {{0, 10, 0, 0}, {5, 0, 0, 0}, {0, 0, 0, 8}, {0, 0, 7, 0}};
  CHECK_THROWS_WITH_AS(scale_jnd(m), doctest::Contains("disconnected"), ValidationError);

  ComparisonMatrix u;
  u.names = {"A", "B"};
  u.counts = {{0, 50}, {0, 0}};
  JndScores s = scale_jnd(u);
  CHECK(s.boundary);
  CHECK(s.q[0] > s.q[1]);
}

TEST_CASE("jnd: simulated preference frequencies match their construction") {
  // Equal scores: wins ~ Binomial(n, 0.5).
  std::vector<double> flat{0.0, 0.0, 0.0};
  Rng rng(7);
  int n = 400;
  ComparisonMatrix m = simulate_comparisons(flat, n, rng);
  double sd = std::sqrt(n * 0.25);
  for (int i = 0; i < 3; ++i)
    for (int j = i + 1; j < 3; ++j) CHECK(std::abs(m.counts[i][j] - n * 0.5) <= 4.0 * sd);

  // One-JND gap: preference ~ 75%.
  ComparisonMatrix m2 = simulate_comparisons({1.0, 0.0}, n, rng);
  double sd2 = std::sqrt(n * 0.75 * 0.25);
  CHECK(std::abs(m2.counts[0][1] - n * 0.75) <= 4.0 * sd2);

  // Zero trials: zero matrix.
  ComparisonMatrix z = simulate_comparisons({0.3, 0.7}, 0, rng);
  CHECK(z.counts[0][1] == 0);
  CHECK(z.counts[1][0] == 0);
}

TEST_CASE("comparison matrices parse from CSV and JSON") {
  auto m = ComparisonMatrix::from_csv_text("i,j,count\n0,1,75\n1,0,25\n");
  CHECK(m.size() == 2);
  CHECK(m.counts[0][1] == 75);

  auto j = ComparisonMatrix::from_json_text(
      R"({"names":["a","b"],"counts":[[0,10],[20,0]]})");
  CHECK(j.names[1] == "b");
  CHECK(j.counts[1][0] == 20);

  CHECK_THROWS_AS(ComparisonMatrix::from_csv_text("0,0,5\n"), ValidationError);  // diagonal
}

TEST_CASE("sensitivity study: monotone severity and constant-PSNR design") {
  std::vector<Image> images;
  for (uint64_t s = 0; s < 2; ++s) images.push_back(synth_image(3000 + s, {.h = 96, .w = 96}));
  auto l2 = make_l2_loss();
  auto l1 = make_l1_loss();
  std::vector<const LossFunction*> losses{l2.get(), l1.get()};
  std::vector<DistortionKind> kinds{DistortionKind::kGaussianNoise, DistortionKind::kBrightness};
  std::vector<double> levels{40.0, 30.0, 20.0};

  SensitivityTable table = sensitivity_study(losses, images, kinds, levels);
  CHECK(table.rows.size() == losses.size() * kinds.size() * levels.size());

  // Loss value grows as the PSNR target falls, per image and in the mean.
  for (const auto* loss : losses)
    for (auto kind : kinds) {
      std::vector<const SensitivityTable::Row*> seq;
      for (const auto& r : table.rows)
        if (r.loss == loss->name() && r.kind == distortion_name(kind)) seq.push_back(&r);
      REQUIRE(seq.size() == 3);
      CHECK(seq[0]->target_psnr_db == 40.0);
      for (size_t i = 1; i < seq.size(); ++i) {
        CHECK(seq[i]->mean_loss >= seq[i - 1]->mean_loss);
        for (size_t im = 0; im < images.size(); ++im)
          CHECK(seq[i]->per_image[im] >= seq[i - 1]->per_image[im]);
      }
    }

  // Achieved PSNR is constant across kinds at each level by construction.
  for (double level : levels)
    for (const auto& r : table.rows)
      if (r.target_psnr_db == level) CHECK(std::abs(r.mean_achieved_psnr_db - level) <= 0.1);
}
