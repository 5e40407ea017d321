// Copyright (c) 2026 the mdf authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>

#include "mdf/distort.hpp"
#include "mdf/image_io.hpp"
#include "mdf/pyramid.hpp"
#include "mdf/resize.hpp"
#include "mdf/synth.hpp"
#include "oracles.hpp"

using namespace mdf;

TEST_CASE("resize identity and DC preservation") {
  Image img = synth_image(1, {.h = 64, .w = 64});
  for (Filter f : {Filter::kLanczos, Filter::kBicubic, Filter::kBilinear}) {
    Image same = resize(img, 64, 64, f);
    for (size_t i = 0; i < img.data.size(); ++i)
      CHECK(std::abs(same.data[i] - img.data[i]) < 1e-6);
  }
  Image flat(32, 48, 3, 0.5);
  for (Filter f : {Filter::kLanczos, Filter::kBicubic, Filter::kBilinear}) {
    Image out = resize(flat, 17, 23, f);
    for (double v : out.data) CHECK(std::abs(v - 0.5) < 1e-6);
  }
}

TEST_CASE("resize rejects non-positive dimensions") {
  Image img(8, 8, 1, 0.1);
  CHECK_THROWS_AS(resize(img, 0, 4, Filter::kBilinear), ValidationError);
  CHECK_THROWS_AS(resize(img, 4, -1, Filter::kLanczos), ValidationError);
}

TEST_CASE("lanczos downsampling matches the direct separable-filter oracle") {
  Image impulse(33, 33, 1, 0.0);
  impulse.at(16, 16, 0) = 1.0;
  Image fast = resize(impulse, 17, 17, Filter::kLanczos);
  Image slow = oracles::lanczos_resize_loop(impulse, 17, 17);
  for (size_t i = 0; i < fast.data.size(); ++i)
    CHECK(std::abs(fast.data[i] - slow.data[i]) < 1e-9);

  Image natural = synth_image(2, {.h = 41, .w = 37});
  Image f2 = resize(natural, 19, 17, Filter::kLanczos);
  Image s2 = oracles::lanczos_resize_loop(natural, 19, 17);
  for (size_t i = 0; i < f2.data.size(); ++i) CHECK(std::abs(f2.data[i] - s2.data[i]) < 1e-9);
}

TEST_CASE("pyramid geometry follows the rounding rule") {
  Image img = synth_image(3, {.h = 256, .w = 256});
  CHECK_THROWS_AS(build_pyramid(img, PyramidSpec{8, 2.0}), ValidationError);  // coarsest 2x2

  auto levels = build_pyramid(img, PyramidSpec{5, 2.0});
  REQUIRE(levels.size() == 5);
  int expect[] = {16, 32, 64, 128, 256};
  for (int k = 0; k < 5; ++k) {
    CHECK(levels[k].h == expect[k]);
    CHECK(levels[k].w == expect[k]);
  }
  // Level K is the input bit-identically.
  CHECK(levels[4].data == img.data);

  auto single = build_pyramid(img, PyramidSpec{1, 2.0});
  REQUIRE(single.size() == 1);
  CHECK(single[0].data == img.data);

  // 250x200, K=3, rho=2: dims round(250/4)=63 round(200/4)=50, then 125x100.
  Image rect = synth_image(4, {.h = 250, .w = 200});
  auto pyr = build_pyramid(rect, PyramidSpec{3, 2.0});
  CHECK(pyr[0].h == 63);
  CHECK(pyr[0].w == 50);
  CHECK(pyr[1].h == 125);
  CHECK(pyr[1].w == 100);
  CHECK(pyr[2].h == 250);
  CHECK(pyr[2].w == 200);
}

TEST_CASE("gaussian noise statistics, determinism and zero case") {
  Image img(200, 200, 3, 0.5);
  Rng rng(77);
  Image same = add_gaussian_noise(img, 0.0, rng);
  CHECK(same.data == img.data);

  Rng r1(123), r2(123), r3(124);
  Image a = add_gaussian_noise(img, 25.0, r1);
  Image b = add_gaussian_noise(img, 25.0, r2);
  Image c = add_gaussian_noise(img, 25.0, r3);
  CHECK(a.data == b.data);  // bitwise reproducible
  CHECK(a.data != c.data);

  double var = 0.0;
  for (size_t i = 0; i < a.data.size(); ++i) {
    double d = a.data[i] - img.data[i];
    var += d * d;
  }
  var /= static_cast<double>(a.data.size());
  double sd255 = std::sqrt(var) * 255.0;
  CHECK(sd255 > 25.0 * 0.98);
  CHECK(sd255 < 25.0 * 1.02);

  Rng r4(1);
  CHECK_THROWS_AS(add_gaussian_noise(img, -1.0, r4), ValidationError);
}

TEST_CASE("jpeg roundtrip quality behavior") {
  CHECK_THROWS_AS(jpeg_roundtrip(Image(16, 16, 3, 0.5), 0), ValidationError);
  CHECK_THROWS_AS(jpeg_roundtrip(Image(16, 16, 3, 0.5), 101), ValidationError);

  // Smooth gradient at quality 100 stays above 40 dB.
  Image grad(64, 64, 3);
  for (int y = 0; y < 64; ++y)
    for (int x = 0; x < 64; ++x)
      for (int c = 0; c < 3; ++c) grad.at(y, x, c) = 0.2 + 0.6 * (x + y) / 126.0;
  Image rt = jpeg_roundtrip(grad, 100);
  CHECK(rt.h == 64);
  CHECK(rt.w == 64);
  CHECK(psnr_db(grad, rt) > 40.0);

  // Lower quality hurts more on a natural image.
  Image natural = synth_image(5, {.h = 96, .w = 96});
  double p7 = psnr_db(natural, jpeg_roundtrip(natural, 7));
  double p10 = psnr_db(natural, jpeg_roundtrip(natural, 10));
  CHECK(p7 < p10);

  // Constant image: DC-only blocks decode to a constant at any quality. The
  // DC offset stays within 2/255 once the DC quantizer is <= 32 (quality
  // >= 25 with the standard tables); at very low quality it can reach
  // dcq/16 levels, 8/255 covers the whole baseline range.
  Image flat(40, 40, 3, 0.42);
  for (int q : {7, 25, 50, 95}) {
    Image out = jpeg_roundtrip(flat, q);
    CHECK(max_value(out) - min_value(out) < 1e-9);
    double bound = q >= 25 ? 2.0 / 255.0 : 8.0 / 255.0;
    for (double v : out.data) CHECK(std::abs(v - 0.42) <= bound);
  }
}

TEST_CASE("pyramid permutation preserves level multisets and reconstructs") {
  Image img = synth_image(6, {.h = 64, .w = 64});

  // Identity permutation == exact reconstruction: check pyramid inversion.
  LaplacianPyramid pyr = LaplacianPyramid::build(img);
  Image rec = pyr.reconstruct();
  for (size_t i = 0; i < img.data.size(); ++i) CHECK(std::abs(rec.data[i] - img.data[i]) < 1e-5);

  // Histograms per level survive permutation exactly.
  LaplacianPyramid p2 = LaplacianPyramid::build(img);
  Rng rng(9);
  for (Image& level : p2.levels) {
    Image before = level;
    int n = level.h * level.w;
    std::vector<int> perm(n);
    for (int i = 0; i < n; ++i) perm[i] = i;
    for (int i = n - 1; i > 0; --i) std::swap(perm[i], perm[rng.uniform_int(0, i)]);
    Image after(level.h, level.w, level.c);
    for (int i = 0; i < n; ++i)
      for (int c = 0; c < level.c; ++c)
        after.at(i / level.w, i % level.w, c) = level.at(perm[i] / level.w, perm[i] % level.w, c);
    for (int c = 0; c < level.c; ++c) {
      std::vector<double> h1, h2;
      for (int i = 0; i < n; ++i) {
        h1.push_back(before.at(i / level.w, i % level.w, c));
        h2.push_back(after.at(i / level.w, i % level.w, c));
      }
      std::sort(h1.begin(), h1.end());
      std::sort(h2.begin(), h2.end());
      CHECK(h1 == h2);
    }
  }
}

TEST_CASE("pyramid permutation roughly preserves the octave spectrum") {
  Image img = synth_image(7, {.h = 128, .w = 128});
  Rng rng(17);
  Image scrambled = pyramid_permute(img, rng);
  CHECK(scrambled.h == img.h);

  auto before = radial_power_bands(to_gray(img), 5);
  auto after = radial_power_bands(to_gray(scrambled), 5);
  for (int b = 0; b < 5; ++b) {
    double ratio = after[b] / before[b];
    CHECK(ratio > 1.0 / 3.0);
    CHECK(ratio < 3.0);
  }
}

TEST_CASE("clamp") {
  Image img(2, 2, 1);
  img.at(0, 0, 0) = 1.3;
  img.at(0, 1, 0) = -0.2;
  img.at(1, 0, 0) = 0.7;
  img.at(1, 1, 0) = 0.0;
  Image out = clamp01(img);
  CHECK(out.at(0, 0, 0) == 1.0);
  CHECK(out.at(0, 1, 0) == 0.0);
  CHECK(out.at(1, 0, 0) == 0.7);
  CHECK(out.at(1, 1, 0) == 0.0);

  Image in_range(3, 3, 3, 0.25);
  CHECK(clamp01(in_range).data == in_range.data);
}

TEST_CASE("distort_at_target_psnr hits targets and reports unreachable ranges") {
  Image img = synth_image(8, {.h = 96, .w = 96});

  for (DistortionKind kind : {DistortionKind::kGaussianNoise, DistortionKind::kContrast,
                              DistortionKind::kSinusoid}) {
    for (double target : {40.0, 30.0, 20.0}) {
      Image out = distort_at_target_psnr(img, kind, target);
      double achieved = oracles::psnr_loop(img, out);
      CHECK(std::abs(achieved - target) <= 0.1);
    }
  }

  // Brightness on mid-gray: offset for 20 dB is exactly 0.1 (MSE = offset^2).
  Image gray(64, 64, 1, 0.5);
  double severity = 0.0;
  Image out = distort_at_target_psnr(gray, DistortionKind::kBrightness, 20.0, 7, &severity);
  CHECK(std::abs(severity - 0.1) < 1e-4);
  CHECK(std::abs(oracles::psnr_loop(gray, out) - 20.0) <= 0.1);

  // Blur tops out at the factor-4 degradation; 2 dB is unreachable.
  CHECK_THROWS_WITH_AS(distort_at_target_psnr(img, DistortionKind::kBlurDownUp, 2.0),
                       doctest::Contains("achievable range"), ValidationError);
}

TEST_CASE("image files round-trip through PNG") {
  Image img = synth_image(10, {.h = 33, .w = 47});
  std::string path = "/tmp/mdf_test_roundtrip.png";
  save_png(img, path);
  Image back = load_image(path);
  CHECK(back.h == img.h);
  CHECK(back.w == img.w);
  CHECK(back.c == img.c);
  // 8-bit quantization: within half a step.
  for (size_t i = 0; i < img.data.size(); ++i)
    CHECK(std::abs(back.data[i] - img.data[i]) <= 0.5 / 255.0 + 1e-9);
}
