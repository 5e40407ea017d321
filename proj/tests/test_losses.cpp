// Copyright (c) 2026 the mdf authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include "mdf/losses.hpp"
#include "mdf/synth.hpp"
#include "oracles.hpp"

using namespace mdf;

namespace {

Image random_image(int h, int w, int c, uint64_t seed, double lo = 0.15, double hi = 0.85) {
  Rng rng(seed);
  Image img(h, w, c);
  for (double& v : img.data) v = rng.uniform(lo, hi);
  return img;
}

/// Correlated pair: the second is a mildly perturbed copy, like a plausible
/// reconstruction. Keeps SSIM terms away from degenerate points.
std::pair<Image, Image> correlated_pair(int h, int w, int c, uint64_t seed) {
  Image ref = synth_image(seed, {.h = h, .w = w, .channels = c});
  Rng rng(seed + 1);
  Image test = ref;
  for (double& v : test.data) v += 0.03 * rng.gaussian();
  return {ref, test};
}

}  // namespace

TEST_CASE("l1/l2 closed forms and loop oracle") {
  Image zero(8, 8, 3, 0.0);
  Image half(8, 8, 3, 0.5);
  CHECK(l2_loss(zero, zero) == 0.0);
  CHECK(l2_loss(zero, half) == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(l1_loss(zero, half) == doctest::Approx(0.5).epsilon(1e-12));

  Image a = random_image(4, 4, 1, 3);
  Image b = random_image(4, 4, 1, 4);
  CHECK(l2_loss(a, b) == doctest::Approx(oracles::mse_loop(a, b)).epsilon(1e-12));

  CHECK_THROWS_AS(l2_loss(a, Image(5, 4, 1, 0.0)), ValidationError);
}

TEST_CASE("ssim identity, oracle agreement, and shift invariance") {
  auto [ref, test] = correlated_pair(24, 20, 3, 11);
  CHECK(ssim_loss(ref, ref) == 0.0);
  CHECK(ssim(ref, ref) == doctest::Approx(1.0).epsilon(1e-12));

  double fast = ssim(test, ref);
  double slow = oracles::ssim_loop(test, ref);
  CHECK(fast == doctest::Approx(slow).epsilon(1e-6));

  // Binary checkerboard vs inverse: strong anti-correlation, loss > 1.
  Image cb(16, 16, 1), inv(16, 16, 1);
  for (int y = 0; y < 16; ++y)
    for (int x = 0; x < 16; ++x) {
      double v = ((x + y) % 2) ? 1.0 : 0.0;
      cb.at(y, x, 0) = v;
      inv.at(y, x, 0) = 1.0 - v;
    }
  double s = ssim(inv, cb);
  CHECK(s < 0.0);
  CHECK(ssim_loss(cb, inv) > 1.0);
  CHECK(s == doctest::Approx(oracles::ssim_loop(inv, cb)).epsilon(1e-6));

  // Adding the same constant to both cancels in the luminance term. Exact
  // only when window means agree, so check on a reconstruction-scale pair.
  Image ref_s = synth_image(41, {.h = 24, .w = 20});
  Rng rng(42);
  Image test_s = ref_s;
  for (double& v : test_s.data) v += 0.002 * rng.gaussian();
  Image ref_c = ref_s, test_c = test_s;
  for (double& v : ref_c.data) v += 0.1;
  for (double& v : test_c.data) v += 0.1;
  CHECK(std::abs(ssim(test_c, ref_c) - ssim(test_s, ref_s)) < 1e-6);
}

TEST_CASE("ms_ssim levels, identity, and size errors") {
  auto [ref, test] = correlated_pair(64, 64, 1, 13);
  CHECK(ms_ssim_loss(ref, ref) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(ms_ssim(ref, ref) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(ms_ssim_max_levels(64, 64) == 3);
  CHECK(ms_ssim_max_levels(16, 16) == 1);
  CHECK(ms_ssim_max_levels(256, 256) == 5);
  CHECK_THROWS_AS(ms_ssim(test, ref, 5), ValidationError);  // 64px cannot do 5 scales
  double v3 = ms_ssim(test, ref, 3);
  CHECK(v3 > 0.0);
  CHECK(v3 < 1.0);
}

TEST_CASE("ms_ssim_l1 mix behavior") {
  auto [ref, test] = correlated_pair(48, 48, 3, 17);
  double msl = ms_ssim_loss(ref, test);
  double full_mix = ms_ssim_l1_loss(ref, test, 1.0);
  CHECK(full_mix == doctest::Approx(msl).epsilon(1e-12));

  double l1_only = ms_ssim_l1_loss(ref, test, 0.0);
  CHECK(l1_only > 0.0);

  // Affine in mix: value at 0.84 equals the two-term recomputation.
  double m = 0.84;
  double mixed = ms_ssim_l1_loss(ref, test, m);
  CHECK(mixed == doctest::Approx(m * msl + (1 - m) * l1_only).epsilon(1e-9));

  CHECK_THROWS_AS(ms_ssim_l1_loss(ref, test, 1.5), ValidationError);
}

TEST_CASE("distance losses vanish exactly at identity") {
  Image img = synth_image(19, {.h = 32, .w = 32});
  for (auto make : {make_l1_loss, make_l2_loss, make_ssim_loss}) {
    auto loss = make();
    CHECK(loss->value(img, img) == 0.0);
  }
  CHECK(make_ms_ssim_loss()->value(img, img) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(make_ms_ssim_l1_loss()->value(img, img) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("finite-difference gradient checks on 16x16 doubles") {
  auto [ref16, test16] = oracles::gradcheck_pair(16, 16, 1, 23);
  for (auto& entry : {std::pair<std::string, std::unique_ptr<LossFunction>>{"l1", make_l1_loss()},
                      {"l2", make_l2_loss()},
                      {"ssim", make_ssim_loss()},
                      {"ms_ssim", make_ms_ssim_loss()},
                      {"ms_ssim_l1", make_ms_ssim_l1_loss()}}) {
    double worst = oracles::loss_gradient_check(*entry.second, ref16, test16, 40);
    INFO("loss ", entry.first, " worst rel err ", worst);
    CHECK(worst < 1e-3);
  }
}

TEST_CASE("ms_ssim gradient exercises the multi-scale path on larger images") {
  auto [ref, test] = oracles::gradcheck_pair(48, 48, 1, 29);
  auto loss = make_ms_ssim_loss(2);
  CHECK(oracles::loss_gradient_check(*loss, ref, test, 30) < 1e-3);
  auto loss3 = make_ms_ssim_l1_loss(0.84, 2);
  CHECK(oracles::loss_gradient_check(*loss3, ref, test, 30) < 1e-3);
}

TEST_CASE("composite loss linearity and lambda grid") {
  auto [ref, test] = oracles::gradcheck_pair(24, 24, 3, 31);
  auto base = std::shared_ptr<LossFunction>(make_l2_loss());
  auto feat = std::shared_ptr<LossFunction>(make_toy_feature_loss(5));

  auto zero = make_composite_loss(base, feat, 0.0);
  CHECK(zero->value(ref, test) == base->value(ref, test));

  auto one = make_composite_loss(base, feat, 1.0);
  CHECK(one->value(ref, test) ==
        doctest::Approx(base->value(ref, test) + feat->value(ref, test)).epsilon(1e-12));

  auto grid = lambda_sweep_grid();
  REQUIRE(grid.size() == 7);
  CHECK(grid.front() == doctest::Approx(1e-3));
  CHECK(grid.back() == doctest::Approx(1e3));

  // Composite gradient stays consistent with its parts. The toy feature net
  // is piecewise linear with dense kinks, so step below the kink spacing.
  CHECK(oracles::loss_gradient_check_vec(*one, ref, test, 30, 1e-5) < 1e-6);
}

TEST_CASE("loss registry parses specs and guards external weights") {
  auto& reg = LossRegistry::instance();
  CHECK(reg.make("l1")->name() == "l1");
  CHECK(reg.make("mse")->name() == "l2");
  CHECK(reg.make("ms_ssim")->multi_scale());

  CHECK_THROWS_WITH_AS(reg.make("ext:lpips"), doctest::Contains("external weights required"),
                       ValidationError);
  CHECK_THROWS_AS(reg.make("nonsense"), ValidationError);
  CHECK_THROWS_AS(reg.make("mse+x*l1"), ValidationError);

  reg.register_external("toy", [] { return make_toy_feature_loss(7); });
  auto composite = reg.make("mse+0.1*ext:toy");
  auto [ref, test] = correlated_pair(24, 24, 3, 37);
  double direct = reg.make("mse")->value(ref, test) + 0.1 * make_toy_feature_loss(7)->value(ref, test);
  CHECK(composite->value(ref, test) == doctest::Approx(direct).epsilon(1e-9));
}
