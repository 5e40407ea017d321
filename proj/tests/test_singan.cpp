// Copyright (c) 2026 the mdf authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <fstream>

#include "mdf/image_io.hpp"
#include "mdf/mdf_loss.hpp"
#include "mdf/singan.hpp"
#include "mdf/synth.hpp"

using namespace mdf;

namespace {

TrainHyper tiny_hyper(int iterations, uint64_t seed) {
  TrainHyper h = TrainHyper::desk(iterations, seed);
  h.base_width = 16;
  return h;
}

}  // namespace

TEST_CASE("make_scale_models enforces the receptive-field contract") {
  TrainHyper h;
  h.seed = 1;
  ScaleModels sm = make_scale_models(1, 3, h);
  CHECK(sm.discriminator.receptive_field() == 11);  // 1 + 5*(3-1)
  CHECK(sm.scale_index == 1);
  CHECK_FALSE(sm.trained);

  // Activation map is (n-10)x(m-10) and lands in [0,1] at init.
  Tensor<float> x(1, 3, 21, 15);
  Rng rng(2);
  for (auto& v : x.v) v = static_cast<float>(rng.uniform());
  auto tr = sm.discriminator.run(x, true);
  CHECK(tr.sig.h == 11);
  CHECK(tr.sig.w == 5);
  for (float v : tr.sig.v) {
    CHECK(v >= 0.0f);
    CHECK(v <= 1.0f);
  }

  TrainHyper bad = h;
  bad.depth = 4;  // receptive field 9
  CHECK_THROWS_WITH_AS(make_scale_models(1, 3, bad), doctest::Contains("receptive field"),
                       ValidationError);
  bad.strict_receptive_field = false;
  CHECK_NOTHROW(make_scale_models(1, 3, bad));
}

TEST_CASE("width schedule doubles every few scales and is capped") {
  TrainHyper h;
  CHECK(h.width_at(1) == 32);
  CHECK(h.width_at(4) == 32);
  CHECK(h.width_at(5) == 64);
  CHECK(h.width_at(8) == 64);
  CHECK(h.width_at(16) == 128);  // capped
}

TEST_CASE("corrupt_for_task honors the task semantics") {
  Image img = synth_image(4, {.h = 96, .w = 96});

  Rng r1(5);
  Image same = corrupt_for_task(img, TaskSpec::sisr(), r1);
  CHECK(same.data == img.data);  // z^k = 0

  // Forced sigma 55: residual std within 5%.
  Rng r2(6);
  Image noisy = corrupt_for_task(img, TaskSpec::denoise(55.0, 55.0), r2);
  double var = 0.0;
  for (size_t i = 0; i < img.data.size(); ++i) {
    double d = noisy.data[i] - img.data[i];
    var += d * d;
  }
  double sd255 = std::sqrt(var / img.data.size()) * 255.0;
  CHECK(sd255 > 55.0 * 0.95);
  CHECK(sd255 < 55.0 * 1.05);

  // Fixed quality: delegation to the codec op is bit-exact.
  Rng r3(7);
  Image jp = corrupt_for_task(img, TaskSpec::jpeg(7, 7), r3);
  CHECK(jp.data == jpeg_roundtrip(img, 7).data);
}

TEST_CASE("train_scale rejects untrained lower scales") {
  Image seed = synth_image(11, {.h = 32, .w = 32});
  auto pyr = build_pyramid(seed, PyramidSpec{2, 2.0});
  CHECK_THROWS_WITH_AS(train_scale(2, pyr, nullptr, TaskSpec::denoise(), tiny_hyper(5, 1)),
                       doctest::Contains("untrained"), ValidationError);
  CHECK_THROWS_AS(train_scale(3, pyr, nullptr, TaskSpec::denoise(), tiny_hyper(5, 1)),
                  ValidationError);
}

TEST_CASE("desk-scale stack training: structure, determinism, freeze") {
  Image seed = synth_image(12, {.h = 32, .w = 32});
  PyramidSpec spec{2, 2.0};
  TaskSpec task = TaskSpec::denoise();
  TrainHyper hyper = tiny_hyper(60, 42);

  Phase1Result r1 = train_mdf_stack(seed, task, spec, hyper);
  CHECK(r1.stack.scale_count() == 2);
  CHECK(r1.reports.size() == 2);
  CHECK(r1.reports[0].curve.size() == 60);
  CHECK(r1.stack.meta.alpha == 100.0);
  CHECK(r1.stack.meta.seed_hashes.size() == 1);

  // Discrimination should at least point the right way after 60 iterations.
  CHECK(r1.reports.back().final_margin > 0.0);

  // Determinism: a second run yields the same loss on a fixed probe pair.
  Phase1Result r2 = train_mdf_stack(seed, task, spec, hyper);
  Image probe_a = synth_image(13, {.h = 24, .w = 24});
  Image probe_b = synth_image(14, {.h = 24, .w = 24});
  double l1v = mdf_loss(r1.stack, probe_a, probe_b);
  double l2v = mdf_loss(r2.stack, probe_a, probe_b);
  CHECK(std::abs(l1v - l2v) <= 1e-6 * std::max(1.0, std::abs(l1v)));

  // Frozen: re-evaluating twice gives identical outputs.
  CHECK(mdf_loss(r1.stack, probe_a, probe_b) == l1v);

  // Different seed -> different stack.
  TrainHyper other = hyper;
  other.seed = 43;
  Phase1Result r3 = train_mdf_stack(seed, task, spec, other);
  CHECK(mdf_loss(r3.stack, probe_a, probe_b) != l1v);
}

TEST_CASE("single-scale stack degenerates to one discriminator") {
  Image seed = synth_image(15, {.h = 16, .w = 16});
  Phase1Result r = train_mdf_stack(seed, TaskSpec::sisr(), PyramidSpec{1, 2.0}, tiny_hyper(8, 3));
  CHECK(r.stack.scale_count() == 1);
  Image a = synth_image(16, {.h = 16, .w = 16});
  Image b = synth_image(17, {.h = 16, .w = 16});
  CHECK(mdf_loss(r.stack, a, b) ==
        doctest::Approx(mdf_loss_subset(r.stack, a, b, {1})).epsilon(1e-9));
}

TEST_CASE("multi-seed training: empty list rejected, one seed matches single-seed") {
  CHECK_THROWS_AS(
      train_multi_seed_stack({}, TaskSpec::denoise(), PyramidSpec{1, 2.0}, tiny_hyper(4, 9)),
      ValidationError);

  Image seed = synth_image(18, {.h = 16, .w = 16});
  TrainHyper hyper = tiny_hyper(10, 21);
  Phase1Result single = train_mdf_stack(seed, TaskSpec::denoise(), PyramidSpec{1, 2.0}, hyper);
  Phase1Result multi =
      train_multi_seed_stack({seed}, TaskSpec::denoise(), PyramidSpec{1, 2.0}, hyper);
  Image a = synth_image(19, {.h = 16, .w = 16});
  Image b = synth_image(20, {.h = 16, .w = 16});
  CHECK(mdf_loss(single.stack, a, b) == mdf_loss(multi.stack, a, b));

  // A handful of seeds trains without error at desk scale.
  std::vector<Image> seeds;
  for (uint64_t s = 0; s < 4; ++s) seeds.push_back(synth_image(30 + s, {.h = 16, .w = 16}));
  Phase1Result four =
      train_multi_seed_stack(seeds, TaskSpec::denoise(), PyramidSpec{1, 2.0}, tiny_hyper(12, 5));
  CHECK(four.stack.scale_count() == 1);
  CHECK(four.stack.meta.seed_hashes.size() == 4);
  CHECK(four.reconstructions.size() == 4);
}

TEST_CASE("adversarial-only negative control runs (alpha = 0)") {
  Image seed = synth_image(23, {.h = 16, .w = 16});
  TrainHyper hyper = tiny_hyper(8, 7);
  hyper.alpha = 0.0;
  Phase1Result r = train_mdf_stack(seed, TaskSpec::denoise(), PyramidSpec{1, 2.0}, hyper);
  CHECK(r.stack.scale_count() == 1);

  TrainHyper bad = hyper;
  bad.alpha = -1.0;
  CHECK_THROWS_AS(train_mdf_stack(seed, TaskSpec::denoise(), PyramidSpec{1, 2.0}, bad),
                  ValidationError);
}

TEST_CASE("training log CSV has one row per scale iteration") {
  Image seed = synth_image(24, {.h = 16, .w = 16});
  Phase1Result r = train_mdf_stack(seed, TaskSpec::denoise(), PyramidSpec{1, 2.0}, tiny_hyper(6, 8));
  std::string path = "/tmp/mdf_test_log.csv";
  write_training_log(r.reports, path);
  std::ifstream in(path);
  std::string line;
  int rows = 0;
  std::getline(in, line);
  CHECK(line == "scale,iteration,d_adv,g_adv,rec_mse");
  while (std::getline(in, line))
    if (!line.empty()) ++rows;
  CHECK(rows == 6);
}
