// Copyright (c) 2026 the mdf authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include "mdf/probe.hpp"
#include "mdf/singan.hpp"
#include "mdf/synth.hpp"

using namespace mdf;

namespace {

std::vector<std::vector<double>> gaussian_cloud(int n, int dim, double center, double spread,
                                                uint64_t seed) {
  Rng rng(seed);
  std::vector<std::vector<double>> pts(n, std::vector<double>(dim));
  for (auto& p : pts)
    for (auto& v : p) v = center + spread * rng.gaussian();
  return pts;
}

}  // namespace

TEST_CASE("silhouette: identical distributions score near zero, separated ones high") {
  auto a = gaussian_cloud(20, 8, 0.0, 1.0, 1);
  auto b = gaussian_cloud(20, 8, 0.0, 1.0, 2);
  double same = mean_silhouette(a, b);
  CHECK(std::abs(same) < 0.05);

  auto c = gaussian_cloud(20, 8, 10.0, 1.0, 3);
  double split = mean_silhouette(a, c);
  CHECK(split > 0.8);

  CHECK_THROWS_AS(mean_silhouette({{1.0}}, a), ValidationError);
}

TEST_CASE("stack feature extractor emits channel-averaged concatenated taps") {
  TrainHyper hyper = TrainHyper::desk(1, 4);
  hyper.base_width = 8;
  auto stack = std::make_shared<DiscriminatorStack>();
  for (int k = 1; k <= 2; ++k)
    stack->scales.push_back(make_scale_models(k, 3, hyper).discriminator);
  stack->meta.scales = 2;
  stack->meta.channels = 3;

  FeatureVectorFn fn = stack_feature_extractor(stack);
  Image img = synth_image(5, {.h = 21, .w = 21});
  std::vector<double> v = fn(img);
  // Valid conv arithmetic: taps at 19,17,15,13,11 squared, twice (2 scales).
  size_t expect = 2 * (19 * 19 + 17 * 17 + 15 * 15 + 13 * 13 + 11 * 11);
  CHECK(v.size() == expect);
  CHECK(fn(img) == v);  // deterministic
}

TEST_CASE("manifold probe: shapes, labels, and pair statistics") {
  auto extractor = [](const Image& img) {
    // Cheap stand-in: 16-bin histogram.
    std::vector<double> h(16, 0.0);
    for (double v : img.data) {
      int b = std::min(15, static_cast<int>(v * 16.0));
      h[b] += 1.0;
    }
    return h;
  };

  std::vector<LabeledSet> sets(2);
  sets[0].label = "bright";
  sets[1].label = "dark";
  for (uint64_t s = 0; s < 6; ++s) {
    Image b = synth_image(10 + s, {.h = 24, .w = 24});
    for (double& v : b.data) v = std::min(1.0, v + 0.4);
    Image d = synth_image(20 + s, {.h = 24, .w = 24});
    for (double& v : d.data) v = std::max(0.0, v - 0.4);
    sets[0].images.push_back(b);
    sets[1].images.push_back(d);
  }

  ProbeResult r = manifold_probe(extractor, sets, 3, 120);
  CHECK(r.labels.size() == 2);
  CHECK(r.point_labels.size() == 12);
  CHECK(r.embedding.size() == 12);
  REQUIRE(r.pair_stats.size() == 1);
  CHECK(r.pair_stats[0].silhouette > 0.5);

  std::vector<LabeledSet> one(1);
  one[0].label = "only";
  one[0].images = sets[0].images;
  CHECK_THROWS_AS(manifold_probe(extractor, one, 3, 50), ValidationError);
}

TEST_CASE("tsne embedding is deterministic given the seed") {
  auto pts = gaussian_cloud(12, 6, 0.0, 1.0, 9);
  auto e1 = tsne3(pts, 5.0, 100, 7);
  auto e2 = tsne3(pts, 5.0, 100, 7);
  CHECK(e1 == e2);
  auto e3 = tsne3(pts, 5.0, 100, 8);
  CHECK(e1 != e3);
}
