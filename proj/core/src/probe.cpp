// Copyright (c) 2026 the mdf authors
// SPDX-License-Identifier: Apache-2.0

#include "mdf/probe.hpp"

#include <algorithm>
#include <cmath>

namespace mdf {

FeatureVectorFn stack_feature_extractor(std::shared_ptr<const DiscriminatorStack> stack) {
  require(stack && !stack->scales.empty(), "stack_feature_extractor: empty stack");
  return [stack](const Image& img) {
    FeatureSet fs = extract_features(*stack, img);
    std::vector<double> out;
    for (const auto& scale : fs.scales)
      for (const auto& tap : scale) {
        // Average across channels, keep spatial layout.
        size_t plane = static_cast<size_t>(tap.h) * tap.w;
        size_t base = out.size();
        out.resize(base + plane, 0.0);
        for (int c = 0; c < tap.c; ++c) {
          const float* p = tap.plane(0, c);
          for (size_t i = 0; i < plane; ++i) out[base + i] += p[i];
        }
        for (size_t i = 0; i < plane; ++i) out[base + i] /= tap.c;
      }
    return out;
  };
}

namespace {

double euclid(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

}  // namespace

double mean_silhouette(const std::vector<std::vector<double>>& a,
                       const std::vector<std::vector<double>>& b) {
  require(a.size() >= 2 && b.size() >= 2, "mean_silhouette: need >= 2 points per set");
  size_t na = a.size(), nb = b.size();
  double total = 0.0;
  auto side = [&](const std::vector<std::vector<double>>& own,
                  const std::vector<std::vector<double>>& other) {
    double s = 0.0;
    for (size_t i = 0; i < own.size(); ++i) {
      double intra = 0.0;
      for (size_t j = 0; j < own.size(); ++j)
        if (i != j) intra += euclid(own[i], own[j]);
      intra /= static_cast<double>(own.size() - 1);
      double inter = 0.0;
      for (const auto& o : other) inter += euclid(own[i], o);
      inter /= static_cast<double>(other.size());
      double den = std::max(intra, inter);
      s += den > 0.0 ? (inter - intra) / den : 0.0;
    }
    return s;
  };
  total = side(a, b) + side(b, a);
  return total / static_cast<double>(na + nb);
}

std::vector<std::array<double, 3>> tsne3(const std::vector<std::vector<double>>& points,
                                         double perplexity, int iterations, uint64_t seed) {
  size_t n = points.size();
  require(n >= 4, "tsne3: need at least 4 points");
  perplexity = std::min(perplexity, (n - 1) / 3.0);

  // Pairwise squared distances.
  std::vector<double> d2(n * n, 0.0);
  for (size_t i = 0; i < n; ++i)
    for (size_t j = i + 1; j < n; ++j) {
      double d = euclid(points[i], points[j]);
      d2[i * n + j] = d2[j * n + i] = d * d;
    }

  // Per-point precision by binary search on the perplexity.
  std::vector<double> p(n * n, 0.0);
  for (size_t i = 0; i < n; ++i) {
    double lo = 1e-20, hi = 1e20, beta = 1.0;
    for (int it = 0; it < 64; ++it) {
      double sum = 0.0, h = 0.0;
      for (size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        double e = std::exp(-d2[i * n + j] * beta);
        sum += e;
      }
      if (sum <= 0.0) {
        hi = beta;
        beta = 0.5 * (lo + hi);
        continue;
      }
      for (size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        double e = std::exp(-d2[i * n + j] * beta) / sum;
        if (e > 1e-12) h -= e * std::log(e);
      }
      double target = std::log(perplexity);
      if (h > target)
        lo = beta;
      else
        hi = beta;
      beta = hi < 1e19 ? 0.5 * (lo + hi) : beta * 2.0;
    }
    double sum = 0.0;
    for (size_t j = 0; j < n; ++j)
      if (j != i) sum += std::exp(-d2[i * n + j] * beta);
    for (size_t j = 0; j < n; ++j)
      if (j != i) p[i * n + j] = std::exp(-d2[i * n + j] * beta) / sum;
  }
  // Symmetrize.
  std::vector<double> pij(n * n, 0.0);
  for (size_t i = 0; i < n; ++i)
    for (size_t j = 0; j < n; ++j)
      pij[i * n + j] = std::max((p[i * n + j] + p[j * n + i]) / (2.0 * n), 1e-12);

  Rng rng(seed, 0x75e3ULL);
  std::vector<std::array<double, 3>> y(n), vel(n, {0, 0, 0});
  for (auto& pt : y)
    for (auto& c : pt) c = rng.gaussian() * 1e-4;

  double exaggeration = 4.0;
  for (int it = 0; it < iterations; ++it) {
    if (it == iterations / 4) exaggeration = 1.0;
    // Student-t affinities in the embedding.
    std::vector<double> num(n * n, 0.0);
    double qsum = 0.0;
    for (size_t i = 0; i < n; ++i)
      for (size_t j = i + 1; j < n; ++j) {
        double d = 0.0;
        for (int c = 0; c < 3; ++c) {
          double diff = y[i][c] - y[j][c];
          d += diff * diff;
        }
        double v = 1.0 / (1.0 + d);
        num[i * n + j] = num[j * n + i] = v;
        qsum += 2.0 * v;
      }
    double momentum = it < iterations / 4 ? 0.5 : 0.8;
    for (size_t i = 0; i < n; ++i) {
      std::array<double, 3> grad{0, 0, 0};
      for (size_t j = 0; j < n; ++j) {
        if (i == j) continue;
        double q = std::max(num[i * n + j] / qsum, 1e-12);
        double coef = 4.0 * (exaggeration * pij[i * n + j] - q) * num[i * n + j];
        for (int c = 0; c < 3; ++c) grad[c] += coef * (y[i][c] - y[j][c]);
      }
      for (int c = 0; c < 3; ++c) {
        vel[i][c] = momentum * vel[i][c] - 200.0 * grad[c];
        y[i][c] += vel[i][c];
      }
    }
  }
  return y;
}

ProbeResult manifold_probe(const FeatureVectorFn& extractor, const std::vector<LabeledSet>& sets,
                           uint64_t seed, int tsne_iterations) {
  require(sets.size() >= 2, "manifold_probe: need at least 2 labeled sets");
  for (const auto& s : sets)
    require(s.images.size() >= 2, "manifold_probe: set '" + s.label + "' has fewer than 2 images");

  ProbeResult result;
  std::vector<std::vector<std::vector<double>>> features(sets.size());
  std::vector<std::vector<double>> all;
  for (size_t s = 0; s < sets.size(); ++s) {
    result.labels.push_back(sets[s].label);
    for (const Image& img : sets[s].images) {
      features[s].push_back(extractor(img));
      result.point_labels.push_back(static_cast<int>(s));
      all.push_back(features[s].back());
    }
  }
  for (size_t a = 0; a < sets.size(); ++a)
    for (size_t b = a + 1; b < sets.size(); ++b)
      result.pair_stats.push_back(
          {sets[a].label, sets[b].label, mean_silhouette(features[a], features[b])});

  result.embedding = tsne3(all, 15.0, tsne_iterations, seed);
  return result;
}

}  // namespace mdf
