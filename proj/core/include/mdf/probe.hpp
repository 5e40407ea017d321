// Copyright (c) 2026 the mdf authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <functional>

#include "mdf/mdf_loss.hpp"

namespace mdf {

/// Pluggable extractor for the manifold probe: image -> flat feature vector.
using FeatureVectorFn = std::function<std::vector<double>(const Image&)>;

/// Channel-averaged, flattened, concatenated taps of every scale.
FeatureVectorFn stack_feature_extractor(std::shared_ptr<const DiscriminatorStack> stack);

/// Mean silhouette coefficient of two labeled point sets in raw feature
/// space (Euclidean). Near 0 for inseparable sets, toward 1 when separated.
double mean_silhouette(const std::vector<std::vector<double>>& a,
                       const std::vector<std::vector<double>>& b);

struct LabeledSet {
  std::string label;
  std::vector<Image> images;
};

struct ProbeResult {
  std::vector<std::string> labels;                      // per set
  std::vector<int> point_labels;                        // set index per point
  std::vector<std::array<double, 3>> embedding;         // t-SNE, plots only
  struct PairStat {
    std::string a, b;
    double silhouette;
  };
  std::vector<PairStat> pair_stats;                     // the testable statistic
};

/// Extracts features for every image, computes the embedding-free silhouette
/// for every label pair and a 3-D t-SNE embedding for plotting.
ProbeResult manifold_probe(const FeatureVectorFn& extractor, const std::vector<LabeledSet>& sets,
                           uint64_t seed = 0, int tsne_iterations = 400);

/// Exact 3-D t-SNE (small point counts), deterministic for a fixed seed.
std::vector<std::array<double, 3>> tsne3(const std::vector<std::vector<double>>& points,
                                         double perplexity, int iterations, uint64_t seed);

}  // namespace mdf
