// Copyright (c) 2026 the mdf authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "mdf/stack.hpp"

namespace mdf {

/// Per-scale, per-layer feature arrays for one image.
struct FeatureSet {
  std::vector<std::vector<Tensor<float>>> scales;  // [K][L]

  int scale_count() const { return static_cast<int>(scales.size()); }
  int layer_count() const { return scales.empty() ? 0 : static_cast<int>(scales.front().size()); }
};

/// Features of the image at its native resolution through every scale's
/// discriminator. The discriminators are never applied to the scales they
/// were trained on: no per-scale resizing happens here.
FeatureSet extract_features(const DiscriminatorStack& stack, const Image& img);

/// Squared feature distances summed over all scales and layers (spatial
/// positions are summed, not averaged). Zero iff all feature maps match.
double mdf_loss(const DiscriminatorStack& stack, const Image& x, const Image& x_hat,
                std::vector<double>* per_scale = nullptr);

/// Restriction of the loss to a set of 1-based scale indices.
double mdf_loss_subset(const DiscriminatorStack& stack, const Image& x, const Image& x_hat,
                       const std::vector<int>& scales_subset);

/// Loss plus its gradient w.r.t. x_hat (gradient flows only through x_hat).
double mdf_loss_grad(const DiscriminatorStack& stack, const Image& x, const Image& x_hat,
                     Image& grad_out, const std::vector<int>* scales_subset = nullptr);

// Templated core, shared by the float production path and the double path
// used by finite-difference checks.
template <typename T>
double mdf_loss_t(const std::vector<PatchDiscriminator<T>>& discs,
                  const std::vector<int>& scales_subset, const Tensor<T>& x,
                  const Tensor<T>& x_hat, std::vector<double>* per_scale, Tensor<T>* grad_x_hat);

std::vector<int> all_scales(const DiscriminatorStack& stack);

}  // namespace mdf
