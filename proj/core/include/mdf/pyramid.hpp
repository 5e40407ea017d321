// Copyright (c) 2026 the mdf authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "mdf/image.hpp"
#include "mdf/resize.hpp"

namespace mdf {

/// Minimum spatial extent any discriminator input may have (11x11 patches).
inline constexpr int kReceptiveField = 11;

/// Geometry of the scale pyramid: K levels, coarse (1) to fine (K). Level k
/// has dimensions round(H * rho^(k-K)) x round(W * rho^(k-K)), computed from
/// the original dimensions with round-half-up, never iteratively.
struct PyramidSpec {
  int scales = 8;
  double rho = 2.0;

  void validate() const {
    require(scales >= 1, "PyramidSpec: scales must be >= 1");
    require(rho > 1.0, "PyramidSpec: rho must be > 1");
  }

  int level_dim(int full_dim, int k) const {
    double f = std::pow(rho, static_cast<double>(k - scales));
    return static_cast<int>(std::floor(full_dim * f + 0.5));
  }
};

/// Lanczos scale pyramid, coarse to fine; element scales-1 (level K) is the
/// input itself, bit-identical. Throws if the coarsest level would fall below
/// the discriminator receptive field.
std::vector<Image> build_pyramid(const Image& img, const PyramidSpec& spec);

/// Laplacian pyramid with exact reconstruction: levels[j] = G_j - up(G_{j+1})
/// for j < n-1, levels[n-1] = coarsest Gaussian. Factor-2 Lanczos analysis,
/// bilinear synthesis.
struct LaplacianPyramid {
  std::vector<Image> levels;
  std::vector<std::pair<int, int>> dims;  // per-level H, W

  static LaplacianPyramid build(const Image& img, int max_levels = 0);
  Image reconstruct() const;
};

/// Shuffle pixel positions independently within every Laplacian level, then
/// reconstruct. Destroys second-order statistics while preserving each
/// level's sample multiset (hence the coarse spectrum composition).
Image pyramid_permute(const Image& img, Rng& rng, int max_levels = 0);

}  // namespace mdf
