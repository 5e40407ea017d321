// Copyright (c) 2026 the mdf authors
// SPDX-License-Identifier: Apache-2.0

#include "mdf/pyramid.hpp"

#include <algorithm>
#include <numeric>

namespace mdf {

std::vector<Image> build_pyramid(const Image& img, const PyramidSpec& spec) {
  spec.validate();
  int ch = spec.level_dim(img.h, 1);
  int cw = spec.level_dim(img.w, 1);
  if (ch < kReceptiveField || cw < kReceptiveField) {
    throw ValidationError("build_pyramid: coarsest level " + std::to_string(ch) + "x" +
                          std::to_string(cw) + " is below the 11x11 receptive field");
  }
  std::vector<Image> levels;
  levels.reserve(spec.scales);
  for (int k = 1; k <= spec.scales; ++k) {
    if (k == spec.scales) {
      levels.push_back(img);
    } else {
      levels.push_back(resize(img, spec.level_dim(img.h, k), spec.level_dim(img.w, k), Filter::kLanczos));
    }
  }
  return levels;
}

LaplacianPyramid LaplacianPyramid::build(const Image& img, int max_levels) {
  LaplacianPyramid pyr;
  // Stop before any dimension halves below 8 pixels.
  int levels = 1;
  int h = img.h, w = img.w;
  while ((max_levels == 0 || levels < max_levels) && std::min(h, w) / 2 >= 8) {
    h = (h + 1) / 2;
    w = (w + 1) / 2;
    ++levels;
  }
  Image g = img;
  for (int j = 0; j < levels - 1; ++j) {
    int nh = (g.h + 1) / 2, nw = (g.w + 1) / 2;
    Image down = resize(g, nh, nw, Filter::kLanczos);
    Image up = resize(down, g.h, g.w, Filter::kBilinear);
    pyr.levels.push_back(g - up);
    pyr.dims.emplace_back(g.h, g.w);
    g = std::move(down);
  }
  pyr.levels.push_back(g);
  pyr.dims.emplace_back(g.h, g.w);
  return pyr;
}

Image LaplacianPyramid::reconstruct() const {
  Image acc = levels.back();
  for (int j = static_cast<int>(levels.size()) - 2; j >= 0; --j) {
    Image up = resize(acc, levels[j].h, levels[j].w, Filter::kBilinear);
    acc = up + levels[j];
  }
  return acc;
}

Image pyramid_permute(const Image& img, Rng& rng, int max_levels) {
  LaplacianPyramid pyr = LaplacianPyramid::build(img, max_levels);
  for (Image& level : pyr.levels) {
    int n = level.h * level.w;
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    // Fisher-Yates; whole pixels move so that color structure is kept.
    for (int i = n - 1; i > 0; --i) {
      int j = rng.uniform_int(0, i);
      std::swap(perm[i], perm[j]);
    }
    Image shuffled(level.h, level.w, level.c);
    for (int i = 0; i < n; ++i) {
      int sy = perm[i] / level.w, sx = perm[i] % level.w;
      int dy = i / level.w, dx = i % level.w;
      for (int ch = 0; ch < level.c; ++ch) shuffled.at(dy, dx, ch) = level.at(sy, sx, ch);
    }
    level = std::move(shuffled);
  }
  return pyr.reconstruct();
}

}  // namespace mdf
