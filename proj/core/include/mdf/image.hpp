// Copyright (c) 2026 the mdf authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "mdf/common.hpp"

namespace mdf {

/// Floating-point raster, channels-last (H x W x C), nominal range [0,1].
/// Values may transiently leave [0,1] inside model outputs; clamp() restores
/// the range before anything is encoded to 8 bits.
struct Image {
  int h = 0;
  int w = 0;
  int c = 0;
  std::vector<double> data;  // (y * w + x) * c + ch

  Image() = default;
  Image(int h_, int w_, int c_, double fill = 0.0) : h(h_), w(w_), c(c_), data(static_cast<size_t>(h_) * w_ * c_, fill) {
    require(h_ >= 1 && w_ >= 1, "Image: dimensions must be >= 1");
    require(c_ == 1 || c_ == 3, "Image: channel count must be 1 or 3");
  }

  double& at(int y, int x, int ch) { return data[(static_cast<size_t>(y) * w + x) * c + ch]; }
  double at(int y, int x, int ch) const { return data[(static_cast<size_t>(y) * w + x) * c + ch]; }

  size_t size() const { return data.size(); }
  bool same_shape(const Image& o) const { return h == o.h && w == o.w && c == o.c; }

  bool finite() const;

  /// Content hash over dimensions and raw samples.
  uint64_t content_hash() const;
};

/// Clamp every sample into [0,1].
Image clamp01(const Image& img);

Image to_gray(const Image& img);

double mse(const Image& a, const Image& b);
double mean_abs_diff(const Image& a, const Image& b);

/// 10*log10(peak^2 / MSE); +inf when a == b exactly.
double psnr_db(const Image& a, const Image& b, double peak = 1.0);

Image operator+(const Image& a, const Image& b);
Image operator-(const Image& a, const Image& b);
Image scale(const Image& a, double s);

double min_value(const Image& img);
double max_value(const Image& img);
double mean_value(const Image& img);
double variance(const Image& img);

}  // namespace mdf
