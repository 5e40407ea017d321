// Copyright (c) 2026 the mdf authors
// SPDX-License-Identifier: Apache-2.0

#include "mdf/image.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mdf {

bool Image::finite() const {
  for (double v : data)
    if (!std::isfinite(v)) return false;
  return true;
}

uint64_t Image::content_hash() const {
  uint64_t h0 = fnv1a64(&h, sizeof(h));
  h0 = fnv1a64(&w, sizeof(w), h0);
  h0 = fnv1a64(&c, sizeof(c), h0);
  return fnv1a64(data.data(), data.size() * sizeof(double), h0);
}

Image clamp01(const Image& img) {
  Image out = img;
  for (double& v : out.data) v = std::clamp(v, 0.0, 1.0);
  return out;
}

Image to_gray(const Image& img) {
  if (img.c == 1) return img;
  Image out(img.h, img.w, 1);
  for (int y = 0; y < img.h; ++y)
    for (int x = 0; x < img.w; ++x)
      out.at(y, x, 0) = 0.2989 * img.at(y, x, 0) + 0.5870 * img.at(y, x, 1) + 0.1140 * img.at(y, x, 2);
  return out;
}

static void check_same_shape(const Image& a, const Image& b, const char* op) {
  require(a.same_shape(b), std::string(op) + ": image shapes differ");
}

double mse(const Image& a, const Image& b) {
  check_same_shape(a, b, "mse");
  double s = 0.0;
  for (size_t i = 0; i < a.data.size(); ++i) {
    double d = a.data[i] - b.data[i];
    s += d * d;
  }
  return s / static_cast<double>(a.data.size());
}

double mean_abs_diff(const Image& a, const Image& b) {
  check_same_shape(a, b, "mean_abs_diff");
  double s = 0.0;
  for (size_t i = 0; i < a.data.size(); ++i) s += std::abs(a.data[i] - b.data[i]);
  return s / static_cast<double>(a.data.size());
}

double psnr_db(const Image& a, const Image& b, double peak) {
  double m = mse(a, b);
  if (m == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / m);
}

Image operator+(const Image& a, const Image& b) {
  check_same_shape(a, b, "operator+");
  Image out = a;
  for (size_t i = 0; i < out.data.size(); ++i) out.data[i] += b.data[i];
  return out;
}

Image operator-(const Image& a, const Image& b) {
  check_same_shape(a, b, "operator-");
  Image out = a;
  for (size_t i = 0; i < out.data.size(); ++i) out.data[i] -= b.data[i];
  return out;
}

Image scale(const Image& a, double s) {
  Image out = a;
  for (double& v : out.data) v *= s;
  return out;
}

double min_value(const Image& img) { return *std::min_element(img.data.begin(), img.data.end()); }
double max_value(const Image& img) { return *std::max_element(img.data.begin(), img.data.end()); }

double mean_value(const Image& img) {
  double s = 0.0;
  for (double v : img.data) s += v;
  return s / static_cast<double>(img.data.size());
}

double variance(const Image& img) {
  double m = mean_value(img);
  double s = 0.0;
  for (double v : img.data) s += (v - m) * (v - m);
  return s / static_cast<double>(img.data.size());
}

}  // namespace mdf
