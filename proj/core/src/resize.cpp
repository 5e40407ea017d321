// Copyright (c) 2026 the mdf authors
// SPDX-License-Identifier: Apache-2.0

#include "mdf/resize.hpp"

#include <algorithm>
#include <cmath>

namespace mdf {

Filter filter_from_name(const std::string& name) {
  if (name == "lanczos") return Filter::kLanczos;
  if (name == "bicubic") return Filter::kBicubic;
  if (name == "bilinear") return Filter::kBilinear;
  throw ValidationError("unknown resize filter: " + name);
}

std::string filter_name(Filter f) {
  switch (f) {
    case Filter::kLanczos: return "lanczos";
    case Filter::kBicubic: return "bicubic";
    default: return "bilinear";
  }
}

namespace {

double sinc(double x) {
  if (x == 0.0) return 1.0;
  double px = M_PI * x;
  return std::sin(px) / px;
}

double lanczos3(double x) {
  x = std::abs(x);
  if (x >= 3.0) return 0.0;
  return sinc(x) * sinc(x / 3.0);
}

// Keys cubic, a = -0.5.
double bicubic(double x) {
  x = std::abs(x);
  const double a = -0.5;
  if (x < 1.0) return ((a + 2.0) * x - (a + 3.0)) * x * x + 1.0;
  if (x < 2.0) return (((x - 5.0) * x + 8.0) * x - 4.0) * a;
  return 0.0;
}

double triangle(double x) {
  x = std::abs(x);
  return x < 1.0 ? 1.0 - x : 0.0;
}

double kernel_value(Filter f, double x) {
  switch (f) {
    case Filter::kLanczos: return lanczos3(x);
    case Filter::kBicubic: return bicubic(x);
    default: return triangle(x);
  }
}

double kernel_support(Filter f) {
  switch (f) {
    case Filter::kLanczos: return 3.0;
    case Filter::kBicubic: return 2.0;
    default: return 1.0;
  }
}

struct TapTable {
  int taps = 0;
  std::vector<int> first;       // first source index per output sample
  std::vector<double> weights;  // taps weights per output sample
};

TapTable make_taps(int in_n, int out_n, Filter f) {
  TapTable t;
  double scale = static_cast<double>(in_n) / out_n;
  double fscale = std::max(scale, 1.0);  // widen kernel when minifying
  double support = kernel_support(f) * fscale;
  t.taps = static_cast<int>(std::ceil(support)) * 2 + 1;
  t.first.resize(out_n);
  t.weights.assign(static_cast<size_t>(out_n) * t.taps, 0.0);
  for (int o = 0; o < out_n; ++o) {
    double center = (o + 0.5) * scale - 0.5;
    int first = static_cast<int>(std::floor(center - support + 0.5));
    t.first[o] = first;
    double sum = 0.0;
    for (int k = 0; k < t.taps; ++k) {
      double x = (first + k - center) / fscale;
      double wv = kernel_value(f, x);
      t.weights[static_cast<size_t>(o) * t.taps + k] = wv;
      sum += wv;
    }
    if (sum != 0.0) {
      for (int k = 0; k < t.taps; ++k) t.weights[static_cast<size_t>(o) * t.taps + k] /= sum;
    }
  }
  return t;
}

}  // namespace

Image resize(const Image& img, int out_h, int out_w, Filter filter) {
  require(out_h >= 1 && out_w >= 1, "resize: target dimensions must be >= 1");

  // Horizontal pass, then vertical.
  TapTable tx = make_taps(img.w, out_w, filter);
  Image tmp(img.h, out_w, img.c);
  for (int y = 0; y < img.h; ++y) {
    for (int o = 0; o < out_w; ++o) {
      const double* wrow = &tx.weights[static_cast<size_t>(o) * tx.taps];
      int first = tx.first[o];
      for (int ch = 0; ch < img.c; ++ch) {
        double acc = 0.0;
        for (int k = 0; k < tx.taps; ++k) {
          int sx = std::clamp(first + k, 0, img.w - 1);
          acc += wrow[k] * img.at(y, sx, ch);
        }
        tmp.at(y, o, ch) = acc;
      }
    }
  }

  TapTable ty = make_taps(img.h, out_h, filter);
  Image out(out_h, out_w, img.c);
  for (int o = 0; o < out_h; ++o) {
    const double* wrow = &ty.weights[static_cast<size_t>(o) * ty.taps];
    int first = ty.first[o];
    for (int x = 0; x < out_w; ++x) {
      for (int ch = 0; ch < img.c; ++ch) {
        double acc = 0.0;
        for (int k = 0; k < ty.taps; ++k) {
          int sy = std::clamp(first + k, 0, img.h - 1);
          acc += wrow[k] * tmp.at(sy, x, ch);
        }
        out.at(o, x, ch) = acc;
      }
    }
  }
  return out;
}

}  // namespace mdf
