// Copyright (c) 2026 the mdf authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "mdf/image.hpp"

namespace mdf {

/// Dense NCHW tensor. Templated on the scalar so the same kernels run in
/// float for training and in double for finite-difference checks.
template <typename T>
struct Tensor {
  int n = 0, c = 0, h = 0, w = 0;
  std::vector<T> v;

  Tensor() = default;
  Tensor(int n_, int c_, int h_, int w_, T fill = T(0))
      : n(n_), c(c_), h(h_), w(w_), v(static_cast<size_t>(n_) * c_ * h_ * w_, fill) {}

  size_t size() const { return v.size(); }
  bool same_shape(const Tensor& o) const { return n == o.n && c == o.c && h == o.h && w == o.w; }

  T* plane(int in, int ic) { return v.data() + ((static_cast<size_t>(in) * c + ic) * h) * w; }
  const T* plane(int in, int ic) const {
    return v.data() + ((static_cast<size_t>(in) * c + ic) * h) * w;
  }
  T* row(int in, int ic, int y) { return plane(in, ic) + static_cast<size_t>(y) * w; }
  const T* row(int in, int ic, int y) const { return plane(in, ic) + static_cast<size_t>(y) * w; }

  T& at(int in, int ic, int y, int x) { return row(in, ic, y)[x]; }
  T at(int in, int ic, int y, int x) const { return row(in, ic, y)[x]; }

  void fill(T value) { std::fill(v.begin(), v.end(), value); }

  template <typename U>
  Tensor<U> cast() const {
    Tensor<U> out(n, c, h, w);
    for (size_t i = 0; i < v.size(); ++i) out.v[i] = static_cast<U>(v[i]);
    return out;
  }
};

/// HWC [0,1] image -> 1xCxHxW tensor.
template <typename T>
Tensor<T> image_to_tensor(const Image& img) {
  Tensor<T> t(1, img.c, img.h, img.w);
  for (int ch = 0; ch < img.c; ++ch)
    for (int y = 0; y < img.h; ++y)
      for (int x = 0; x < img.w; ++x) t.at(0, ch, y, x) = static_cast<T>(img.at(y, x, ch));
  return t;
}

template <typename T>
Image tensor_to_image(const Tensor<T>& t, int batch_index = 0) {
  Image img(t.h, t.w, t.c);
  for (int ch = 0; ch < t.c; ++ch)
    for (int y = 0; y < t.h; ++y)
      for (int x = 0; x < t.w; ++x) img.at(y, x, ch) = static_cast<double>(t.at(batch_index, ch, y, x));
  return img;
}

}  // namespace mdf
