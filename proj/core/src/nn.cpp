// Copyright (c) 2026 the mdf authors
// SPDX-License-Identifier: Apache-2.0

#include "mdf/nn.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace mdf {

template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>* bias, int pad) {
  require(x.c == w.c, "conv2d: input channels do not match kernel");
  const int K = w.h;
  const int oh = x.h + 2 * pad - K + 1;
  const int ow = x.w + 2 * pad - K + 1;
  require(oh >= 1 && ow >= 1, "conv2d: input smaller than kernel");
  Tensor<T> y(x.n, w.n, oh, ow);

#pragma omp parallel for collapse(2) schedule(static)
  for (int in = 0; in < x.n; ++in) {
    for (int oc = 0; oc < w.n; ++oc) {
      const T bv = bias ? bias->v[oc] : T(0);
      for (int oy = 0; oy < oh; ++oy) {
        T* orow = y.row(in, oc, oy);
        for (int ox = 0; ox < ow; ++ox) orow[ox] = bv;
        for (int ic = 0; ic < x.c; ++ic) {
          for (int ky = 0; ky < K; ++ky) {
            const int iy = oy + ky - pad;
            if (iy < 0 || iy >= x.h) continue;
            const T* irow = x.row(in, ic, iy);
            const T* wrow = w.row(oc, ic, ky);
            for (int kx = 0; kx < K; ++kx) {
              const T wv = wrow[kx];
              const int shift = kx - pad;
              const int x0 = std::max(0, -shift);
              const int x1 = std::min(ow, x.w - shift);
              const T* src = irow + shift;
              for (int ox = x0; ox < x1; ++ox) orow[ox] += wv * src[ox];
            }
          }
        }
      }
    }
  }
  return y;
}

template <typename T>
Tensor<T> conv2d_input_grad(const Tensor<T>& dy, const Tensor<T>& w, int pad) {
  const int K = w.h;
  // Flip spatially and swap in/out channel roles.
  Tensor<T> wt(w.c, w.n, K, K);
  for (int oc = 0; oc < w.n; ++oc)
    for (int ic = 0; ic < w.c; ++ic)
      for (int ky = 0; ky < K; ++ky)
        for (int kx = 0; kx < K; ++kx)
          wt.at(ic, oc, ky, kx) = w.at(oc, ic, K - 1 - ky, K - 1 - kx);
  return conv2d_forward(dy, wt, static_cast<const Tensor<T>*>(nullptr), K - 1 - pad);
}

template <typename T>
void conv2d_weight_grad(const Tensor<T>& x, const Tensor<T>& dy, int pad, Tensor<T>& gw,
                        Tensor<T>* gb) {
  const int K = gw.h;
  const int oh = dy.h, ow = dy.w;

#pragma omp parallel for schedule(static)
  for (int oc = 0; oc < gw.n; ++oc) {
    if (gb) {
      double acc = 0.0;
      for (int in = 0; in < dy.n; ++in) {
        const T* p = dy.plane(in, oc);
        for (int i = 0; i < oh * ow; ++i) acc += static_cast<double>(p[i]);
      }
      gb->v[oc] += static_cast<T>(acc);
    }
    for (int ic = 0; ic < gw.c; ++ic) {
      for (int ky = 0; ky < K; ++ky) {
        for (int kx = 0; kx < K; ++kx) {
          double acc = 0.0;
          for (int in = 0; in < dy.n; ++in) {
            for (int oy = 0; oy < oh; ++oy) {
              const int iy = oy + ky - pad;
              if (iy < 0 || iy >= x.h) continue;
              const T* dyr = dy.row(in, oc, oy);
              const T* xr = x.row(in, ic, iy);
              const int shift = kx - pad;
              const int x0 = std::max(0, -shift);
              const int x1 = std::min(ow, x.w - shift);
              const T* src = xr + shift;
              T dot = T(0);
              for (int ox = x0; ox < x1; ++ox) dot += dyr[ox] * src[ox];
              acc += static_cast<double>(dot);
            }
          }
          gw.at(oc, ic, ky, kx) += static_cast<T>(acc);
        }
      }
    }
  }
}

template Tensor<float> conv2d_forward<float>(const Tensor<float>&, const Tensor<float>&,
                                             const Tensor<float>*, int);
template Tensor<double> conv2d_forward<double>(const Tensor<double>&, const Tensor<double>&,
                                               const Tensor<double>*, int);
template Tensor<float> conv2d_input_grad<float>(const Tensor<float>&, const Tensor<float>&, int);
template Tensor<double> conv2d_input_grad<double>(const Tensor<double>&, const Tensor<double>&, int);
template void conv2d_weight_grad<float>(const Tensor<float>&, const Tensor<float>&, int,
                                        Tensor<float>&, Tensor<float>*);
template void conv2d_weight_grad<double>(const Tensor<double>&, const Tensor<double>&, int,
                                         Tensor<double>&, Tensor<double>*);

}  // namespace mdf
