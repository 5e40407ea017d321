// Copyright (c) 2026 the mdf authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <memory>

#include "mdf/tensor.hpp"

namespace mdf {

// ---------------------------------------------------------------------------
// Convolution kernels (stride 1, zero padding). Each output element is
// accumulated in a fixed sequential order and planes are independent, so
// results are identical for any OpenMP thread count.
// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>* bias, int pad);

/// Gradient w.r.t. the convolution input: full correlation with flipped
/// weights, realized as conv2d_forward with transposed-flipped kernels.
template <typename T>
Tensor<T> conv2d_input_grad(const Tensor<T>& dy, const Tensor<T>& w, int pad);

/// Accumulates gw (and gb when non-null) for y = conv(x, w) + b.
template <typename T>
void conv2d_weight_grad(const Tensor<T>& x, const Tensor<T>& dy, int pad, Tensor<T>& gw,
                        Tensor<T>* gb);

// ---------------------------------------------------------------------------
// Layers
// ---------------------------------------------------------------------------

template <typename T>
struct Conv2d {
  int in_ch = 0, out_ch = 0, k = 3, pad = 0;
  Tensor<T> w;   // [out_ch][in_ch][k][k]
  Tensor<T> b;   // [1][out_ch][1][1]
  Tensor<T> gw;  // gradients, same shapes
  Tensor<T> gb;

  Conv2d() = default;
  Conv2d(int in_c, int out_c, int kernel, int padding)
      : in_ch(in_c), out_ch(out_c), k(kernel), pad(padding),
        w(out_c, in_c, kernel, kernel), b(1, out_c, 1, 1),
        gw(out_c, in_c, kernel, kernel), gb(1, out_c, 1, 1) {}

  void init_gaussian(Rng& rng, double std_dev) {
    for (auto& v : w.v) v = static_cast<T>(rng.gaussian() * std_dev);
    b.fill(T(0));
  }
  void init_he(Rng& rng) {
    double std_dev = std::sqrt(2.0 / (static_cast<double>(in_ch) * k * k));
    init_gaussian(rng, std_dev);
  }
  void init_zero() {
    w.fill(T(0));
    b.fill(T(0));
  }

  Tensor<T> forward(const Tensor<T>& x) const { return conv2d_forward(x, w, &b, pad); }
  Tensor<T> forward_nobias(const Tensor<T>& x) const { return conv2d_forward(x, w, static_cast<const Tensor<T>*>(nullptr), pad); }
  Tensor<T> input_grad(const Tensor<T>& dy) const { return conv2d_input_grad(dy, w, pad); }
  void accumulate_grads(const Tensor<T>& x, const Tensor<T>& dy) {
    conv2d_weight_grad(x, dy, pad, gw, &gb);
  }
  void accumulate_weight_grad_only(const Tensor<T>& x, const Tensor<T>& dy) {
    conv2d_weight_grad(x, dy, pad, gw, static_cast<Tensor<T>*>(nullptr));
  }
  void zero_grads() {
    gw.fill(T(0));
    gb.fill(T(0));
  }

  template <typename U>
  Conv2d<U> cast() const {
    Conv2d<U> out(in_ch, out_ch, k, pad);
    out.w = w.template cast<U>();
    out.b = b.template cast<U>();
    return out;
  }
};

// Elementwise activations. Backward takes the cached pre-activation.
template <typename T>
Tensor<T> leaky_relu(const Tensor<T>& x, T slope) {
  Tensor<T> y = x;
  for (auto& v : y.v) v = v > T(0) ? v : v * slope;
  return y;
}

template <typename T>
Tensor<T> leaky_relu_backward(const Tensor<T>& dy, const Tensor<T>& pre, T slope) {
  Tensor<T> dx = dy;
  for (size_t i = 0; i < dx.v.size(); ++i)
    if (pre.v[i] <= T(0)) dx.v[i] *= slope;
  return dx;
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& x) {
  Tensor<T> y = x;
  for (auto& v : y.v) v = T(1) / (T(1) + std::exp(-v));
  return y;
}

/// dy * s * (1 - s) with s the cached sigmoid output.
template <typename T>
Tensor<T> sigmoid_backward(const Tensor<T>& dy, const Tensor<T>& s) {
  Tensor<T> dx = dy;
  for (size_t i = 0; i < dx.v.size(); ++i) dx.v[i] *= s.v[i] * (T(1) - s.v[i]);
  return dx;
}

/// C*r^2 channels -> C channels, H*r x W*r.
template <typename T>
Tensor<T> pixel_shuffle(const Tensor<T>& x, int r) {
  require(x.c % (r * r) == 0, "pixel_shuffle: channels not divisible by r^2");
  int oc = x.c / (r * r);
  Tensor<T> y(x.n, oc, x.h * r, x.w * r);
  for (int in = 0; in < x.n; ++in)
    for (int c = 0; c < oc; ++c)
      for (int dy = 0; dy < r; ++dy)
        for (int dx = 0; dx < r; ++dx) {
          int ic = c * r * r + dy * r + dx;
          for (int yy = 0; yy < x.h; ++yy) {
            const T* src = x.row(in, ic, yy);
            T* dst = y.row(in, c, yy * r + dy);
            for (int xx = 0; xx < x.w; ++xx) dst[xx * r + dx] = src[xx];
          }
        }
  return y;
}

template <typename T>
Tensor<T> pixel_shuffle_backward(const Tensor<T>& dy, int r, int in_c, int in_h, int in_w) {
  Tensor<T> dx(dy.n, in_c, in_h, in_w);
  for (int in = 0; in < dy.n; ++in)
    for (int c = 0; c < dy.c; ++c)
      for (int oy = 0; oy < r; ++oy)
        for (int ox = 0; ox < r; ++ox) {
          int ic = c * r * r + oy * r + ox;
          for (int yy = 0; yy < in_h; ++yy) {
            T* dst = dx.row(in, ic, yy);
            const T* src = dy.row(in, c, yy * r + oy);
            for (int xx = 0; xx < in_w; ++xx) dst[xx] = src[xx * r + ox];
          }
        }
  return dx;
}

/// Bilinear resampling to an arbitrary size (forward only; used between
/// pyramid scales where the source is frozen).
template <typename T>
Tensor<T> bilinear_resize(const Tensor<T>& x, int oh, int ow) {
  Tensor<T> y(x.n, x.c, oh, ow);
  double sy = static_cast<double>(x.h) / oh;
  double sx = static_cast<double>(x.w) / ow;
  for (int in = 0; in < x.n; ++in)
    for (int c = 0; c < x.c; ++c)
      for (int oy = 0; oy < oh; ++oy) {
        double fy = (oy + 0.5) * sy - 0.5;
        int y0 = static_cast<int>(std::floor(fy));
        double wy = fy - y0;
        int y0c = std::clamp(y0, 0, x.h - 1), y1c = std::clamp(y0 + 1, 0, x.h - 1);
        const T* r0 = x.row(in, c, y0c);
        const T* r1 = x.row(in, c, y1c);
        T* out = y.row(in, c, oy);
        for (int ox = 0; ox < ow; ++ox) {
          double fx = (ox + 0.5) * sx - 0.5;
          int x0 = static_cast<int>(std::floor(fx));
          double wx = fx - x0;
          int x0c = std::clamp(x0, 0, x.w - 1), x1c = std::clamp(x0 + 1, 0, x.w - 1);
          double top = (1.0 - wx) * r0[x0c] + wx * r0[x1c];
          double bot = (1.0 - wx) * r1[x0c] + wx * r1[x1c];
          out[ox] = static_cast<T>((1.0 - wy) * top + wy * bot);
        }
      }
  return y;
}

template <typename T>
double tensor_mean(const Tensor<T>& t) {
  double s = 0.0;
  for (T v : t.v) s += static_cast<double>(v);
  return s / static_cast<double>(t.size());
}

template <typename T>
double tensor_sumsq(const Tensor<T>& t) {
  double s = 0.0;
  for (T v : t.v) s += static_cast<double>(v) * static_cast<double>(v);
  return s;
}

// ---------------------------------------------------------------------------
// Optimizers
// ---------------------------------------------------------------------------

template <typename T>
struct ParamRef {
  Tensor<T>* value;
  Tensor<T>* grad;
};

template <typename T>
class Adam {
 public:
  double lr = 5e-4, beta1 = 0.5, beta2 = 0.999, eps = 1e-8;

  Adam() = default;
  Adam(double lr_, double b1, double b2) : lr(lr_), beta1(b1), beta2(b2) {}

  void step(const std::vector<ParamRef<T>>& params) {
    if (m_.empty()) {
      for (const auto& p : params) {
        m_.emplace_back(p.value->n, p.value->c, p.value->h, p.value->w);
        v_.emplace_back(p.value->n, p.value->c, p.value->h, p.value->w);
      }
    }
    ++t_;
    double bc1 = 1.0 - std::pow(beta1, t_);
    double bc2 = 1.0 - std::pow(beta2, t_);
    for (size_t i = 0; i < params.size(); ++i) {
      auto& pv = params[i].value->v;
      auto& gv = params[i].grad->v;
      auto& mv = m_[i].v;
      auto& vv = v_[i].v;
      for (size_t j = 0; j < pv.size(); ++j) {
        double g = static_cast<double>(gv[j]);
        double m = beta1 * mv[j] + (1.0 - beta1) * g;
        double v2 = beta2 * vv[j] + (1.0 - beta2) * g * g;
        mv[j] = static_cast<T>(m);
        vv[j] = static_cast<T>(v2);
        pv[j] -= static_cast<T>(lr * (m / bc1) / (std::sqrt(v2 / bc2) + eps));
      }
    }
  }

 private:
  std::vector<Tensor<T>> m_, v_;
  long t_ = 0;
};

template <typename T>
class SgdNesterov {
 public:
  double lr = 0.1, momentum = 0.9, weight_decay = 0.0;

  void step(const std::vector<ParamRef<T>>& params) {
    if (buf_.empty())
      for (const auto& p : params)
        buf_.emplace_back(p.value->n, p.value->c, p.value->h, p.value->w);
    for (size_t i = 0; i < params.size(); ++i) {
      auto& pv = params[i].value->v;
      auto& gv = params[i].grad->v;
      auto& bv = buf_[i].v;
      for (size_t j = 0; j < pv.size(); ++j) {
        double g = static_cast<double>(gv[j]) + weight_decay * static_cast<double>(pv[j]);
        double b = momentum * bv[j] + g;
        bv[j] = static_cast<T>(b);
        pv[j] -= static_cast<T>(lr * (g + momentum * b));
      }
    }
  }

 private:
  std::vector<Tensor<T>> buf_;
};

}  // namespace mdf
