// Copyright (c) 2026 the mdf authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "mdf/nn.hpp"

namespace mdf {

template <typename T>
void add_inplace(Tensor<T>& a, const Tensor<T>& b) {
  require(a.same_shape(b), "add_inplace: shape mismatch");
  for (size_t i = 0; i < a.v.size(); ++i) a.v[i] += b.v[i];
}

/// Fully convolutional patch critic: `depth` 3x3 valid convolutions with
/// leaky-ReLU between them. With depth 5 each output activation judges an
/// 11x11 input patch. Feature taps: the activation after every rectified
/// layer plus the sigmoid-squashed terminal map (the [0,1] activation map);
/// the unsquashed terminal map feeds the WGAN objective.
template <typename T>
struct PatchDiscriminator {
  int in_ch = 3, width = 32, depth = 5, kernel = 3;
  T lrelu_slope = T(0.2);
  std::vector<Conv2d<T>> convs;

  PatchDiscriminator() = default;
  PatchDiscriminator(int in_channels, int width_, int depth_ = 5, int kernel_ = 3)
      : in_ch(in_channels), width(width_), depth(depth_), kernel(kernel_) {
    require(depth >= 2, "PatchDiscriminator: depth must be >= 2");
    convs.reserve(depth);
    for (int i = 0; i < depth; ++i) {
      int ic = i == 0 ? in_ch : width;
      int oc = i == depth - 1 ? 1 : width;
      convs.emplace_back(ic, oc, kernel, 0);
    }
  }

  int receptive_field() const { return 1 + depth * (kernel - 1); }
  int tap_count() const { return depth; }

  /// He-scaled init. Without normalization layers a small fixed std makes
  /// activations vanish across depth and the critic never learns.
  void init(Rng& rng) {
    for (auto& c : convs) c.init_he(rng);
  }

  struct Trace {
    std::vector<Tensor<T>> inputs;  // conv inputs: x, a1 .. a_{depth-1}
    std::vector<Tensor<T>> pre;     // z1 .. z_depth
    Tensor<T> sig;                  // sigmoid(z_depth)
  };

  Trace run(const Tensor<T>& x, bool with_sigmoid = true) const {
    require(x.c == in_ch, "discriminator: channel count mismatch (stack trained on " +
                              std::to_string(in_ch) + " channels, input has " +
                              std::to_string(x.c) + ")");
    require(x.h >= receptive_field() && x.w >= receptive_field(),
            "discriminator: input smaller than the receptive field");
    Trace tr;
    tr.inputs.reserve(depth);
    tr.pre.reserve(depth);
    Tensor<T> cur = x;
    for (int i = 0; i < depth; ++i) {
      tr.inputs.push_back(cur);
      Tensor<T> z = convs[i].forward(cur);
      tr.pre.push_back(z);
      if (i + 1 < depth) cur = leaky_relu(z, lrelu_slope);
    }
    if (with_sigmoid) tr.sig = sigmoid(tr.pre.back());
    return tr;
  }

  /// Taps phi_1..phi_L: post-activation maps plus the terminal [0,1] map.
  std::vector<Tensor<T>> features(const Trace& tr) const {
    std::vector<Tensor<T>> taps;
    taps.reserve(depth);
    for (int i = 1; i < depth; ++i) taps.push_back(tr.inputs[i]);
    taps.push_back(tr.sig);
    return taps;
  }

  const Tensor<T>& critic_map(const Trace& tr) const { return tr.pre.back(); }

 private:
  Tensor<T> top_gradient(const Trace& tr, const Tensor<T>* dz_top,
                         const std::vector<Tensor<T>>* dtaps) const {
    Tensor<T> cur = dz_top ? *dz_top
                           : Tensor<T>(tr.pre.back().n, tr.pre.back().c, tr.pre.back().h,
                                       tr.pre.back().w);
    if (dtaps && !(*dtaps)[depth - 1].v.empty())
      add_inplace(cur, sigmoid_backward((*dtaps)[depth - 1], tr.sig));
    return cur;
  }

 public:

  /// Gradient w.r.t. the input. `dz_top` injects gradient at the unsquashed
  /// terminal map; `dtaps` (when non-null, size = depth) injects at every
  /// feature tap. Const and re-entrant: safe for concurrent loss evaluation.
  Tensor<T> input_gradient(const Trace& tr, const Tensor<T>* dz_top,
                           const std::vector<Tensor<T>>* dtaps) const {
    Tensor<T> cur = top_gradient(tr, dz_top, dtaps);
    for (int i = depth - 1; i >= 1; --i) {
      Tensor<T> din = convs[i].input_grad(cur);
      if (dtaps && !(*dtaps)[i - 1].v.empty()) add_inplace(din, (*dtaps)[i - 1]);
      cur = leaky_relu_backward(din, tr.pre[i - 1], lrelu_slope);
    }
    return convs[0].input_grad(cur);
  }

  /// Accumulates weight/bias gradients for the critic objective.
  void accumulate_param_grads(const Trace& tr, const Tensor<T>& dz_top) {
    Tensor<T> cur = dz_top;
    for (int i = depth - 1; i >= 0; --i) {
      convs[i].accumulate_grads(tr.inputs[i], cur);
      if (i == 0) break;
      cur = leaky_relu_backward(convs[i].input_grad(cur), tr.pre[i - 1], lrelu_slope);
    }
  }

  /// WGAN-GP term on an interpolated sample:
  /// gp = (||grad_x sum(z_L)|| - target)^2. The default target 1 is the
  /// classic global constraint; the trainer passes sqrt(map size) so each
  /// patch critic, rather than their sum, is held near unit slope.
  /// Accumulates lambda * d(gp)/dW into the weight gradients by running the
  /// backward chain a second time as a forward computation (the leaky-ReLU
  /// masks are constant almost everywhere, so bias gradients vanish).
  double gradient_penalty_accumulate(const Tensor<T>& x_hat, double lambda,
                                     double target = 1.0) {
    Trace tr = run(x_hat, false);
    std::vector<Tensor<T>> t(depth);
    t[depth - 1] = Tensor<T>(tr.pre.back().n, tr.pre.back().c, tr.pre.back().h, tr.pre.back().w,
                             T(1));
    for (int i = depth - 1; i >= 1; --i) {
      Tensor<T> q = convs[i].input_grad(t[i]);
      t[i - 1] = leaky_relu_backward(q, tr.pre[i - 1], lrelu_slope);
    }
    Tensor<T> g = convs[0].input_grad(t[0]);
    double norm = std::sqrt(tensor_sumsq(g));
    double gp = (norm - target) * (norm - target);
    if (norm < 1e-12 || lambda == 0.0) return gp;

    double coef = lambda * 2.0 * (norm - target) / norm;
    Tensor<T> cur = g;
    for (auto& v : cur.v) v = static_cast<T>(v * coef);
    for (int i = 0; i < depth; ++i) {
      convs[i].accumulate_weight_grad_only(cur, t[i]);
      if (i + 1 < depth)
        cur = leaky_relu_backward(convs[i].forward_nobias(cur), tr.pre[i], lrelu_slope);
    }
    return gp;
  }

  std::vector<ParamRef<T>> params() {
    std::vector<ParamRef<T>> out;
    for (auto& c : convs) {
      out.push_back({&c.w, &c.gw});
      out.push_back({&c.b, &c.gb});
    }
    return out;
  }

  void zero_grads() {
    for (auto& c : convs) c.zero_grads();
  }

  template <typename U>
  PatchDiscriminator<U> cast() const {
    PatchDiscriminator<U> out(in_ch, width, depth, kernel);
    out.lrelu_slope = static_cast<U>(lrelu_slope);
    for (int i = 0; i < depth; ++i) out.convs[i] = convs[i].template cast<U>();
    return out;
  }
};

/// Residual generator: a same-padded conv stack whose output is added to its
/// input, so all-zero weights give the identity map.
template <typename T>
struct ResidualGenerator {
  int channels = 3, width = 32, depth = 5, kernel = 3;
  T lrelu_slope = T(0.2);
  std::vector<Conv2d<T>> convs;

  ResidualGenerator() = default;
  ResidualGenerator(int channels_, int width_, int depth_ = 5, int kernel_ = 3)
      : channels(channels_), width(width_), depth(depth_), kernel(kernel_) {
    int pad = (kernel - 1) / 2;
    convs.reserve(depth);
    for (int i = 0; i < depth; ++i) {
      int ic = i == 0 ? channels : width;
      int oc = i == depth - 1 ? channels : width;
      convs.emplace_back(ic, oc, kernel, pad);
    }
  }

  /// He-scaled hidden layers, zero-initialized output conv: the generator
  /// starts as the exact identity and the reconstruction term shapes it.
  void init(Rng& rng) {
    for (auto& c : convs) c.init_he(rng);
    convs.back().init_zero();
  }

  struct Trace {
    std::vector<Tensor<T>> inputs;
    std::vector<Tensor<T>> pre;
    Tensor<T> out;
  };

  Trace run(const Tensor<T>& x) const {
    Trace tr;
    Tensor<T> cur = x;
    for (int i = 0; i < depth; ++i) {
      tr.inputs.push_back(cur);
      Tensor<T> z = convs[i].forward(cur);
      tr.pre.push_back(z);
      if (i + 1 < depth) cur = leaky_relu(z, lrelu_slope);
    }
    tr.out = x;
    add_inplace(tr.out, tr.pre.back());
    return tr;
  }

  Tensor<T> forward(const Tensor<T>& x) const { return run(x).out; }

  /// Accumulates weight gradients from d(loss)/d(output).
  void backward(const Trace& tr, const Tensor<T>& dout) {
    Tensor<T> cur = dout;  // gradient on the branch output z_depth
    for (int i = depth - 1; i >= 0; --i) {
      convs[i].accumulate_grads(tr.inputs[i], cur);
      if (i == 0) break;
      cur = leaky_relu_backward(convs[i].input_grad(cur), tr.pre[i - 1], lrelu_slope);
    }
  }

  std::vector<ParamRef<T>> params() {
    std::vector<ParamRef<T>> out;
    for (auto& c : convs) {
      out.push_back({&c.w, &c.gw});
      out.push_back({&c.b, &c.gb});
    }
    return out;
  }

  void zero_grads() {
    for (auto& c : convs) c.zero_grads();
  }
};

}  // namespace mdf
