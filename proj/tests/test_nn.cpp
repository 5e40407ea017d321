// Copyright (c) 2026 the mdf authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include "mdf/nets.hpp"

using namespace mdf;

namespace {

Tensor<double> random_tensor(int n, int c, int h, int w, Rng& rng, double scale = 1.0) {
  Tensor<double> t(n, c, h, w);
  for (auto& v : t.v) v = rng.gaussian() * scale;
  return t;
}

// Direct quadruple-loop convolution, the oracle for the optimized kernel.
Tensor<double> conv_reference(const Tensor<double>& x, const Tensor<double>& w,
                              const Tensor<double>& b, int pad) {
  int K = w.h;
  int oh = x.h + 2 * pad - K + 1, ow = x.w + 2 * pad - K + 1;
  Tensor<double> y(x.n, w.n, oh, ow);
  for (int in = 0; in < x.n; ++in)
    for (int oc = 0; oc < w.n; ++oc)
      for (int oy = 0; oy < oh; ++oy)
        for (int ox = 0; ox < ow; ++ox) {
          double acc = b.v[oc];
          for (int ic = 0; ic < x.c; ++ic)
            for (int ky = 0; ky < K; ++ky)
              for (int kx = 0; kx < K; ++kx) {
                int iy = oy + ky - pad, ix = ox + kx - pad;
                if (iy < 0 || iy >= x.h || ix < 0 || ix >= x.w) continue;
                acc += w.at(oc, ic, ky, kx) * x.at(in, ic, iy, ix);
              }
          y.at(in, oc, oy, ox) = acc;
        }
  return y;
}

double max_abs_diff(const Tensor<double>& a, const Tensor<double>& b) {
  REQUIRE(a.same_shape(b));
  double m = 0.0;
  for (size_t i = 0; i < a.v.size(); ++i) m = std::max(m, std::abs(a.v[i] - b.v[i]));
  return m;
}

}  // namespace

TEST_CASE("conv2d forward matches the direct-loop oracle") {
  Rng rng(42);
  for (int pad : {0, 1}) {
    Tensor<double> x = random_tensor(2, 3, 9, 7, rng);
    Tensor<double> w = random_tensor(5, 3, 3, 3, rng, 0.3);
    Tensor<double> b = random_tensor(1, 5, 1, 1, rng, 0.1);
    Tensor<double> fast = conv2d_forward(x, w, &b, pad);
    Tensor<double> slow = conv_reference(x, w, b, pad);
    CHECK(max_abs_diff(fast, slow) < 1e-12);
  }
}

TEST_CASE("conv2d input and weight gradients match finite differences") {
  Rng rng(7);
  for (int pad : {0, 1}) {
    Tensor<double> x = random_tensor(1, 2, 6, 6, rng);
    Tensor<double> w = random_tensor(3, 2, 3, 3, rng, 0.4);
    Tensor<double> b = random_tensor(1, 3, 1, 1, rng, 0.1);
    Tensor<double> dy = random_tensor(1, 3, 6 + 2 * pad - 2, 6 + 2 * pad - 2, rng);

    auto objective = [&](const Tensor<double>& xx, const Tensor<double>& ww) {
      Tensor<double> y = conv2d_forward(xx, ww, &b, pad);
      double s = 0.0;
      for (size_t i = 0; i < y.v.size(); ++i) s += y.v[i] * dy.v[i];
      return s;
    };

    Tensor<double> dx = conv2d_input_grad(dy, w, pad);
    Tensor<double> gw(3, 2, 3, 3), gb(1, 3, 1, 1);
    conv2d_weight_grad(x, dy, pad, gw, &gb);

    const double h = 1e-6;
    for (size_t i = 0; i < x.v.size(); i += 7) {
      Tensor<double> xp = x, xm = x;
      xp.v[i] += h;
      xm.v[i] -= h;
      double fd = (objective(xp, w) - objective(xm, w)) / (2 * h);
      CHECK(std::abs(fd - dx.v[i]) < 1e-6);
    }
    for (size_t i = 0; i < w.v.size(); i += 11) {
      Tensor<double> wp = w, wm = w;
      wp.v[i] += h;
      wm.v[i] -= h;
      double fd = (objective(x, wp) - objective(x, wm)) / (2 * h);
      CHECK(std::abs(fd - gw.v[i]) < 1e-6);
    }
  }
}

TEST_CASE("discriminator map shape and output range") {
  
  PatchDiscriminator<double> d(3, 16, 5, 3);
  Rng rng(3);
  d.init(rng);
  CHECK(d.receptive_field() == 11);
  Tensor<double> x = random_tensor(1, 3, 20, 17, rng, 0.3);
  auto tr = d.run(x, true);
  CHECK(tr.pre.back().h == 10);  // (n-10) x (m-10) under valid padding
  CHECK(tr.pre.back().w == 7);
  for (double v : tr.sig.v) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
}

TEST_CASE("discriminator input gradient with tap injection matches finite differences") {
  Rng rng(11);
  PatchDiscriminator<double> d(1, 6, 5, 3);
  d.init(rng);
  Tensor<double> x = random_tensor(1, 1, 14, 14, rng, 0.5);
  Tensor<double> ref = random_tensor(1, 1, 14, 14, rng, 0.5);

  // Objective: sum over taps of squared difference to the reference's taps.
  auto tr_ref = d.run(ref, true);
  auto taps_ref = d.features(tr_ref);
  auto objective = [&](const Tensor<double>& xx) {
    auto tr = d.run(xx, true);
    auto taps = d.features(tr);
    double s = 0.0;
    for (size_t l = 0; l < taps.size(); ++l)
      for (size_t i = 0; i < taps[l].v.size(); ++i) {
        double dv = taps[l].v[i] - taps_ref[l].v[i];
        s += dv * dv;
      }
    return s;
  };

  auto tr = d.run(x, true);
  auto taps = d.features(tr);
  std::vector<Tensor<double>> dtaps(taps.size());
  for (size_t l = 0; l < taps.size(); ++l) {
    dtaps[l] = taps[l];
    for (size_t i = 0; i < dtaps[l].v.size(); ++i)
      dtaps[l].v[i] = 2.0 * (taps[l].v[i] - taps_ref[l].v[i]);
  }
  Tensor<double> dx = d.input_gradient(tr, nullptr, &dtaps);

  const double h = 1e-5;
  for (size_t i = 0; i < x.v.size(); i += 13) {
    Tensor<double> xp = x, xm = x;
    xp.v[i] += h;
    xm.v[i] -= h;
    double fd = (objective(xp) - objective(xm)) / (2 * h);
    CHECK(std::abs(fd - dx.v[i]) < 1e-5 * std::max(1.0, std::abs(fd)));
  }
}

TEST_CASE("gradient penalty parameter gradients match finite differences") {
  Rng rng(19);
  PatchDiscriminator<double> d(1, 5, 5, 3);
  d.init(rng);
  Tensor<double> x_hat = random_tensor(1, 1, 13, 13, rng, 0.5);

  auto gp_value = [&]() {
    // Recompute gp from scratch on a copy so weights stay untouched.
    PatchDiscriminator<double> tmp = d;
    tmp.zero_grads();
    return tmp.gradient_penalty_accumulate(x_hat, 0.0);
  };

  d.zero_grads();
  double gp0 = d.gradient_penalty_accumulate(x_hat, 1.0);
  CHECK(gp0 >= 0.0);

  const double h = 1e-6;
  for (int layer : {0, 2, 4}) {
    auto& conv = d.convs[layer];
    for (size_t i = 0; i < conv.w.v.size(); i += std::max<size_t>(1, conv.w.v.size() / 6)) {
      double saved = conv.w.v[i];
      conv.w.v[i] = saved + h;
      double fp = gp_value();
      conv.w.v[i] = saved - h;
      double fm = gp_value();
      conv.w.v[i] = saved;
      double fd = (fp - fm) / (2 * h);
      double an = conv.gw.v[i];
      CHECK(std::abs(fd - an) < 2e-5 * std::max(1.0, std::abs(fd)));
    }
    // Masks carry no almost-everywhere gradient, so biases get none from GP.
    for (size_t i = 0; i < conv.gb.v.size(); ++i) CHECK(conv.gb.v[i] == 0.0);
  }
}

TEST_CASE("residual generator with zero weights is the identity") {
  ResidualGenerator<double> g(3, 8, 5, 3);
  for (auto& c : g.convs) c.init_zero();
  Rng rng(5);
  Tensor<double> x = random_tensor(1, 3, 12, 12, rng);
  Tensor<double> y = g.forward(x);
  CHECK(max_abs_diff(x, y) == 0.0);
}

TEST_CASE("generator weight gradients match finite differences") {
  Rng rng(23);
  ResidualGenerator<double> g(1, 4, 5, 3);
  g.init(rng);
  Tensor<double> x = random_tensor(1, 1, 9, 9, rng, 0.5);
  Tensor<double> target = random_tensor(1, 1, 9, 9, rng, 0.5);

  auto objective = [&]() {
    Tensor<double> out = g.forward(x);
    double s = 0.0;
    for (size_t i = 0; i < out.v.size(); ++i) {
      double dv = out.v[i] - target.v[i];
      s += dv * dv;
    }
    return s;
  };

  auto tr = g.run(x);
  Tensor<double> dout(1, 1, 9, 9);
  for (size_t i = 0; i < dout.v.size(); ++i) dout.v[i] = 2.0 * (tr.out.v[i] - target.v[i]);
  g.zero_grads();
  g.backward(tr, dout);

  const double h = 1e-6;
  for (int layer : {0, 2, 4}) {
    auto& conv = g.convs[layer];
    for (size_t i = 0; i < conv.w.v.size(); i += std::max<size_t>(1, conv.w.v.size() / 5)) {
      double saved = conv.w.v[i];
      conv.w.v[i] = saved + h;
      double fp = objective();
      conv.w.v[i] = saved - h;
      double fm = objective();
      conv.w.v[i] = saved;
      double fd = (fp - fm) / (2 * h);
      CHECK(std::abs(fd - conv.gw.v[i]) < 1e-5 * std::max(1.0, std::abs(fd)));
    }
  }
}

TEST_CASE("pixel shuffle round-trips through its backward rearrangement") {
  Rng rng(9);
  Tensor<double> x = random_tensor(2, 8, 5, 6, rng);
  Tensor<double> y = pixel_shuffle(x, 2);
  CHECK(y.c == 2);
  CHECK(y.h == 10);
  CHECK(y.w == 12);
  Tensor<double> back = pixel_shuffle_backward(y, 2, 8, 5, 6);
  CHECK(max_abs_diff(x, back) == 0.0);
}
