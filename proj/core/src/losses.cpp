// Copyright (c) 2026 the mdf authors
// SPDX-License-Identifier: Apache-2.0

#include "mdf/losses.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>

namespace mdf {

double l1_loss(const Image& x, const Image& x_hat) { return mean_abs_diff(x, x_hat); }
double l2_loss(const Image& x, const Image& x_hat) { return mse(x, x_hat); }

// ---------------------------------------------------------------------------
// SSIM machinery. All filtering uses the separable 11x11 Gaussian window
// (sigma 1.5) over valid positions; adjoints scatter back to full size.
// ---------------------------------------------------------------------------

namespace {

constexpr int kWin = 11;
constexpr double kC1 = 0.01 * 0.01;  // (K1 * range)^2, range = 1
constexpr double kC2 = 0.03 * 0.03;

const std::array<double, kWin>& gauss_window() {
  static const std::array<double, kWin> w = [] {
    std::array<double, kWin> v{};
    double sum = 0.0;
    for (int i = 0; i < kWin; ++i) {
      double d = i - (kWin - 1) / 2.0;
      v[i] = std::exp(-d * d / (2.0 * 1.5 * 1.5));
      sum += v[i];
    }
    for (auto& x : v) x /= sum;
    return v;
  }();
  return w;
}

struct Plane {
  int h = 0, w = 0;
  std::vector<double> v;
  Plane() = default;
  Plane(int h_, int w_, double fill = 0.0) : h(h_), w(w_), v(static_cast<size_t>(h_) * w_, fill) {}
  double* row(int y) { return v.data() + static_cast<size_t>(y) * w; }
  const double* row(int y) const { return v.data() + static_cast<size_t>(y) * w; }
};

Plane get_plane(const Image& img, int ch) {
  Plane p(img.h, img.w);
  for (int y = 0; y < img.h; ++y)
    for (int x = 0; x < img.w; ++x) p.v[static_cast<size_t>(y) * img.w + x] = img.at(y, x, ch);
  return p;
}

Plane multiply(const Plane& a, const Plane& b) {
  Plane out(a.h, a.w);
  for (size_t i = 0; i < out.v.size(); ++i) out.v[i] = a.v[i] * b.v[i];
  return out;
}

/// Valid Gaussian filtering, horizontal then vertical.
Plane filter_valid(const Plane& p) {
  const auto& win = gauss_window();
  int ow = p.w - kWin + 1;
  int oh = p.h - kWin + 1;
  Plane horiz(p.h, ow);
  for (int y = 0; y < p.h; ++y) {
    const double* src = p.row(y);
    double* dst = horiz.row(y);
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int k = 0; k < kWin; ++k) acc += win[k] * src[x + k];
      dst[x] = acc;
    }
  }
  Plane out(oh, ow);
  for (int y = 0; y < oh; ++y) {
    double* dst = out.row(y);
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int k = 0; k < kWin; ++k) acc += win[k] * horiz.row(y + k)[x];
      dst[x] = acc;
    }
  }
  return out;
}

/// Adjoint of filter_valid: scatter a valid-size map back to full size.
Plane filter_adjoint(const Plane& g, int h, int w) {
  const auto& win = gauss_window();
  int ow = g.w;
  Plane vert(h, ow);
  for (int y = 0; y < g.h; ++y) {
    const double* src = g.row(y);
    for (int k = 0; k < kWin; ++k) {
      double* dst = vert.row(y + k);
      double wv = win[k];
      for (int x = 0; x < ow; ++x) dst[x] += wv * src[x];
    }
  }
  Plane out(h, w);
  for (int y = 0; y < h; ++y) {
    const double* src = vert.row(y);
    double* dst = out.row(y);
    for (int x = 0; x < ow; ++x) {
      double sv = src[x];
      if (sv == 0.0) continue;
      for (int k = 0; k < kWin; ++k) dst[x + k] += win[k] * sv;
    }
  }
  return out;
}

struct Moments {
  Plane mx, my, sxx, syy, sxy;
};

Moments compute_moments(const Plane& x, const Plane& y) {
  Moments m;
  m.mx = filter_valid(x);
  m.my = filter_valid(y);
  Plane fxx = filter_valid(multiply(x, x));
  Plane fyy = filter_valid(multiply(y, y));
  Plane fxy = filter_valid(multiply(x, y));
  m.sxx = Plane(m.mx.h, m.mx.w);
  m.syy = Plane(m.mx.h, m.mx.w);
  m.sxy = Plane(m.mx.h, m.mx.w);
  for (size_t i = 0; i < m.mx.v.size(); ++i) {
    m.sxx.v[i] = fxx.v[i] - m.mx.v[i] * m.mx.v[i];
    m.syy.v[i] = fyy.v[i] - m.my.v[i] * m.my.v[i];
    m.sxy.v[i] = fxy.v[i] - m.mx.v[i] * m.my.v[i];
  }
  return m;
}

/// Full SSIM map s = (A1 A2) / (B1 B2).
Plane ssim_map(const Moments& m) {
  Plane s(m.mx.h, m.mx.w);
  for (size_t i = 0; i < s.v.size(); ++i) {
    double a1 = 2.0 * m.mx.v[i] * m.my.v[i] + kC1;
    double a2 = 2.0 * m.sxy.v[i] + kC2;
    double b1 = m.mx.v[i] * m.mx.v[i] + m.my.v[i] * m.my.v[i] + kC1;
    double b2 = m.sxx.v[i] + m.syy.v[i] + kC2;
    s.v[i] = (a1 * a2) / (b1 * b2);
  }
  return s;
}

Plane cs_map(const Moments& m) {
  Plane s(m.mx.h, m.mx.w);
  for (size_t i = 0; i < s.v.size(); ++i)
    s.v[i] = (2.0 * m.sxy.v[i] + kC2) / (m.sxx.v[i] + m.syy.v[i] + kC2);
  return s;
}

Plane luminance_map(const Moments& m) {
  Plane s(m.mx.h, m.mx.w);
  for (size_t i = 0; i < s.v.size(); ++i)
    s.v[i] = (2.0 * m.mx.v[i] * m.my.v[i] + kC1) /
             (m.mx.v[i] * m.mx.v[i] + m.my.v[i] * m.my.v[i] + kC1);
  return s;
}

enum class MapKind { kFull, kCs, kLum };

/// Adds d(loss)/dx for one channel given the upstream per-position weights
/// `gmap` on the selected map. x is the test plane, y the reference.
void map_backward(MapKind kind, const Plane& x, const Plane& y, const Moments& m,
                  const Plane& gmap, Plane& gx) {
  size_t n = gmap.v.size();
  Plane dmx(m.mx.h, m.mx.w), dfxy(m.mx.h, m.mx.w), dfxx(m.mx.h, m.mx.w);
  for (size_t i = 0; i < n; ++i) {
    double g = gmap.v[i];
    if (g == 0.0) continue;
    double mx = m.mx.v[i], my = m.my.v[i];
    double a1 = 2.0 * mx * my + kC1;
    double a2 = 2.0 * m.sxy.v[i] + kC2;
    double b1 = mx * mx + my * my + kC1;
    double b2 = m.sxx.v[i] + m.syy.v[i] + kC2;
    double dA1 = 0.0, dA2 = 0.0, dB1 = 0.0, dB2 = 0.0;
    if (kind == MapKind::kFull) {
      double s = (a1 * a2) / (b1 * b2);
      dA1 = g * a2 / (b1 * b2);
      dA2 = g * a1 / (b1 * b2);
      dB1 = -g * s / b1;
      dB2 = -g * s / b2;
    } else if (kind == MapKind::kCs) {
      double s2 = a2 / b2;
      dA2 = g / b2;
      dB2 = -g * s2 / b2;
    } else {
      double l = a1 / b1;
      dA1 = g / b1;
      dB1 = -g * l / b1;
    }
    double dSxy = 2.0 * dA2;
    double dSxx = dB2;
    dmx.v[i] = 2.0 * my * dA1 + 2.0 * mx * dB1 - my * dSxy - 2.0 * mx * dSxx;
    dfxy.v[i] = dSxy;
    dfxx.v[i] = dSxx;
  }
  Plane t1 = filter_adjoint(dmx, x.h, x.w);
  Plane t2 = filter_adjoint(dfxy, x.h, x.w);
  Plane t3 = filter_adjoint(dfxx, x.h, x.w);
  for (size_t i = 0; i < gx.v.size(); ++i)
    gx.v[i] += t1.v[i] + t2.v[i] * y.v[i] + 2.0 * t3.v[i] * x.v[i];
}

Plane downsample2(const Plane& p) {
  int oh = p.h / 2, ow = p.w / 2;
  Plane out(oh, ow);
  for (int y = 0; y < oh; ++y)
    for (int x = 0; x < ow; ++x)
      out.v[static_cast<size_t>(y) * ow + x] =
          0.25 * (p.row(2 * y)[2 * x] + p.row(2 * y)[2 * x + 1] + p.row(2 * y + 1)[2 * x] +
                  p.row(2 * y + 1)[2 * x + 1]);
  return out;
}

Plane downsample2_adjoint(const Plane& g, int h, int w) {
  Plane out(h, w);
  for (int y = 0; y < g.h; ++y)
    for (int x = 0; x < g.w; ++x) {
      double q = 0.25 * g.v[static_cast<size_t>(y) * g.w + x];
      out.row(2 * y)[2 * x] += q;
      out.row(2 * y)[2 * x + 1] += q;
      out.row(2 * y + 1)[2 * x] += q;
      out.row(2 * y + 1)[2 * x + 1] += q;
    }
  return out;
}

void check_ssim_size(const Image& img) {
  require(img.h >= kWin && img.w >= kWin,
          "ssim: image smaller than the 11x11 window (" + std::to_string(img.h) + "x" +
              std::to_string(img.w) + ")");
}

const std::array<double, 5> kMsSsimWeights = {0.0448, 0.2856, 0.3001, 0.2363, 0.1333};

std::vector<double> ms_weights(int levels) {
  std::vector<double> w(kMsSsimWeights.begin(), kMsSsimWeights.begin() + levels);
  double sum = 0.0;
  for (double v : w) sum += v;
  for (double& v : w) v /= sum;
  return w;
}

constexpr double kMeanFloor = 1e-8;

}  // namespace

int ms_ssim_max_levels(int h, int w) {
  int levels = 0;
  while (levels < 5 && std::min(h, w) >= kWin) {
    ++levels;
    h /= 2;
    w /= 2;
  }
  return levels;
}

// ---------------------------------------------------------------------------
// SSIM / MS-SSIM values and gradients
// ---------------------------------------------------------------------------

namespace {

/// SSIM index; when gx != nullptr also accumulates d(mean ssim)/d(test).
double ssim_impl(const Image& test, const Image& ref, Image* grad) {
  require(test.same_shape(ref), "ssim: image shapes differ");
  check_ssim_size(test);
  double total = 0.0;
  for (int ch = 0; ch < test.c; ++ch) {
    Plane x = get_plane(test, ch);
    Plane y = get_plane(ref, ch);
    Moments m = compute_moments(x, y);
    Plane s = ssim_map(m);
    double sum = 0.0;
    for (double v : s.v) sum += v;
    total += sum / static_cast<double>(s.v.size());
    if (grad) {
      Plane gmap(s.h, s.w, 1.0 / (static_cast<double>(s.v.size()) * test.c));
      Plane gx(test.h, test.w);
      map_backward(MapKind::kFull, x, y, m, gmap, gx);
      for (int yy = 0; yy < test.h; ++yy)
        for (int xx = 0; xx < test.w; ++xx)
          grad->at(yy, xx, ch) += gx.v[static_cast<size_t>(yy) * test.w + xx];
    }
  }
  return total / test.c;
}

struct MsLevel {
  std::vector<Plane> x, y;  // per channel
  std::vector<Moments> m;
  double cs_mean = 0.0;
  double lum_mean = 0.0;  // coarsest only
};

/// MS-SSIM value; when grad != nullptr accumulates d(ms_ssim)/d(test).
double ms_ssim_impl(const Image& test, const Image& ref, int levels, Image* grad) {
  require(test.same_shape(ref), "ms_ssim: image shapes differ");
  check_ssim_size(test);
  int max_levels = ms_ssim_max_levels(test.h, test.w);
  if (levels == 0) levels = max_levels;
  require(levels >= 1 && levels <= 5, "ms_ssim: levels must be in [1,5]");
  if (levels > max_levels)
    throw ValidationError("ms_ssim: image too small for " + std::to_string(levels) +
                          " dyadic scales (max " + std::to_string(max_levels) + ")");
  std::vector<double> weights = ms_weights(levels);

  int channels = test.c;
  std::vector<MsLevel> lv(levels);
  for (int ch = 0; ch < channels; ++ch) {
    lv[0].x.push_back(get_plane(test, ch));
    lv[0].y.push_back(get_plane(ref, ch));
  }
  for (int j = 0; j < levels; ++j) {
    auto& L = lv[j];
    double cs_sum = 0.0, lum_sum = 0.0;
    for (int ch = 0; ch < channels; ++ch) {
      L.m.push_back(compute_moments(L.x[ch], L.y[ch]));
      Plane cs = cs_map(L.m[ch]);
      double s = 0.0;
      for (double v : cs.v) s += v;
      cs_sum += s / static_cast<double>(cs.v.size());
      if (j == levels - 1) {
        Plane lu = luminance_map(L.m[ch]);
        double s2 = 0.0;
        for (double v : lu.v) s2 += v;
        lum_sum += s2 / static_cast<double>(lu.v.size());
      }
    }
    L.cs_mean = std::max(cs_sum / channels, kMeanFloor);
    if (j == levels - 1) L.lum_mean = std::max(lum_sum / channels, kMeanFloor);
    if (j + 1 < levels) {
      for (int ch = 0; ch < channels; ++ch) {
        lv[j + 1].x.push_back(downsample2(L.x[ch]));
        lv[j + 1].y.push_back(downsample2(L.y[ch]));
      }
    }
  }

  double value = std::pow(lv[levels - 1].lum_mean, weights[levels - 1]);
  for (int j = 0; j < levels; ++j) value *= std::pow(lv[j].cs_mean, weights[j]);

  if (grad) {
    // d(value)/d(cs_j) = value * w_j / cs_j, same for the luminance term.
    std::vector<Plane> acc(channels);  // gradient at the current level, per channel
    for (int j = levels - 1; j >= 0; --j) {
      auto& L = lv[j];
      int mh = L.m[0].mx.h, mw = L.m[0].mx.w;
      double map_n = static_cast<double>(mh) * mw;
      double dcs = value * weights[j] / L.cs_mean / (map_n * channels);
      double dlum = j == levels - 1 ? value * weights[j] / L.lum_mean / (map_n * channels) : 0.0;
      for (int ch = 0; ch < channels; ++ch) {
        Plane gx(L.x[ch].h, L.x[ch].w);
        Plane gmap(mh, mw, dcs);
        map_backward(MapKind::kCs, L.x[ch], L.y[ch], L.m[ch], gmap, gx);
        if (j == levels - 1) {
          Plane gl(mh, mw, dlum);
          map_backward(MapKind::kLum, L.x[ch], L.y[ch], L.m[ch], gl, gx);
        }
        if (j == levels - 1) {
          acc[ch] = std::move(gx);
        } else {
          Plane up = downsample2_adjoint(acc[ch], L.x[ch].h, L.x[ch].w);
          for (size_t i = 0; i < up.v.size(); ++i) up.v[i] += gx.v[i];
          acc[ch] = std::move(up);
        }
      }
    }
    for (int ch = 0; ch < channels; ++ch)
      for (int yy = 0; yy < test.h; ++yy)
        for (int xx = 0; xx < test.w; ++xx)
          grad->at(yy, xx, ch) += acc[ch].v[static_cast<size_t>(yy) * test.w + xx];
  }
  return value;
}

/// Gaussian-weighted mean absolute difference; the L1 half of the MS-SSIM+L1
/// mix, windowed like SSIM so errors are weighted the way the cited recipe
/// weights them.
double gauss_l1_impl(const Image& test, const Image& ref, Image* grad, double coeff) {
  check_ssim_size(test);
  double total = 0.0;
  for (int ch = 0; ch < test.c; ++ch) {
    Plane d(test.h, test.w);
    for (int yy = 0; yy < test.h; ++yy)
      for (int xx = 0; xx < test.w; ++xx)
        d.v[static_cast<size_t>(yy) * test.w + xx] = test.at(yy, xx, ch) - ref.at(yy, xx, ch);
    Plane ad(test.h, test.w);
    for (size_t i = 0; i < d.v.size(); ++i) ad.v[i] = std::abs(d.v[i]);
    Plane f = filter_valid(ad);
    double s = 0.0;
    for (double v : f.v) s += v;
    total += s / static_cast<double>(f.v.size());
    if (grad) {
      Plane gmap(f.h, f.w, coeff / (static_cast<double>(f.v.size()) * test.c));
      Plane back = filter_adjoint(gmap, test.h, test.w);
      for (int yy = 0; yy < test.h; ++yy)
        for (int xx = 0; xx < test.w; ++xx) {
          double sg = d.v[static_cast<size_t>(yy) * test.w + xx];
          double sign = sg > 0.0 ? 1.0 : (sg < 0.0 ? -1.0 : 0.0);
          grad->at(yy, xx, ch) += sign * back.v[static_cast<size_t>(yy) * test.w + xx];
        }
    }
  }
  return total / test.c;
}

}  // namespace

double ssim(const Image& x, const Image& y) { return ssim_impl(x, y, nullptr); }

double ssim_loss(const Image& x, const Image& x_hat) { return 1.0 - ssim_impl(x_hat, x, nullptr); }

double ms_ssim(const Image& x, const Image& y, int levels) {
  return ms_ssim_impl(x, y, levels, nullptr);
}

double ms_ssim_loss(const Image& x, const Image& x_hat, int levels) {
  return 1.0 - ms_ssim_impl(x_hat, x, levels, nullptr);
}

double ms_ssim_l1_loss(const Image& x, const Image& x_hat, double mix, int levels) {
  require(mix >= 0.0 && mix <= 1.0, "ms_ssim_l1_loss: mix must be in [0,1]");
  double msl = 1.0 - ms_ssim_impl(x_hat, x, levels, nullptr);
  double l1g = gauss_l1_impl(x_hat, x, nullptr, 1.0);
  return mix * msl + (1.0 - mix) * l1g;
}

// ---------------------------------------------------------------------------
// LossFunction wrappers
// ---------------------------------------------------------------------------

namespace {

class L1Loss final : public LossFunction {
 public:
  std::string name() const override { return "l1"; }
  double eval(const Image& ref, const Image& test, Image* grad) const override {
    double v = mean_abs_diff(test, ref);
    if (grad) {
      *grad = Image(test.h, test.w, test.c);
      double n = static_cast<double>(test.data.size());
      for (size_t i = 0; i < test.data.size(); ++i) {
        double d = test.data[i] - ref.data[i];
        grad->data[i] = (d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0)) / n;
      }
    }
    return v;
  }
};

class L2Loss final : public LossFunction {
 public:
  std::string name() const override { return "l2"; }
  double eval(const Image& ref, const Image& test, Image* grad) const override {
    double v = mse(test, ref);
    if (grad) {
      *grad = Image(test.h, test.w, test.c);
      double n = static_cast<double>(test.data.size());
      for (size_t i = 0; i < test.data.size(); ++i)
        grad->data[i] = 2.0 * (test.data[i] - ref.data[i]) / n;
    }
    return v;
  }
};

class SsimLoss final : public LossFunction {
 public:
  std::string name() const override { return "ssim"; }
  double eval(const Image& ref, const Image& test, Image* grad) const override {
    if (!grad) return 1.0 - ssim_impl(test, ref, nullptr);
    *grad = Image(test.h, test.w, test.c);
    double v = ssim_impl(test, ref, grad);
    for (double& g : grad->data) g = -g;
    return 1.0 - v;
  }
};

class MsSsimLoss final : public LossFunction {
 public:
  explicit MsSsimLoss(int levels) : levels_(levels) {}
  std::string name() const override { return "ms_ssim"; }
  bool multi_scale() const override { return true; }
  double eval(const Image& ref, const Image& test, Image* grad) const override {
    if (!grad) return 1.0 - ms_ssim_impl(test, ref, levels_, nullptr);
    *grad = Image(test.h, test.w, test.c);
    double v = ms_ssim_impl(test, ref, levels_, grad);
    for (double& g : grad->data) g = -g;
    return 1.0 - v;
  }

 private:
  int levels_;
};

class MsSsimL1Loss final : public LossFunction {
 public:
  MsSsimL1Loss(double mix, int levels) : mix_(mix), levels_(levels) {
    require(mix >= 0.0 && mix <= 1.0, "ms_ssim_l1: mix must be in [0,1]");
  }
  std::string name() const override { return "ms_ssim_l1"; }
  bool multi_scale() const override { return true; }
  double eval(const Image& ref, const Image& test, Image* grad) const override {
    if (!grad) {
      double msl = 1.0 - ms_ssim_impl(test, ref, levels_, nullptr);
      return mix_ * msl + (1.0 - mix_) * gauss_l1_impl(test, ref, nullptr, 1.0);
    }
    *grad = Image(test.h, test.w, test.c);
    Image ms_grad(test.h, test.w, test.c);
    double ms = ms_ssim_impl(test, ref, levels_, &ms_grad);
    double l1g = gauss_l1_impl(test, ref, grad, 1.0 - mix_);
    for (size_t i = 0; i < grad->data.size(); ++i) grad->data[i] += -mix_ * ms_grad.data[i];
    return mix_ * (1.0 - ms) + (1.0 - mix_) * l1g;
  }

 private:
  double mix_;
  int levels_;
};

class MdfLoss final : public LossFunction {
 public:
  MdfLoss(std::shared_ptr<const DiscriminatorStack> stack, std::vector<int> subset)
      : stack_(std::move(stack)), subset_(std::move(subset)) {}
  std::string name() const override { return "mdf"; }
  double eval(const Image& ref, const Image& test, Image* grad) const override {
    const std::vector<int>* sub = subset_.empty() ? nullptr : &subset_;
    if (!grad) {
      if (sub) return mdf_loss_subset(*stack_, ref, test, subset_);
      return mdf_loss(*stack_, ref, test);
    }
    return mdf_loss_grad(*stack_, ref, test, *grad, sub);
  }
  const DiscriminatorStack& stack() const { return *stack_; }

 private:
  std::shared_ptr<const DiscriminatorStack> stack_;
  std::vector<int> subset_;
};

class CompositeLoss final : public LossFunction {
 public:
  CompositeLoss(std::shared_ptr<LossFunction> base, std::shared_ptr<LossFunction> feature,
                double lambda)
      : base_(std::move(base)), feature_(std::move(feature)), lambda_(lambda) {
    require(lambda >= 0.0, "composite loss: lambda must be >= 0");
  }
  std::string name() const override {
    return base_->name() + "+" + std::to_string(lambda_) + "*" + feature_->name();
  }
  bool needs_external_weights() const override { return feature_->needs_external_weights(); }
  double eval(const Image& ref, const Image& test, Image* grad) const override {
    double v = base_->eval(ref, test, grad);
    if (lambda_ == 0.0) return v;
    if (!grad) return v + lambda_ * feature_->eval(ref, test, nullptr);
    Image fg;
    double fv = feature_->eval(ref, test, &fg);
    for (size_t i = 0; i < grad->data.size(); ++i) grad->data[i] += lambda_ * fg.data[i];
    return v + lambda_ * fv;
  }

 private:
  std::shared_ptr<LossFunction> base_;
  std::shared_ptr<LossFunction> feature_;
  double lambda_;
};

/// Feature distance through a small fixed random conv net; stands in for
/// external extractors (VGG/LPIPS) in tests.
class ToyFeatureLoss final : public LossFunction {
 public:
  explicit ToyFeatureLoss(uint64_t seed) {
    Rng rng(seed, 0x70f0ULL);
    gray_ = PatchDiscriminator<double>(1, 8, 3, 3);
    color_ = PatchDiscriminator<double>(3, 8, 3, 3);
    // He-scaled init keeps the random features O(1).
    for (auto* net : {&gray_, &color_})
      for (auto& c : net->convs) c.init_he(rng);
  }
  std::string name() const override { return "ext:toy"; }
  double eval(const Image& ref, const Image& test, Image* grad) const override {
    require(ref.same_shape(test), "ext:toy: image shapes differ");
    const auto& net = test.c == 1 ? gray_ : color_;
    std::vector<PatchDiscriminator<double>> one{net};
    Tensor<double> gt;
    double v = mdf_loss_t<double>(one, {1}, image_to_tensor<double>(ref),
                                  image_to_tensor<double>(test), nullptr,
                                  grad ? &gt : nullptr);
    if (grad) *grad = tensor_to_image(gt);
    return v;
  }

 private:
  PatchDiscriminator<double> gray_, color_;
};

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t");
  size_t b = s.find_last_not_of(" \t");
  if (a == std::string::npos) return "";
  return s.substr(a, b - a + 1);
}

}  // namespace

std::unique_ptr<LossFunction> make_l1_loss() { return std::make_unique<L1Loss>(); }
std::unique_ptr<LossFunction> make_l2_loss() { return std::make_unique<L2Loss>(); }
std::unique_ptr<LossFunction> make_ssim_loss() { return std::make_unique<SsimLoss>(); }
std::unique_ptr<LossFunction> make_ms_ssim_loss(int levels) {
  return std::make_unique<MsSsimLoss>(levels);
}
std::unique_ptr<LossFunction> make_ms_ssim_l1_loss(double mix, int levels) {
  return std::make_unique<MsSsimL1Loss>(mix, levels);
}
std::unique_ptr<LossFunction> make_mdf_loss(std::shared_ptr<const DiscriminatorStack> stack,
                                            std::vector<int> scales_subset) {
  return std::make_unique<MdfLoss>(std::move(stack), std::move(scales_subset));
}
std::unique_ptr<LossFunction> make_composite_loss(std::shared_ptr<LossFunction> base,
                                                  std::shared_ptr<LossFunction> feature,
                                                  double lambda) {
  return std::make_unique<CompositeLoss>(std::move(base), std::move(feature), lambda);
}
std::unique_ptr<LossFunction> make_toy_feature_loss(uint64_t seed) {
  return std::make_unique<ToyFeatureLoss>(seed);
}

std::vector<double> lambda_sweep_grid() {
  std::vector<double> grid;
  for (int k = -3; k <= 3; ++k) grid.push_back(std::pow(10.0, k));
  return grid;
}

LossRegistry& LossRegistry::instance() {
  static LossRegistry reg;
  return reg;
}

void LossRegistry::register_external(const std::string& name,
                                     std::function<std::unique_ptr<LossFunction>()> factory) {
  external_[name] = std::move(factory);
}

bool LossRegistry::has_external(const std::string& name) const {
  return external_.count(name) > 0;
}

std::unique_ptr<LossFunction> LossRegistry::make(const std::string& spec_in) const {
  std::string spec = trim(spec_in);
  size_t plus = spec.find('+');
  if (plus != std::string::npos) {
    std::string base = trim(spec.substr(0, plus));
    std::string rest = trim(spec.substr(plus + 1));
    size_t star = rest.find('*');
    require(star != std::string::npos,
            "loss spec '" + spec + "': composite form is <base>+<lambda>*<term>");
    double lambda = 0.0;
    try {
      lambda = std::stod(trim(rest.substr(0, star)));
    } catch (const std::exception&) {
      throw ValidationError("loss spec '" + spec + "': cannot parse lambda");
    }
    require(lambda >= 0.0, "loss spec '" + spec + "': lambda must be >= 0");
    std::shared_ptr<LossFunction> b = make(base);
    std::shared_ptr<LossFunction> f = make(trim(rest.substr(star + 1)));
    return std::make_unique<CompositeLoss>(std::move(b), std::move(f), lambda);
  }

  if (spec == "l1") return make_l1_loss();
  if (spec == "l2" || spec == "mse") return make_l2_loss();
  if (spec == "ssim") return make_ssim_loss();
  if (spec == "ms_ssim" || spec == "ms-ssim") return make_ms_ssim_loss();
  if (spec == "ms_ssim_l1" || spec == "ms-ssim-l1") return make_ms_ssim_l1_loss();
  if (spec.rfind("mdf:", 0) == 0) {
    std::string path = spec.substr(4);
    require(!path.empty(), "loss spec 'mdf:': missing stack path");
    auto stack = std::make_shared<DiscriminatorStack>(load_stack(path));
    return make_mdf_loss(std::move(stack));
  }
  if (spec.rfind("ext:", 0) == 0) {
    std::string name = spec.substr(4);
    auto it = external_.find(name);
    if (it == external_.end())
      throw ValidationError("external weights required for feature loss '" + name +
                            "': no extractor is registered under that name");
    return it->second();
  }
  throw ValidationError("unknown loss spec: '" + spec + "'");
}

}  // namespace mdf
