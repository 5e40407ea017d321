// Copyright (c) 2026 the mdf authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <map>
#include <memory>

#include "mdf/mdf_loss.hpp"

namespace mdf {

/// Uniform loss contract: (reference, test) -> differentiable scalar.
/// Distance-type losses return exactly 0 at identity.
class LossFunction {
 public:
  virtual ~LossFunction() = default;
  virtual std::string name() const = 0;
  virtual bool multi_scale() const { return false; }
  virtual bool needs_external_weights() const { return false; }

  /// Loss value; when grad_out is non-null it receives d(loss)/d(test).
  virtual double eval(const Image& ref, const Image& test, Image* grad_out) const = 0;

  double value(const Image& ref, const Image& test) const { return eval(ref, test, nullptr); }
};

// Plain-function forms.
double l1_loss(const Image& x, const Image& x_hat);
double l2_loss(const Image& x, const Image& x_hat);

/// Mean SSIM index: 11x11 Gaussian window (sigma 1.5), C1=(0.01)^2,
/// C2=(0.03)^2 on unit dynamic range, valid window positions, per channel
/// then averaged. Needs images >= 11x11.
double ssim(const Image& x, const Image& y);
double ssim_loss(const Image& x, const Image& x_hat);  // 1 - SSIM

/// MS-SSIM with the canonical 5-scale weights; `levels = 0` uses as many
/// dyadic scales as fit the 11x11 window (weights renormalized), an explicit
/// level count throws when the image is too small.
double ms_ssim(const Image& x, const Image& y, int levels = 0);
double ms_ssim_loss(const Image& x, const Image& x_hat, int levels = 0);

/// mix * ms_ssim_loss + (1-mix) * Gaussian-weighted L1 (mix default 0.84).
double ms_ssim_l1_loss(const Image& x, const Image& x_hat, double mix = 0.84, int levels = 0);

int ms_ssim_max_levels(int h, int w);

// Factories for the polymorphic contract.
std::unique_ptr<LossFunction> make_l1_loss();
std::unique_ptr<LossFunction> make_l2_loss();
std::unique_ptr<LossFunction> make_ssim_loss();
std::unique_ptr<LossFunction> make_ms_ssim_loss(int levels = 0);
std::unique_ptr<LossFunction> make_ms_ssim_l1_loss(double mix = 0.84, int levels = 0);

/// Frozen discriminator stack as a loss (Phase 2). Optionally restricted to a
/// subset of 1-based scales.
std::unique_ptr<LossFunction> make_mdf_loss(std::shared_ptr<const DiscriminatorStack> stack,
                                            std::vector<int> scales_subset = {});

/// base + lambda * feature term. Used for MSE + lambda * VGG/LPIPS style
/// mixes; lambda = 0 reduces exactly to the base.
std::unique_ptr<LossFunction> make_composite_loss(std::shared_ptr<LossFunction> base,
                                                  std::shared_ptr<LossFunction> feature,
                                                  double lambda);

/// The lambda grid searched in hyper-parameter sweeps: 10^k, k = -3..3.
std::vector<double> lambda_sweep_grid();

/// Tiny fixed random-weight feature network; the stand-in for external
/// feature extractors in tests and documentation.
std::unique_ptr<LossFunction> make_toy_feature_loss(uint64_t seed = 11);

/// External feature-loss providers (VGG, LPIPS, ...). Names are resolved by
/// `ext:<name>` loss specs; unresolved names raise an "external weights
/// required" error rather than silently falling back.
class LossRegistry {
 public:
  static LossRegistry& instance();

  void register_external(const std::string& name,
                         std::function<std::unique_ptr<LossFunction>()> factory);
  bool has_external(const std::string& name) const;

  /// Parses a loss spec string:
  ///   "l1" | "l2" | "mse" | "ssim" | "ms_ssim" | "ms_ssim_l1"
  ///   "mdf:<stack dir>"          loads a checkpoint
  ///   "ext:<name>"               registered external extractor
  ///   "<base>+<lambda>*<term>"   composite, e.g. "mse+0.1*ext:lpips"
  std::unique_ptr<LossFunction> make(const std::string& spec) const;

 private:
  std::map<std::string, std::function<std::unique_ptr<LossFunction>()>> external_;
};

}  // namespace mdf
