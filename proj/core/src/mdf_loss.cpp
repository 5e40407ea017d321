// Copyright (c) 2026 the mdf authors
// SPDX-License-Identifier: Apache-2.0

#include "mdf/mdf_loss.hpp"

#include <algorithm>

namespace mdf {

namespace {

void check_input(const DiscriminatorStack& stack, const Image& img) {
  require(!stack.scales.empty(), "mdf: stack has no discriminators");
  require(img.c == stack.channels(),
          "mdf: channel count mismatch (stack trained on " + std::to_string(stack.channels()) +
              " channels, image has " + std::to_string(img.c) + ")");
  require(img.h >= kReceptiveField && img.w >= kReceptiveField,
          "mdf: image smaller than the 11x11 receptive field");
}

}  // namespace

std::vector<int> all_scales(const DiscriminatorStack& stack) {
  std::vector<int> s(stack.scale_count());
  for (int i = 0; i < stack.scale_count(); ++i) s[i] = i + 1;
  return s;
}

FeatureSet extract_features(const DiscriminatorStack& stack, const Image& img) {
  check_input(stack, img);
  Tensor<float> x = image_to_tensor<float>(img);
  FeatureSet fs;
  fs.scales.reserve(stack.scales.size());
  for (const auto& d : stack.scales) {
    auto tr = d.run(x, true);
    fs.scales.push_back(d.features(tr));
  }
  return fs;
}

template <typename T>
double mdf_loss_t(const std::vector<PatchDiscriminator<T>>& discs,
                  const std::vector<int>& scales_subset, const Tensor<T>& x,
                  const Tensor<T>& x_hat, std::vector<double>* per_scale, Tensor<T>* grad_x_hat) {
  require(x.same_shape(x_hat), "mdf: reference and reconstruction shapes differ");
  if (per_scale) per_scale->assign(discs.size(), 0.0);
  if (grad_x_hat) *grad_x_hat = Tensor<T>(x.n, x.c, x.h, x.w);

  double total = 0.0;
  for (int k : scales_subset) {
    require(k >= 1 && k <= static_cast<int>(discs.size()), "mdf: scale index out of range");
    const auto& d = discs[k - 1];
    auto tr_ref = d.run(x, true);
    auto tr_hat = d.run(x_hat, true);
    auto taps_ref = d.features(tr_ref);
    auto taps_hat = d.features(tr_hat);

    double scale_sum = 0.0;
    std::vector<Tensor<T>> dtaps(taps_hat.size());
    for (size_t l = 0; l < taps_hat.size(); ++l) {
      const auto& a = taps_hat[l];
      const auto& b = taps_ref[l];
      double s = 0.0;
      if (grad_x_hat) {
        Tensor<T> e(a.n, a.c, a.h, a.w);
        for (size_t i = 0; i < a.v.size(); ++i) {
          double dv = static_cast<double>(a.v[i]) - static_cast<double>(b.v[i]);
          s += dv * dv;
          e.v[i] = static_cast<T>(2.0 * dv);
        }
        dtaps[l] = std::move(e);
      } else {
        for (size_t i = 0; i < a.v.size(); ++i) {
          double dv = static_cast<double>(a.v[i]) - static_cast<double>(b.v[i]);
          s += dv * dv;
        }
      }
      scale_sum += s;
    }
    if (grad_x_hat) {
      Tensor<T> dx = d.input_gradient(tr_hat, nullptr, &dtaps);
      add_inplace(*grad_x_hat, dx);
    }
    if (per_scale) (*per_scale)[k - 1] = scale_sum;
    total += scale_sum;
  }
  return total;
}

template double mdf_loss_t<float>(const std::vector<PatchDiscriminator<float>>&,
                                  const std::vector<int>&, const Tensor<float>&,
                                  const Tensor<float>&, std::vector<double>*, Tensor<float>*);
template double mdf_loss_t<double>(const std::vector<PatchDiscriminator<double>>&,
                                   const std::vector<int>&, const Tensor<double>&,
                                   const Tensor<double>&, std::vector<double>*, Tensor<double>*);

double mdf_loss(const DiscriminatorStack& stack, const Image& x, const Image& x_hat,
                std::vector<double>* per_scale) {
  check_input(stack, x);
  require(x.same_shape(x_hat), "mdf_loss: image shapes differ");
  return mdf_loss_t<float>(stack.scales, all_scales(stack), image_to_tensor<float>(x),
                           image_to_tensor<float>(x_hat), per_scale, nullptr);
}

double mdf_loss_subset(const DiscriminatorStack& stack, const Image& x, const Image& x_hat,
                       const std::vector<int>& scales_subset) {
  check_input(stack, x);
  require(x.same_shape(x_hat), "mdf_loss_subset: image shapes differ");
  return mdf_loss_t<float>(stack.scales, scales_subset, image_to_tensor<float>(x),
                           image_to_tensor<float>(x_hat), nullptr, nullptr);
}

double mdf_loss_grad(const DiscriminatorStack& stack, const Image& x, const Image& x_hat,
                     Image& grad_out, const std::vector<int>* scales_subset) {
  check_input(stack, x);
  require(x.same_shape(x_hat), "mdf_loss_grad: image shapes differ");
  Tensor<float> grad;
  std::vector<int> scales = scales_subset ? *scales_subset : all_scales(stack);
  double v = mdf_loss_t<float>(stack.scales, scales, image_to_tensor<float>(x),
                               image_to_tensor<float>(x_hat), nullptr, &grad);
  grad_out = tensor_to_image(grad);
  return v;
}

}  // namespace mdf
