// Copyright (c) 2026 the mdf authors
// SPDX-License-Identifier: Apache-2.0

#include "mdf/distort.hpp"

#include <algorithm>
#include <cmath>

#include "mdf/resize.hpp"

namespace mdf {

DistortionKind distortion_from_name(const std::string& name) {
  if (name == "gaussian_noise" || name == "noise") return DistortionKind::kGaussianNoise;
  if (name == "jpeg") return DistortionKind::kJpeg;
  if (name == "blur_downup" || name == "blur") return DistortionKind::kBlurDownUp;
  if (name == "sinusoid") return DistortionKind::kSinusoid;
  if (name == "contrast") return DistortionKind::kContrast;
  if (name == "brightness") return DistortionKind::kBrightness;
  if (name == "pyramid_permute") return DistortionKind::kPyramidPermute;
  throw ValidationError("unknown distortion kind: " + name);
}

std::string distortion_name(DistortionKind k) {
  switch (k) {
    case DistortionKind::kGaussianNoise: return "gaussian_noise";
    case DistortionKind::kJpeg: return "jpeg";
    case DistortionKind::kBlurDownUp: return "blur_downup";
    case DistortionKind::kSinusoid: return "sinusoid";
    case DistortionKind::kContrast: return "contrast";
    case DistortionKind::kBrightness: return "brightness";
    default: return "pyramid_permute";
  }
}

Image add_gaussian_noise(const Image& img, double sigma255, Rng& rng) {
  require(sigma255 >= 0.0, "add_gaussian_noise: sigma must be >= 0");
  Image out = img;
  if (sigma255 == 0.0) return out;
  double sigma = sigma255 / 255.0;
  for (double& v : out.data) v += sigma * rng.gaussian();
  return out;
}

Image blur_downup(const Image& img, int factor) {
  require(factor >= 2, "blur_downup: factor must be >= 2");
  int dh = std::max(1, img.h / factor);
  int dw = std::max(1, img.w / factor);
  Image down = resize(img, dh, dw, Filter::kBilinear);
  return resize(down, img.h, img.w, Filter::kBilinear);
}

Image add_sinusoid(const Image& img, double amplitude, double cycles) {
  Image out = img;
  for (int y = 0; y < img.h; ++y)
    for (int x = 0; x < img.w; ++x) {
      double s = amplitude * std::sin(2.0 * M_PI * cycles * x / img.w);
      for (int ch = 0; ch < img.c; ++ch) out.at(y, x, ch) += s;
    }
  return out;
}

Image adjust_contrast(const Image& img, double factor) {
  double m = mean_value(img);
  Image out = img;
  for (double& v : out.data) v = m + factor * (v - m);
  return out;
}

Image adjust_brightness(const Image& img, double offset) {
  Image out = img;
  for (double& v : out.data) v += offset;
  return out;
}

namespace {

SeverityRange severity_range(DistortionKind kind) {
  switch (kind) {
    case DistortionKind::kGaussianNoise: return {0.0, 160.0};  // sigma255
    case DistortionKind::kBlurDownUp: return {0.0, 1.0};       // blend fraction
    case DistortionKind::kSinusoid: return {0.0, 0.8};         // amplitude
    case DistortionKind::kContrast: return {0.0, 1.0};         // 1 - factor
    case DistortionKind::kBrightness: return {0.0, 0.9};       // offset
    default:
      throw ValidationError("distort_at_target_psnr: kind has no scalar severity: " +
                            distortion_name(kind));
  }
}

}  // namespace

Image apply_severity(const Image& img, DistortionKind kind, double severity, uint64_t noise_seed) {
  switch (kind) {
    case DistortionKind::kGaussianNoise: {
      // Fixed realization scaled by sigma, so PSNR is strictly monotone in
      // severity and bisection is well posed.
      Rng rng(noise_seed);
      Image out = img;
      double sigma = severity / 255.0;
      for (double& v : out.data) v += sigma * rng.gaussian();
      return out;
    }
    case DistortionKind::kBlurDownUp: {
      Image blurred = blur_downup(img, 4);
      Image out = img;
      for (size_t i = 0; i < out.data.size(); ++i)
        out.data[i] = (1.0 - severity) * img.data[i] + severity * blurred.data[i];
      return out;
    }
    case DistortionKind::kSinusoid: return add_sinusoid(img, severity);
    case DistortionKind::kContrast: return adjust_contrast(img, 1.0 - severity);
    case DistortionKind::kBrightness: return adjust_brightness(img, severity);
    default:
      throw ValidationError("apply_severity: kind has no scalar severity: " + distortion_name(kind));
  }
}

Image distort_at_target_psnr(const Image& img, DistortionKind kind, double target_psnr_db,
                             uint64_t noise_seed, double* severity_out) {
  SeverityRange range = severity_range(kind);
  const double tol_db = 0.1;

  double psnr_hi = psnr_db(img, apply_severity(img, kind, range.hi, noise_seed));
  // severity 0 distorts nothing -> PSNR infinite.
  if (target_psnr_db < psnr_hi - tol_db) {
    throw ValidationError("distort_at_target_psnr: target " + std::to_string(target_psnr_db) +
                          " dB unreachable for kind " + distortion_name(kind) +
                          "; achievable range is [" + std::to_string(psnr_hi) + ", inf) dB");
  }

  double lo = range.lo, hi = range.hi;
  double s = hi;
  for (int it = 0; it < 80; ++it) {
    s = 0.5 * (lo + hi);
    double p = psnr_db(img, apply_severity(img, kind, s, noise_seed));
    if (p > target_psnr_db)
      lo = s;  // too mild
    else
      hi = s;
  }
  Image out = apply_severity(img, kind, s, noise_seed);
  double achieved = psnr_db(img, out);
  if (std::abs(achieved - target_psnr_db) > tol_db) {
    throw RuntimeError("distort_at_target_psnr: bisection missed target (" +
                       std::to_string(achieved) + " vs " + std::to_string(target_psnr_db) + " dB)");
  }
  if (severity_out) *severity_out = s;
  return out;
}

}  // namespace mdf
