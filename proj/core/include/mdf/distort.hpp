// Copyright (c) 2026 the mdf authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "mdf/image.hpp"

namespace mdf {

enum class DistortionKind {
  kGaussianNoise,
  kJpeg,
  kBlurDownUp,
  kSinusoid,
  kContrast,
  kBrightness,
  kPyramidPermute,
};

DistortionKind distortion_from_name(const std::string& name);
std::string distortion_name(DistortionKind k);

/// i.i.d. zero-mean Gaussian noise with sigma given on the 0-255 pixel scale.
/// No clamping: training must see unclipped noise statistics.
Image add_gaussian_noise(const Image& img, double sigma255, Rng& rng);

/// Downsample then upsample by `factor` with a bilinear filter (the blur
/// family used by the manifold probe and the sensitivity study).
Image blur_downup(const Image& img, int factor = 4);

/// Add a horizontal sinusoidal grating, fixed at `cycles` per image width.
Image add_sinusoid(const Image& img, double amplitude, double cycles = 8.0);

/// Scale contrast about the per-image mean: out = mean + factor*(img - mean).
Image adjust_contrast(const Image& img, double factor);

/// Additive brightness offset, unclamped.
Image adjust_brightness(const Image& img, double offset);

/// Severity bounds for distort_at_target_psnr, per kind.
struct SeverityRange {
  double lo = 0.0;
  double hi = 1.0;
};

/// Apply `kind` at a scalar severity (monotone in distortion energy):
///   gaussian_noise: sigma255 = severity, on a fixed unit realization
///   blur_downup:    blend fraction toward the factor-4 blurred image
///   sinusoid:       grating amplitude
///   contrast:       contrast reduction, factor = 1 - severity
///   brightness:     additive offset
Image apply_severity(const Image& img, DistortionKind kind, double severity, uint64_t noise_seed = 7);

/// Find the severity whose PSNR against `img` hits target_psnr_db within
/// +-0.1 dB by bisection, and return the distorted image. Throws naming the
/// achievable PSNR range when the target is out of reach.
Image distort_at_target_psnr(const Image& img, DistortionKind kind, double target_psnr_db,
                             uint64_t noise_seed = 7, double* severity_out = nullptr);

}  // namespace mdf
