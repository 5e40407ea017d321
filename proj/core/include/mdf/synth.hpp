// Copyright (c) 2026 the mdf authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <complex>

#include "mdf/image.hpp"

namespace mdf {

/// In-place radix-2 FFT; n must be a power of two.
void fft_inplace(std::vector<std::complex<double>>& a, bool inverse);

/// 2-D FFT power spectrum |F|^2 of a single-channel image, zero-padded to the
/// next power of two. Returns the padded size through `n_out`.
std::vector<double> fft2_power(const Image& gray, int* n_out);

/// Radially averaged power in `bins` octave bands (DC excluded).
std::vector<double> radial_power_bands(const Image& gray, int bins);

struct SynthOptions {
  int h = 128;
  int w = 128;
  int channels = 3;
  double spectral_exponent_min = 0.8;  // amplitude ~ 1/f^beta
  double spectral_exponent_max = 1.4;
  int shapes = 3;
  double target_std = 0.18;
};

/// Deterministic natural-looking test image: 1/f spectral noise plus a few
/// soft-edged shapes and a global gradient, normalized to a healthy contrast.
Image synth_image(uint64_t seed, const SynthOptions& opts = {});

/// Write `count` synthetic PNGs into a directory (created if missing).
std::vector<std::string> synth_dataset(const std::string& dir, int count, uint64_t seed,
                                       const SynthOptions& opts = {});

}  // namespace mdf
