// Copyright (c) 2026 the mdf authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "mdf/image.hpp"

namespace mdf {

enum class Filter { kLanczos, kBicubic, kBilinear };

Filter filter_from_name(const std::string& name);
std::string filter_name(Filter f);

/// Separable resampling. The kernel support is widened by the inverse scale
/// when minifying so that downsampling is antialiased. Border handling is
/// clamp-to-edge, weights are normalized per output sample.
/// Lanczos uses a = 3 lobes; bicubic is the Keys kernel (a = -0.5).
Image resize(const Image& img, int out_h, int out_w, Filter filter);

}  // namespace mdf
