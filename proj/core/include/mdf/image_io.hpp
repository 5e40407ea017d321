// Copyright (c) 2026 the mdf authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "mdf/image.hpp"

namespace mdf {

/// Identity string of the JPEG codec build, recorded in checkpoint manifests
/// (bit-exact JPEG output varies across encoders).
std::string jpeg_codec_id();

/// Load a PNG or JPEG file (sniffed by magic bytes) as an 8-bit sRGB image
/// mapped to [0,1] by value/255. Gray stays 1-channel; palette/RGBA become RGB.
Image load_image(const std::string& path);

/// Encode to 8-bit with round-half-up; values are clamped into [0,1] first.
void save_png(const Image& img, const std::string& path);
void save_jpeg(const Image& img, const std::string& path, int quality = 95);

/// decode(encode(clamp(img), quality)): the codec distortion used for JPEG
/// artefact tasks. In-memory; dimensions are preserved. quality in [1,100].
Image jpeg_roundtrip(const Image& img, int quality);

}  // namespace mdf
