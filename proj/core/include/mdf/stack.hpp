// Copyright (c) 2026 the mdf authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "mdf/nets.hpp"
#include "mdf/pyramid.hpp"
#include "mdf/task.hpp"

namespace mdf {

/// Provenance recorded with every trained stack.
struct StackMeta {
  TaskSpec task;
  int scales = 8;
  double rho = 2.0;
  std::string rounding = "half-up-from-original";
  int iterations_per_scale = 3000;
  double alpha = 100.0;
  double lr = 5e-4;
  int d_steps = 3, g_steps = 3;
  double lambda_gp = 0.1;
  std::vector<int> widths;  // per scale, coarse to fine
  int depth = 5, kernel = 3;
  int channels = 3;
  std::vector<std::string> seed_hashes;
  std::string codec;
  std::string engine = "mdf-core/0.1";
  std::string created;
  uint64_t rng_seed = 0;
  bool deterministic = true;
  std::string normalization = "none";
};

/// K frozen per-scale discriminators, coarse to fine, plus training metadata.
/// Immutable after load; evaluation is deterministic and re-entrant.
struct DiscriminatorStack {
  std::vector<PatchDiscriminator<float>> scales;
  StackMeta meta;

  int scale_count() const { return static_cast<int>(scales.size()); }
  int channels() const { return scales.empty() ? 0 : scales.front().in_ch; }
  int layer_count() const { return scales.empty() ? 0 : scales.front().tap_count(); }

  std::vector<PatchDiscriminator<double>> cast_double() const {
    std::vector<PatchDiscriminator<double>> out;
    out.reserve(scales.size());
    for (const auto& d : scales) out.push_back(d.template cast<double>());
    return out;
  }
};

/// Checkpoint container: a directory with manifest.json plus one raw
/// little-endian float32 blob per weight tensor, each CRC-checked.
void save_stack(const DiscriminatorStack& stack, const std::string& dir);
DiscriminatorStack load_stack(const std::string& dir);

/// Total serialized size in bytes (manifest + blobs) of an existing checkpoint.
uint64_t checkpoint_size_bytes(const std::string& dir);

}  // namespace mdf
