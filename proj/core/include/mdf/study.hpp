// Copyright (c) 2026 the mdf authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "mdf/distort.hpp"
#include "mdf/losses.hpp"

namespace mdf {

/// Loss values against the clean reference for distortions generated at equal
/// PSNR levels. One row per (loss, kind, level).
struct SensitivityTable {
  struct Row {
    std::string loss;
    std::string kind;
    double target_psnr_db;
    double mean_loss;
    double mean_achieved_psnr_db;
    std::vector<double> per_image;
  };
  std::vector<Row> rows;

  void write_csv(const std::string& path) const;
};

SensitivityTable sensitivity_study(const std::vector<const LossFunction*>& losses,
                                   const std::vector<Image>& images,
                                   const std::vector<DistortionKind>& kinds,
                                   const std::vector<double>& psnr_levels_db,
                                   uint64_t noise_seed = 7);

}  // namespace mdf
