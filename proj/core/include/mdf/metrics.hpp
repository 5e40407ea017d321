// Copyright (c) 2026 the mdf authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>

#include "mdf/restoration.hpp"

namespace mdf {

/// 10*log10(peak^2 / MSE). Identical pairs flag infinite PSNR.
double psnr(const Image& x, const Image& x_hat, double peak = 1.0);

// -----------------------------------------------------------------------
// NIQE: multivariate-Gaussian distance between an image's MSCN patch
// features and a pristine model shipped with the repo.
// -----------------------------------------------------------------------

struct NiqeModel {
  std::vector<double> mean;             // 36 features
  std::vector<std::vector<double>> cov; // 36x36
  int patch = 96;
  double sharpness_fraction = 0.75;
  std::string provenance;

  void save(const std::string& path) const;
  static NiqeModel load(const std::string& path);
};

/// Fits the pristine model from a set of images (>= patch size each); patches
/// below the sharpness threshold are excluded, as in the metric's definition.
NiqeModel fit_niqe_model(const std::vector<Image>& pristine, int patch = 96,
                         double sharpness_fraction = 0.75, const std::string& provenance = "");

/// Lower is better. Image must be at least patch x patch.
double niqe(const Image& img, const NiqeModel& model);

/// 36-dim NSS feature vector of one grayscale patch pair (2 scales).
std::vector<double> niqe_features_for_test(const Image& gray);

// -----------------------------------------------------------------------
// Benchmark table
// -----------------------------------------------------------------------

struct MetricReport {
  struct Row {
    std::string name;
    double psnr_db;
    bool psnr_infinite;
    double ssim;
    double niqe_score;  // NaN when not computed
  };
  std::vector<Row> rows;
  double mean_psnr = 0.0;   // infinite rows excluded
  double mean_ssim = 0.0;
  double mean_niqe = 0.0;
  std::string condition;

  void write_csv(const std::string& path) const;
};

struct EvalOptions {
  bool compute_niqe = false;
  const NiqeModel* niqe_model = nullptr;
  double denoise_sigma = 25.0;  // evaluation corruption for the denoise task
  int jpeg_quality = 10;
  uint64_t seed = 99;
  std::string condition;
};

/// Corrupts every image in test_dir per the task, restores it with the model
/// and reports PSNR/SSIM (and NIQE when requested) per image plus means.
MetricReport evaluate_model(const RestorationModel& model, const std::string& test_dir,
                            const TaskSpec& task, const EvalOptions& opts = {});

/// The degraded input the evaluation protocol feeds the model for one image.
Image degrade_for_eval(const Image& img, const TaskSpec& task, const EvalOptions& opts,
                       uint64_t index);

}  // namespace mdf
