// Copyright (c) 2026 the mdf authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "mdf/image.hpp"

namespace mdf {

enum class Task { kSisr, kDenoise, kJpeg };

Task task_from_name(const std::string& name);
std::string task_name(Task t);

/// Restoration task and its corruption parameters. For SISR the corruption is
/// identically zero; denoising draws sigma uniformly on the 0-255 pixel scale
/// and JPEG draws an integer quality.
struct TaskSpec {
  Task task = Task::kDenoise;
  double noise_sigma_lo = 0.0;
  double noise_sigma_hi = 55.0;
  int jpeg_quality_lo = 7;
  int jpeg_quality_hi = 10;
  int sr_factor = 4;

  void validate() const {
    require(noise_sigma_lo >= 0.0 && noise_sigma_hi >= noise_sigma_lo && noise_sigma_hi <= 255.0,
            "TaskSpec: noise sigma range invalid");
    require(jpeg_quality_lo >= 1 && jpeg_quality_hi <= 100 && jpeg_quality_lo <= jpeg_quality_hi,
            "TaskSpec: jpeg quality range invalid");
    require(sr_factor >= 2, "TaskSpec: sr factor must be >= 2");
  }

  static TaskSpec sisr(int factor = 4) {
    TaskSpec s;
    s.task = Task::kSisr;
    s.sr_factor = factor;
    return s;
  }
  static TaskSpec denoise(double lo = 0.0, double hi = 55.0) {
    TaskSpec s;
    s.task = Task::kDenoise;
    s.noise_sigma_lo = lo;
    s.noise_sigma_hi = hi;
    return s;
  }
  static TaskSpec jpeg(int lo = 7, int hi = 10) {
    TaskSpec s;
    s.task = Task::kJpeg;
    s.jpeg_quality_lo = lo;
    s.jpeg_quality_hi = hi;
    return s;
  }
};

/// The inter-scale distortion z^k: Gaussian noise for denoising, a codec
/// round-trip for JPEG, and nothing at all for SISR.
Image corrupt_for_task(const Image& img, const TaskSpec& task, Rng& rng);

}  // namespace mdf
