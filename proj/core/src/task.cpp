// Copyright (c) 2026 the mdf authors
// SPDX-License-Identifier: Apache-2.0

#include "mdf/task.hpp"

#include "mdf/distort.hpp"
#include "mdf/image_io.hpp"

namespace mdf {

Task task_from_name(const std::string& name) {
  if (name == "sisr" || name == "sr") return Task::kSisr;
  if (name == "denoise") return Task::kDenoise;
  if (name == "jpeg") return Task::kJpeg;
  throw ValidationError("unknown task: " + name + " (expected sisr, denoise or jpeg)");
}

std::string task_name(Task t) {
  switch (t) {
    case Task::kSisr: return "sisr";
    case Task::kDenoise: return "denoise";
    default: return "jpeg";
  }
}

Image corrupt_for_task(const Image& img, const TaskSpec& task, Rng& rng) {
  task.validate();
  switch (task.task) {
    case Task::kSisr:
      return img;  // z^k = 0
    case Task::kDenoise: {
      double sigma = rng.uniform(task.noise_sigma_lo, task.noise_sigma_hi);
      return add_gaussian_noise(img, sigma, rng);
    }
    default: {
      int q = rng.uniform_int(task.jpeg_quality_lo, task.jpeg_quality_hi);
      return jpeg_roundtrip(img, q);
    }
  }
}

}  // namespace mdf
