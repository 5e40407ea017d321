// Copyright (c) 2026 the mdf authors
// SPDX-License-Identifier: Apache-2.0

#include "mdf/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "mdf/distort.hpp"
#include "mdf/image_io.hpp"
#include "mdf/resize.hpp"

namespace mdf {

double psnr(const Image& x, const Image& x_hat, double peak) { return psnr_db(x, x_hat, peak); }

Image degrade_for_eval(const Image& img, const TaskSpec& task, const EvalOptions& opts,
                       uint64_t index) {
  switch (task.task) {
    case Task::kSisr:
      return resize(img, std::max(1, img.h / task.sr_factor), std::max(1, img.w / task.sr_factor),
                    Filter::kBicubic);
    case Task::kDenoise: {
      Rng rng(opts.seed, 0xe7a1ULL + index);
      return add_gaussian_noise(img, opts.denoise_sigma, rng);
    }
    default:
      return jpeg_roundtrip(img, opts.jpeg_quality);
  }
}

MetricReport evaluate_model(const RestorationModel& model, const std::string& test_dir,
                            const TaskSpec& task, const EvalOptions& opts) {
  require(std::filesystem::is_directory(test_dir), "test directory does not exist: " + test_dir);
  if (opts.compute_niqe)
    require(opts.niqe_model != nullptr, "evaluate_model: NIQE requested without a model");

  std::vector<std::string> files;
  for (const auto& entry : std::filesystem::directory_iterator(test_dir))
    if (entry.is_regular_file()) files.push_back(entry.path().string());
  std::sort(files.begin(), files.end());

  MetricReport report;
  report.condition = opts.condition;
  double psnr_sum = 0.0, ssim_sum = 0.0, niqe_sum = 0.0;
  int psnr_n = 0, niqe_n = 0;

  uint64_t index = 0;
  for (const auto& f : files) {
    Image gt;
    try {
      gt = load_image(f);
    } catch (const std::exception& e) {
      std::fprintf(stderr, "[eval] skipping unreadable file %s: %s\n", f.c_str(), e.what());
      continue;
    }
    if (task.task == Task::kSisr) {
      // Crop so dimensions divide the SR factor and the output shapes match.
      int h = gt.h - gt.h % task.sr_factor;
      int w = gt.w - gt.w % task.sr_factor;
      Image cropped(h, w, gt.c);
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
          for (int ch = 0; ch < gt.c; ++ch) cropped.at(y, x, ch) = gt.at(y, x, ch);
      gt = std::move(cropped);
    }
    Image degraded = degrade_for_eval(gt, task, opts, index++);
    // Metrics are computed on the encodable result: clamp and quantize to the
    // 8-bit grid, exactly as if the output had been saved and reloaded.
    Image restored = clamp01(model.infer(degraded));
    for (double& v : restored.data) v = std::floor(v * 255.0 + 0.5) / 255.0;

    MetricReport::Row row;
    row.name = std::filesystem::path(f).filename().string();
    double p = psnr_db(gt, restored);
    row.psnr_infinite = std::isinf(p);
    row.psnr_db = p;
    row.ssim = ssim(restored, gt);
    row.niqe_score = std::numeric_limits<double>::quiet_NaN();
    if (opts.compute_niqe && gt.h >= opts.niqe_model->patch && gt.w >= opts.niqe_model->patch) {
      row.niqe_score = niqe(restored, *opts.niqe_model);
      niqe_sum += row.niqe_score;
      ++niqe_n;
    }
    if (!row.psnr_infinite) {
      psnr_sum += p;
      ++psnr_n;
    }
    ssim_sum += row.ssim;
    report.rows.push_back(std::move(row));
  }
  require(!report.rows.empty(), "evaluate_model: no usable images in " + test_dir);
  report.mean_psnr = psnr_n ? psnr_sum / psnr_n : std::numeric_limits<double>::infinity();
  report.mean_ssim = ssim_sum / static_cast<double>(report.rows.size());
  report.mean_niqe = niqe_n ? niqe_sum / niqe_n : std::numeric_limits<double>::quiet_NaN();
  return report;
}

void MetricReport::write_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw RuntimeError("cannot write report: " + path);
  out << "image,psnr_db,ssim,niqe\n";
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%s,%s,%.6f,%.6f\n", r.name.c_str(),
                  r.psnr_infinite ? "inf" : std::to_string(r.psnr_db).c_str(), r.ssim,
                  r.niqe_score);
    out << buf;
  }
  std::snprintf(buf, sizeof(buf), "mean,%.6f,%.6f,%.6f\n", mean_psnr, mean_ssim, mean_niqe);
  out << buf;
}

}  // namespace mdf
