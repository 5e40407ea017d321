// Copyright (c) 2026 the mdf authors
// SPDX-License-Identifier: Apache-2.0

#include "mdf/study.hpp"

#include <cstdio>
#include <fstream>

namespace mdf {

SensitivityTable sensitivity_study(const std::vector<const LossFunction*>& losses,
                                   const std::vector<Image>& images,
                                   const std::vector<DistortionKind>& kinds,
                                   const std::vector<double>& psnr_levels_db,
                                   uint64_t noise_seed) {
  require(!losses.empty() && !images.empty() && !kinds.empty() && !psnr_levels_db.empty(),
          "sensitivity_study: empty inputs");

  // Distorted images are produced once per (kind, level, image).
  SensitivityTable table;
  for (DistortionKind kind : kinds) {
    for (double level : psnr_levels_db) {
      std::vector<Image> distorted;
      std::vector<double> achieved;
      for (const Image& img : images) {
        Image d = distort_at_target_psnr(img, kind, level, noise_seed);
        achieved.push_back(psnr_db(img, d));
        distorted.push_back(std::move(d));
      }
      for (const LossFunction* loss : losses) {
        SensitivityTable::Row row;
        row.loss = loss->name();
        row.kind = distortion_name(kind);
        row.target_psnr_db = level;
        double sum = 0.0, psum = 0.0;
        for (size_t i = 0; i < images.size(); ++i) {
          double v = loss->eval(images[i], distorted[i], nullptr);
          row.per_image.push_back(v);
          sum += v;
          psum += achieved[i];
        }
        row.mean_loss = sum / static_cast<double>(images.size());
        row.mean_achieved_psnr_db = psum / static_cast<double>(images.size());
        table.rows.push_back(std::move(row));
      }
    }
  }
  return table;
}

void SensitivityTable::write_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw RuntimeError("cannot write study table: " + path);
  out << "loss,kind,target_psnr_db,mean_loss,mean_achieved_psnr_db\n";
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%s,%s,%.2f,%.9g,%.4f\n", r.loss.c_str(), r.kind.c_str(),
                  r.target_psnr_db, r.mean_loss, r.mean_achieved_psnr_db);
    out << buf;
  }
}

}  // namespace mdf
