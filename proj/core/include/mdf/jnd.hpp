// Copyright (c) 2026 the mdf authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "mdf/common.hpp"

#include <string>
#include <vector>

namespace mdf {

/// Pairwise preference counts: counts[i][j] = times condition i was preferred
/// over condition j. Diagonal is zero.
struct ComparisonMatrix {
  std::vector<std::string> names;
  std::vector<std::vector<int>> counts;

  int size() const { return static_cast<int>(counts.size()); }
  void validate() const;

  /// CSV rows "i,j,count" (0-based indices, optional header) or JSON
  /// {"names": [...], "counts": [[...]]}.
  static ComparisonMatrix load(const std::string& path);
  static ComparisonMatrix from_csv_text(const std::string& text);
  static ComparisonMatrix from_json_text(const std::string& text);
};

/// Thurstone Case V maximum-likelihood scale in JND units:
/// P(i over j) = Phi((q_i - q_j) / sigma) with sigma = 1/Phi^-1(0.75), so a
/// difference of 1 JND means 75% preference. Scores anchored at min = 0.
struct JndScores {
  std::vector<std::string> names;
  std::vector<double> q;
  std::vector<double> ci95;  // half-width; the anchor condition reports 0
  double sigma = 0.0;
  double log_likelihood = 0.0;
  bool boundary = false;  // some compared pair was unanimous
};

/// Throws when the comparison graph is disconnected (the error lists the
/// components). Unanimous data yields boundary-flagged estimates.
JndScores scale_jnd(const ComparisonMatrix& m);

/// Samples a full-design matrix from true scores (the scaling test oracle).
ComparisonMatrix simulate_comparisons(const std::vector<double>& q, int trials_per_pair, Rng& rng);

/// The 75%-preference JND convention: 1 / Phi^-1(0.75).
double jnd_sigma();

/// Log-likelihood of scores under the Case V model; shared with test oracles.
double jnd_log_likelihood(const ComparisonMatrix& m, const std::vector<double>& q);

}  // namespace mdf
