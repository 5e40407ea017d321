// Copyright (c) 2026 the mdf authors
// SPDX-License-Identifier: Apache-2.0
//
// NIQE: natural-scene-statistics features (GGD/AGGD fits of MSCN coefficients
// and their pairwise products at two scales) compared against a pristine
// multivariate-Gaussian model.

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>

#include "mdf/metrics.hpp"
#include "mdf/resize.hpp"

namespace mdf {

namespace {

constexpr int kMscnWin = 7;
constexpr double kMscnSigma = 7.0 / 6.0;

struct Plane {
  int h = 0, w = 0;
  std::vector<double> v;
  Plane() = default;
  Plane(int h_, int w_) : h(h_), w(w_), v(static_cast<size_t>(h_) * w_, 0.0) {}
  double at(int y, int x) const { return v[static_cast<size_t>(y) * w + x]; }
  double& at(int y, int x) { return v[static_cast<size_t>(y) * w + x]; }
};

Plane to_plane255(const Image& gray) {
  Plane p(gray.h, gray.w);
  for (int y = 0; y < gray.h; ++y)
    for (int x = 0; x < gray.w; ++x) p.at(y, x) = gray.at(y, x, 0) * 255.0;
  return p;
}

/// Separable Gaussian with clamp-to-edge borders.
Plane gauss_blur(const Plane& p) {
  static const std::vector<double> win = [] {
    std::vector<double> w(kMscnWin);
    double sum = 0.0;
    for (int i = 0; i < kMscnWin; ++i) {
      double d = i - (kMscnWin - 1) / 2.0;
      w[i] = std::exp(-d * d / (2.0 * kMscnSigma * kMscnSigma));
      sum += w[i];
    }
    for (auto& x : w) x /= sum;
    return w;
  }();
  int r = (kMscnWin - 1) / 2;
  Plane tmp(p.h, p.w), out(p.h, p.w);
  for (int y = 0; y < p.h; ++y)
    for (int x = 0; x < p.w; ++x) {
      double acc = 0.0;
      for (int k = -r; k <= r; ++k) acc += win[k + r] * p.at(y, std::clamp(x + k, 0, p.w - 1));
      tmp.at(y, x) = acc;
    }
  for (int y = 0; y < p.h; ++y)
    for (int x = 0; x < p.w; ++x) {
      double acc = 0.0;
      for (int k = -r; k <= r; ++k) acc += win[k + r] * tmp.at(std::clamp(y + k, 0, p.h - 1), x);
      out.at(y, x) = acc;
    }
  return out;
}

struct Mscn {
  Plane coeff;
  Plane sigma;
};

Mscn mscn_transform(const Plane& p) {
  Plane mu = gauss_blur(p);
  Plane sq(p.h, p.w);
  for (size_t i = 0; i < p.v.size(); ++i) sq.v[i] = p.v[i] * p.v[i];
  Plane musq = gauss_blur(sq);
  Mscn out;
  out.coeff = Plane(p.h, p.w);
  out.sigma = Plane(p.h, p.w);
  for (size_t i = 0; i < p.v.size(); ++i) {
    double s = std::sqrt(std::max(0.0, musq.v[i] - mu.v[i] * mu.v[i]));
    out.sigma.v[i] = s;
    out.coeff.v[i] = (p.v[i] - mu.v[i]) / (s + 1.0);
  }
  return out;
}

double gamma_fn(double x) { return std::tgamma(x); }

/// GGD shape from the variance / mean-abs ratio, by grid search.
double fit_ggd_shape(double rho) {
  static const std::vector<std::pair<double, double>> table = [] {
    std::vector<std::pair<double, double>> t;
    for (double g = 0.2; g <= 10.0; g += 0.005) {
      double r = gamma_fn(1.0 / g) * gamma_fn(3.0 / g) / (gamma_fn(2.0 / g) * gamma_fn(2.0 / g));
      t.emplace_back(g, r);
    }
    return t;
  }();
  double best = 1.0, best_err = 1e300;
  for (const auto& [g, r] : table) {
    double e = (r - rho) * (r - rho);
    if (e < best_err) {
      best_err = e;
      best = g;
    }
  }
  return best;
}

void ggd_features(const std::vector<double>& x, double* alpha, double* sigma2) {
  double m2 = 0.0, mabs = 0.0;
  for (double v : x) {
    m2 += v * v;
    mabs += std::abs(v);
  }
  m2 /= x.size();
  mabs /= x.size();
  double rho = m2 / std::max(1e-12, mabs * mabs);
  *alpha = fit_ggd_shape(rho);
  *sigma2 = m2;
}

void aggd_features(const std::vector<double>& x, double* alpha, double* eta, double* sl2,
                   double* sr2) {
  double left = 0.0, right = 0.0, mabs = 0.0, m2 = 0.0;
  size_t nl = 0, nr = 0;
  for (double v : x) {
    if (v < 0.0) {
      left += v * v;
      ++nl;
    } else {
      right += v * v;
      ++nr;
    }
    mabs += std::abs(v);
    m2 += v * v;
  }
  double sigma_l = std::sqrt(nl ? left / nl : 0.0);
  double sigma_r = std::sqrt(nr ? right / nr : 0.0);
  mabs /= x.size();
  m2 /= x.size();
  double gamma_hat = sigma_l / std::max(1e-12, sigma_r);
  double r_hat = mabs * mabs / std::max(1e-12, m2);
  double R_hat = r_hat * (gamma_hat * gamma_hat * gamma_hat + 1.0) * (gamma_hat + 1.0) /
                 std::pow(gamma_hat * gamma_hat + 1.0, 2.0);
  static const std::vector<std::pair<double, double>> table = [] {
    std::vector<std::pair<double, double>> t;
    for (double g = 0.2; g <= 10.0; g += 0.005) {
      double r = gamma_fn(2.0 / g) * gamma_fn(2.0 / g) / (gamma_fn(1.0 / g) * gamma_fn(3.0 / g));
      t.emplace_back(g, r);
    }
    return t;
  }();
  double best = 1.0, best_err = 1e300;
  for (const auto& [g, r] : table) {
    double e = (r - R_hat) * (r - R_hat);
    if (e < best_err) {
      best_err = e;
      best = g;
    }
  }
  *alpha = best;
  *eta = (sigma_r - sigma_l) * gamma_fn(2.0 / best) / gamma_fn(1.0 / best);
  *sl2 = sigma_l * sigma_l;
  *sr2 = sigma_r * sigma_r;
}

/// 18 features of one MSCN block: GGD of the coefficients plus AGGD of the
/// four orientation products.
void block_features(const Plane& m, int y0, int x0, int bs, std::vector<double>& out) {
  std::vector<double> coeff;
  coeff.reserve(static_cast<size_t>(bs) * bs);
  for (int y = y0; y < y0 + bs; ++y)
    for (int x = x0; x < x0 + bs; ++x) coeff.push_back(m.at(y, x));
  double a, s2;
  ggd_features(coeff, &a, &s2);
  out.push_back(a);
  out.push_back(s2);

  const int dy[4] = {0, 1, 1, 1};
  const int dx[4] = {1, 0, 1, -1};
  for (int o = 0; o < 4; ++o) {
    std::vector<double> prod;
    prod.reserve(coeff.size());
    for (int y = y0; y < y0 + bs; ++y)
      for (int x = x0; x < x0 + bs; ++x) {
        int yy = y + dy[o], xx = x + dx[o];
        if (yy < y0 || yy >= y0 + bs || xx < x0 || xx >= x0 + bs) continue;
        prod.push_back(m.at(y, x) * m.at(yy, xx));
      }
    double alpha, eta, sl2, sr2;
    aggd_features(prod, &alpha, &eta, &sl2, &sr2);
    out.push_back(alpha);
    out.push_back(eta);
    out.push_back(sl2);
    out.push_back(sr2);
  }
}

struct ImageFeatures {
  std::vector<std::vector<double>> patches;     // 36 per patch
  std::vector<double> sharpness;                // per patch
};

ImageFeatures image_features(const Image& img, int patch) {
  Image gray = to_gray(img);
  require(gray.h >= patch && gray.w >= patch,
          "niqe: image smaller than the " + std::to_string(patch) + "px patch");
  Plane p1 = to_plane255(gray);
  Image half = resize(gray, std::max(1, gray.h / 2), std::max(1, gray.w / 2), Filter::kBicubic);
  Plane p2 = to_plane255(half);

  Mscn m1 = mscn_transform(p1);
  Mscn m2 = mscn_transform(p2);

  int nby = gray.h / patch, nbx = gray.w / patch;
  ImageFeatures out;
  for (int by = 0; by < nby; ++by)
    for (int bx = 0; bx < nbx; ++bx) {
      std::vector<double> f;
      f.reserve(36);
      block_features(m1.coeff, by * patch, bx * patch, patch, f);
      block_features(m2.coeff, by * patch / 2, bx * patch / 2, patch / 2, f);
      out.patches.push_back(std::move(f));
      double s = 0.0;
      for (int y = by * patch; y < (by + 1) * patch; ++y)
        for (int x = bx * patch; x < (bx + 1) * patch; ++x) s += m1.sigma.at(y, x);
      out.sharpness.push_back(s / (static_cast<double>(patch) * patch));
    }
  return out;
}

void mean_cov(const std::vector<std::vector<double>>& rows, std::vector<double>& mean,
              std::vector<std::vector<double>>& cov) {
  size_t n = rows.size(), d = rows[0].size();
  mean.assign(d, 0.0);
  for (const auto& r : rows)
    for (size_t j = 0; j < d; ++j) mean[j] += r[j];
  for (double& m : mean) m /= static_cast<double>(n);
  cov.assign(d, std::vector<double>(d, 0.0));
  for (const auto& r : rows)
    for (size_t i = 0; i < d; ++i)
      for (size_t j = i; j < d; ++j) cov[i][j] += (r[i] - mean[i]) * (r[j] - mean[j]);
  double denom = n > 1 ? static_cast<double>(n - 1) : 1.0;
  for (size_t i = 0; i < d; ++i)
    for (size_t j = i; j < d; ++j) {
      cov[i][j] /= denom;
      cov[j][i] = cov[i][j];
    }
}

/// Solves A x = b by Gaussian elimination with partial pivoting; A is
/// ridge-regularized a little since pooled NSS covariances can be singular.
std::vector<double> solve_spd(std::vector<std::vector<double>> a, std::vector<double> b) {
  size_t n = a.size();
  double tr = 0.0;
  for (size_t i = 0; i < n; ++i) tr += a[i][i];
  double ridge = std::max(1e-12, 1e-8 * tr / static_cast<double>(n));
  for (size_t i = 0; i < n; ++i) a[i][i] += ridge;
  for (size_t col = 0; col < n; ++col) {
    size_t piv = col;
    for (size_t r = col + 1; r < n; ++r)
      if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
    std::swap(a[col], a[piv]);
    std::swap(b[col], b[piv]);
    double d = a[col][col];
    for (size_t r = col + 1; r < n; ++r) {
      double f = a[r][col] / d;
      if (f == 0.0) continue;
      for (size_t j = col; j < n; ++j) a[r][j] -= f * a[col][j];
      b[r] -= f * b[col];
    }
  }
  std::vector<double> x(n, 0.0);
  for (size_t i = n; i-- > 0;) {
    double s = b[i];
    for (size_t j = i + 1; j < n; ++j) s -= a[i][j] * x[j];
    x[i] = s / a[i][i];
  }
  return x;
}

}  // namespace

std::vector<double> niqe_features_for_test(const Image& gray) {
  ImageFeatures f = image_features(gray, 96);
  std::vector<double> mean;
  std::vector<std::vector<double>> cov;
  mean_cov(f.patches, mean, cov);
  return mean;
}

NiqeModel fit_niqe_model(const std::vector<Image>& pristine, int patch, double sharpness_fraction,
                         const std::string& provenance) {
  require(!pristine.empty(), "fit_niqe_model: no images");
  std::vector<std::vector<double>> selected;
  for (const Image& img : pristine) {
    ImageFeatures f = image_features(img, patch);
    double peak = *std::max_element(f.sharpness.begin(), f.sharpness.end());
    for (size_t i = 0; i < f.patches.size(); ++i)
      if (f.sharpness[i] > sharpness_fraction * peak) selected.push_back(std::move(f.patches[i]));
  }
  require(selected.size() >= 40, "fit_niqe_model: too few sharp patches (" +
                                     std::to_string(selected.size()) + "); add images");
  NiqeModel model;
  model.patch = patch;
  model.sharpness_fraction = sharpness_fraction;
  model.provenance = provenance;
  mean_cov(selected, model.mean, model.cov);
  return model;
}

double niqe(const Image& img, const NiqeModel& model) {
  ImageFeatures f = image_features(img, model.patch);
  std::vector<double> mean_t;
  std::vector<std::vector<double>> cov_t;
  mean_cov(f.patches, mean_t, cov_t);

  size_t d = model.mean.size();
  require(mean_t.size() == d, "niqe: feature dimension mismatch");
  std::vector<std::vector<double>> pooled(d, std::vector<double>(d));
  for (size_t i = 0; i < d; ++i)
    for (size_t j = 0; j < d; ++j) pooled[i][j] = 0.5 * (model.cov[i][j] + cov_t[i][j]);
  std::vector<double> diff(d);
  for (size_t i = 0; i < d; ++i) diff[i] = model.mean[i] - mean_t[i];
  std::vector<double> x = solve_spd(pooled, diff);
  double q = 0.0;
  for (size_t i = 0; i < d; ++i) q += diff[i] * x[i];
  return std::sqrt(std::max(0.0, q));
}

void NiqeModel::save(const std::string& path) const {
  nlohmann::json j;
  j["kind"] = "niqe_model";
  j["patch"] = patch;
  j["sharpness_fraction"] = sharpness_fraction;
  j["provenance"] = provenance;
  j["mean"] = mean;
  j["cov"] = cov;
  std::ofstream out(path);
  if (!out) throw RuntimeError("cannot write NIQE model: " + path);
  out << j.dump(1) << "\n";
}

NiqeModel NiqeModel::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw RuntimeError("cannot open NIQE model: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw RuntimeError("corrupt NIQE model " + path + ": " + e.what());
  }
  if (j.value("kind", "") != "niqe_model") throw RuntimeError(path + " is not a NIQE model");
  NiqeModel m;
  m.patch = j.at("patch").get<int>();
  m.sharpness_fraction = j.at("sharpness_fraction").get<double>();
  m.provenance = j.value("provenance", "");
  m.mean = j.at("mean").get<std::vector<double>>();
  m.cov = j.at("cov").get<std::vector<std::vector<double>>>();
  return m;
}

}  // namespace mdf
