// Copyright (c) 2026 the mdf authors
// SPDX-License-Identifier: Apache-2.0

#include "mdf/jnd.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace mdf {

double jnd_sigma() {
  static const double s = 1.0 / normal_quantile(0.75);
  return s;
}

namespace {

double log_normal_cdf(double d) {
  if (d > -8.0) return std::log(normal_cdf(d));
  // Asymptotic tail: Phi(d) ~ phi(d)/(-d) * (1 - 1/d^2 + 3/d^4).
  double d2 = d * d;
  return -0.5 * d2 - 0.5 * std::log(2.0 * M_PI) - std::log(-d) +
         std::log1p(-1.0 / d2 + 3.0 / (d2 * d2));
}

/// Inverse Mills ratio phi(d)/Phi(d), stable in the deep left tail.
double mills(double d) {
  double log_phi = -0.5 * d * d - 0.5 * std::log(2.0 * M_PI);
  return std::exp(log_phi - log_normal_cdf(d));
}

void list_components(const ComparisonMatrix& m, std::vector<int>& comp) {
  int n = m.size();
  comp.assign(n, -1);
  int c = 0;
  for (int s = 0; s < n; ++s) {
    if (comp[s] >= 0) continue;
    std::vector<int> stack{s};
    comp[s] = c;
    while (!stack.empty()) {
      int u = stack.back();
      stack.pop_back();
      for (int v = 0; v < n; ++v) {
        if (comp[v] >= 0 || u == v) continue;
        if (m.counts[u][v] + m.counts[v][u] > 0) {
          comp[v] = c;
          stack.push_back(v);
        }
      }
    }
    ++c;
  }
}

}  // namespace

void ComparisonMatrix::validate() const {
  int n = size();
  require(n >= 1, "ComparisonMatrix: empty");
  require(names.empty() || static_cast<int>(names.size()) == n,
          "ComparisonMatrix: names/counts size mismatch");
  for (int i = 0; i < n; ++i) {
    require(static_cast<int>(counts[i].size()) == n, "ComparisonMatrix: counts not square");
    require(counts[i][i] == 0, "ComparisonMatrix: diagonal must be zero");
    for (int j = 0; j < n; ++j)
      require(counts[i][j] >= 0, "ComparisonMatrix: counts must be non-negative");
  }
}

ComparisonMatrix ComparisonMatrix::from_csv_text(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::vector<std::array<int, 3>> rows;
  int n = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    int i, j, c;
    if (!(ls >> i >> j >> c)) continue;  // header or comment line
    require(i >= 0 && j >= 0, "comparison CSV: negative index");
    rows.push_back({i, j, c});
    n = std::max(n, std::max(i, j) + 1);
  }
  require(!rows.empty(), "comparison CSV: no data rows");
  ComparisonMatrix m;
  m.counts.assign(n, std::vector<int>(n, 0));
  for (const auto& r : rows) m.counts[r[0]][r[1]] += r[2];
  for (int i = 0; i < n; ++i) m.names.push_back("cond" + std::to_string(i));
  m.validate();
  return m;
}

ComparisonMatrix ComparisonMatrix::from_json_text(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  ComparisonMatrix m;
  m.counts = j.at("counts").get<std::vector<std::vector<int>>>();
  if (j.contains("names"))
    m.names = j.at("names").get<std::vector<std::string>>();
  else
    for (size_t i = 0; i < m.counts.size(); ++i) m.names.push_back("cond" + std::to_string(i));
  m.validate();
  return m;
}

ComparisonMatrix ComparisonMatrix::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw RuntimeError("cannot open comparison matrix: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  std::string text = ss.str();
  size_t first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') return from_json_text(text);
  return from_csv_text(text);
}

double jnd_log_likelihood(const ComparisonMatrix& m, const std::vector<double>& q) {
  double s = jnd_sigma();
  double ll = 0.0;
  int n = m.size();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (i == j || m.counts[i][j] == 0) continue;
      ll += m.counts[i][j] * log_normal_cdf((q[i] - q[j]) / s);
    }
  return ll;
}

JndScores scale_jnd(const ComparisonMatrix& m) {
  m.validate();
  int n = m.size();

  std::vector<int> comp;
  list_components(m, comp);
  int ncomp = *std::max_element(comp.begin(), comp.end()) + 1;
  if (n > 1 && ncomp > 1) {
    std::string msg = "scale_jnd: comparison graph is disconnected; components:";
    for (int c = 0; c < ncomp; ++c) {
      msg += " {";
      bool first = true;
      for (int i = 0; i < n; ++i)
        if (comp[i] == c) {
          msg += (first ? "" : ",") + (m.names.empty() ? std::to_string(i) : m.names[i]);
          first = false;
        }
      msg += "}";
    }
    throw ValidationError(msg);
  }

  JndScores out;
  out.names = m.names;
  out.sigma = jnd_sigma();
  out.q.assign(n, 0.0);
  out.ci95.assign(n, 0.0);
  if (n == 1) return out;

  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j && m.counts[i][j] > 0 && m.counts[j][i] == 0) out.boundary = true;

  const double sigma = out.sigma;
  const double cap = 30.0;  // keeps unanimous data finite
  std::vector<double> q(n, 0.0);

  auto gradient = [&](const std::vector<double>& qq, std::vector<double>& g) {
    g.assign(n, 0.0);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        if (i == j || m.counts[i][j] == 0) continue;
        double d = (qq[i] - qq[j]) / sigma;
        double gm = m.counts[i][j] * mills(d) / sigma;
        g[i] += gm;
        g[j] -= gm;
      }
  };

  // Damped Newton on the free parameters (condition 0 pinned at 0).
  auto hessian_neg = [&](const std::vector<double>& qq, std::vector<std::vector<double>>& h) {
    h.assign(n, std::vector<double>(n, 0.0));
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        if (i == j || m.counts[i][j] == 0) continue;
        double d = (qq[i] - qq[j]) / sigma;
        double gm = mills(d);
        double curv = m.counts[i][j] * gm * (d + gm) / (sigma * sigma);  // -d2 lnPhi
        h[i][i] += curv;
        h[j][j] += curv;
        h[i][j] -= curv;
        h[j][i] -= curv;
      }
  };

  auto solve = [](std::vector<std::vector<double>> a, std::vector<double> b) {
    size_t k = a.size();
    for (size_t i = 0; i < k; ++i) a[i][i] += 1e-10;
    for (size_t col = 0; col < k; ++col) {
      size_t piv = col;
      for (size_t r = col + 1; r < k; ++r)
        if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
      std::swap(a[col], a[piv]);
      std::swap(b[col], b[piv]);
      for (size_t r = col + 1; r < k; ++r) {
        double f = a[r][col] / a[col][col];
        if (f == 0.0) continue;
        for (size_t j = col; j < k; ++j) a[r][j] -= f * a[col][j];
        b[r] -= f * b[col];
      }
    }
    std::vector<double> x(k, 0.0);
    for (size_t i = k; i-- > 0;) {
      double s = b[i];
      for (size_t j = i + 1; j < k; ++j) s -= a[i][j] * x[j];
      x[i] = s / a[i][i];
    }
    return x;
  };

  double ll = jnd_log_likelihood(m, q);
  std::vector<double> g;
  std::vector<std::vector<double>> h;
  for (int iter = 0; iter < 300; ++iter) {
    gradient(q, g);
    double gmax = 0.0;
    for (int i = 1; i < n; ++i) gmax = std::max(gmax, std::abs(g[i]));
    if (gmax < 1e-10) break;
    hessian_neg(q, h);
    std::vector<std::vector<double>> hf(n - 1, std::vector<double>(n - 1));
    std::vector<double> gf(n - 1);
    for (int i = 1; i < n; ++i) {
      gf[i - 1] = g[i];
      for (int j = 1; j < n; ++j) hf[i - 1][j - 1] = h[i][j];
    }
    std::vector<double> step = solve(hf, gf);
    double t = 1.0;
    for (int back = 0; back < 40; ++back) {
      std::vector<double> qn = q;
      for (int i = 1; i < n; ++i)
        qn[i] = std::clamp(q[i] + t * step[i - 1], -cap * sigma, cap * sigma);
      double lln = jnd_log_likelihood(m, qn);
      if (lln >= ll) {
        q = std::move(qn);
        ll = lln;
        break;
      }
      t *= 0.5;
    }
  }

  // Covariance of the free parameters from the observed information.
  hessian_neg(q, h);
  int f = n - 1;
  std::vector<std::vector<double>> info(f, std::vector<double>(f));
  for (int i = 1; i < n; ++i)
    for (int j = 1; j < n; ++j) info[i - 1][j - 1] = h[i][j];
  std::vector<std::vector<double>> cov(f, std::vector<double>(f, 0.0));
  for (int col = 0; col < f; ++col) {
    std::vector<double> e(f, 0.0);
    e[col] = 1.0;
    std::vector<double> x = solve(info, e);
    for (int r = 0; r < f; ++r) cov[r][col] = x[r];
  }

  int anchor = static_cast<int>(std::min_element(q.begin(), q.end()) - q.begin());
  auto cov_entry = [&](int i, int j) {
    if (i == 0 || j == 0) return 0.0;
    return cov[i - 1][j - 1];
  };
  out.q.resize(n);
  out.ci95.resize(n);
  for (int i = 0; i < n; ++i) {
    out.q[i] = q[i] - q[anchor];
    double var = cov_entry(i, i) + cov_entry(anchor, anchor) - 2.0 * cov_entry(i, anchor);
    out.ci95[i] = i == anchor ? 0.0 : 1.96 * std::sqrt(std::max(0.0, var));
  }
  out.log_likelihood = ll;
  return out;
}

ComparisonMatrix simulate_comparisons(const std::vector<double>& q, int trials_per_pair,
                                      Rng& rng) {
  require(trials_per_pair >= 0, "simulate_comparisons: negative trial count");
  int n = static_cast<int>(q.size());
  ComparisonMatrix m;
  m.counts.assign(n, std::vector<int>(n, 0));
  for (int i = 0; i < n; ++i) m.names.push_back("cond" + std::to_string(i));
  double sigma = jnd_sigma();
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      double p = normal_cdf((q[i] - q[j]) / sigma);
      int wins = 0;
      for (int t = 0; t < trials_per_pair; ++t)
        if (rng.uniform() < p) ++wins;
      m.counts[i][j] = wins;
      m.counts[j][i] = trials_per_pair - wins;
    }
  return m;
}

}  // namespace mdf
