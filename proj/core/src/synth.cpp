// Copyright (c) 2026 the mdf authors
// SPDX-License-Identifier: Apache-2.0

#include "mdf/synth.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "mdf/image_io.hpp"

namespace mdf {

void fft_inplace(std::vector<std::complex<double>>& a, bool inverse) {
  size_t n = a.size();
  require((n & (n - 1)) == 0 && n > 0, "fft: size must be a power of two");
  for (size_t i = 1, j = 0; i < n; ++i) {
    size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (size_t len = 2; len <= n; len <<= 1) {
    double ang = 2.0 * M_PI / static_cast<double>(len) * (inverse ? 1.0 : -1.0);
    std::complex<double> wl(std::cos(ang), std::sin(ang));
    for (size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0);
      for (size_t k = 0; k < len / 2; ++k) {
        std::complex<double> u = a[i + k];
        std::complex<double> v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wl;
      }
    }
  }
  if (inverse)
    for (auto& x : a) x /= static_cast<double>(n);
}

namespace {

int next_pow2(int v) {
  int n = 1;
  while (n < v) n <<= 1;
  return n;
}

void fft2_inplace(std::vector<std::complex<double>>& grid, int n, bool inverse) {
  std::vector<std::complex<double>> line(n);
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) line[x] = grid[static_cast<size_t>(y) * n + x];
    fft_inplace(line, inverse);
    for (int x = 0; x < n; ++x) grid[static_cast<size_t>(y) * n + x] = line[x];
  }
  for (int x = 0; x < n; ++x) {
    for (int y = 0; y < n; ++y) line[y] = grid[static_cast<size_t>(y) * n + x];
    fft_inplace(line, inverse);
    for (int y = 0; y < n; ++y) grid[static_cast<size_t>(y) * n + x] = line[y];
  }
}

}  // namespace

std::vector<double> fft2_power(const Image& gray, int* n_out) {
  require(gray.c == 1, "fft2_power: expects a single-channel image");
  int n = next_pow2(std::max(gray.h, gray.w));
  std::vector<std::complex<double>> grid(static_cast<size_t>(n) * n, {0.0, 0.0});
  double mean = mean_value(gray);
  for (int y = 0; y < gray.h; ++y)
    for (int x = 0; x < gray.w; ++x)
      grid[static_cast<size_t>(y) * n + x] = gray.at(y, x, 0) - mean;
  fft2_inplace(grid, n, false);
  std::vector<double> power(grid.size());
  for (size_t i = 0; i < grid.size(); ++i) power[i] = std::norm(grid[i]);
  if (n_out) *n_out = n;
  return power;
}

std::vector<double> radial_power_bands(const Image& gray, int bins) {
  int n = 0;
  std::vector<double> power = fft2_power(gray, &n);
  std::vector<double> bands(bins, 0.0);
  double fmax = n / 2.0;
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) {
      double fy = y <= n / 2 ? y : y - n;
      double fx = x <= n / 2 ? x : x - n;
      double f = std::sqrt(fx * fx + fy * fy);
      if (f < 1.0 || f > fmax) continue;
      // Octave bands: band i covers [fmax/2^(bins-i), fmax/2^(bins-i-1)).
      double rel = f / fmax;  // (0, 1]
      int band = bins - 1 - static_cast<int>(std::floor(-std::log2(rel)));
      band = std::clamp(band, 0, bins - 1);
      bands[band] += power[static_cast<size_t>(y) * n + x];
    }
  }
  return bands;
}

Image synth_image(uint64_t seed, const SynthOptions& opts) {
  require(opts.channels == 1 || opts.channels == 3, "synth_image: channels must be 1 or 3");
  Rng rng(seed, 0x5eedULL);
  int n = next_pow2(std::max(opts.h, opts.w));
  double beta = rng.uniform(opts.spectral_exponent_min, opts.spectral_exponent_max);

  auto spectral_field = [&](double exponent) {
    std::vector<std::complex<double>> grid(static_cast<size_t>(n) * n, {0.0, 0.0});
    for (int y = 0; y < n; ++y) {
      for (int x = 0; x < n; ++x) {
        double fy = y <= n / 2 ? y : y - n;
        double fx = x <= n / 2 ? x : x - n;
        double f = std::sqrt(fx * fx + fy * fy);
        if (f < 0.5) continue;
        double amp = std::pow(f, -exponent);
        double phase = rng.uniform(0.0, 2.0 * M_PI);
        grid[static_cast<size_t>(y) * n + x] = std::polar(amp, phase);
      }
    }
    fft2_inplace(grid, n, true);
    std::vector<double> field(static_cast<size_t>(opts.h) * opts.w);
    for (int y = 0; y < opts.h; ++y)
      for (int x = 0; x < opts.w; ++x)
        field[static_cast<size_t>(y) * opts.w + x] = grid[static_cast<size_t>(y) * n + x].real();
    // Normalize to zero mean, unit std.
    double m = 0.0, s = 0.0;
    for (double v : field) m += v;
    m /= field.size();
    for (double v : field) s += (v - m) * (v - m);
    s = std::sqrt(s / field.size());
    if (s < 1e-12) s = 1.0;
    for (double& v : field) v = (v - m) / s;
    return field;
  };

  std::vector<double> luma = spectral_field(beta);
  std::vector<double> chroma_a, chroma_b;
  if (opts.channels == 3) {
    chroma_a = spectral_field(beta + 0.3);
    chroma_b = spectral_field(beta + 0.3);
  }

  // Global illumination gradient.
  double gx = rng.uniform(-0.3, 0.3), gy = rng.uniform(-0.3, 0.3);

  // Soft-edged shapes give the image real occlusion boundaries.
  struct Shape {
    double cx, cy, rx, ry, angle, amount;
  };
  std::vector<Shape> shapes;
  for (int i = 0; i < opts.shapes; ++i) {
    shapes.push_back({rng.uniform(0.1, 0.9), rng.uniform(0.1, 0.9), rng.uniform(0.08, 0.35),
                      rng.uniform(0.08, 0.35), rng.uniform(0.0, M_PI), rng.uniform(-0.8, 0.8)});
  }

  Image img(opts.h, opts.w, opts.channels);
  double base_r = rng.uniform(0.35, 0.6), base_g = rng.uniform(0.35, 0.6), base_b = rng.uniform(0.35, 0.6);
  for (int y = 0; y < opts.h; ++y) {
    for (int x = 0; x < opts.w; ++x) {
      double u = static_cast<double>(x) / opts.w, v = static_cast<double>(y) / opts.h;
      double l = luma[static_cast<size_t>(y) * opts.w + x] + gx * (u - 0.5) * 2.0 + gy * (v - 0.5) * 2.0;
      double shape_term = 0.0;
      for (const Shape& sh : shapes) {
        double dx = u - sh.cx, dy = v - sh.cy;
        double rx = dx * std::cos(sh.angle) + dy * std::sin(sh.angle);
        double ry = -dx * std::sin(sh.angle) + dy * std::cos(sh.angle);
        double d = (rx * rx) / (sh.rx * sh.rx) + (ry * ry) / (sh.ry * sh.ry);
        // Smooth falloff around the unit ellipse.
        double alpha = 1.0 / (1.0 + std::exp((d - 1.0) * 8.0));
        shape_term += sh.amount * alpha;
      }
      l += shape_term * 1.8;
      if (opts.channels == 1) {
        img.at(y, x, 0) = l;
      } else {
        double ca = 0.25 * chroma_a[static_cast<size_t>(y) * opts.w + x];
        double cb = 0.25 * chroma_b[static_cast<size_t>(y) * opts.w + x];
        img.at(y, x, 0) = base_r + l * 0.5 + ca * 0.3;
        img.at(y, x, 1) = base_g + l * 0.5 - ca * 0.15 + cb * 0.15;
        img.at(y, x, 2) = base_b + l * 0.5 - cb * 0.3;
      }
    }
  }
  if (opts.channels == 1)
    for (double& vv : img.data) vv = 0.5 + vv * 0.5;

  // Rescale to the requested contrast and keep samples inside (0,1).
  double m = mean_value(img);
  double s = std::sqrt(variance(img));
  if (s < 1e-9) s = 1.0;
  double gain = opts.target_std / s;
  for (double& vv : img.data) vv = 0.48 + (vv - m) * gain;
  for (double& vv : img.data) vv = std::clamp(vv, 0.01, 0.99);
  return img;
}

std::vector<std::string> synth_dataset(const std::string& dir, int count, uint64_t seed,
                                       const SynthOptions& opts) {
  std::filesystem::create_directories(dir);
  std::vector<std::string> paths;
  for (int i = 0; i < count; ++i) {
    Image img = synth_image(seed + static_cast<uint64_t>(i) * 1000003ULL, opts);
    char name[32];
    std::snprintf(name, sizeof(name), "synth_%04d.png", i);
    std::string path = (std::filesystem::path(dir) / name).string();
    save_png(img, path);
    paths.push_back(path);
  }
  return paths;
}

}  // namespace mdf
