// Copyright (c) 2026 the mdf authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace mdf {

/// Precondition / input-validation failure. Maps to CLI exit code 2.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Failure while running (training divergence, corrupt file, I/O). Exit code 3.
class RuntimeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

template <typename... Args>
[[noreturn]] inline void fail_validation(const std::string& msg) {
  throw ValidationError(msg);
}

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw ValidationError(msg);
}

/// PCG32 generator. Self-contained so that seeded runs are bit-reproducible
/// across platforms and standard library versions.
class Rng {
 public:
  explicit Rng(uint64_t seed = 0x853c49e6748fea9bULL, uint64_t stream = 0xda3e39cb94b95bdbULL) {
    state_ = 0;
    inc_ = (stream << 1u) | 1u;
    next_u32();
    state_ += seed;
    next_u32();
  }

  uint32_t next_u32() {
    uint64_t old = state_;
    state_ = old * 6364136223846793005ULL + inc_;
    uint32_t xorshifted = static_cast<uint32_t>(((old >> 18u) ^ old) >> 27u);
    uint32_t rot = static_cast<uint32_t>(old >> 59u);
    return (xorshifted >> rot) | (xorshifted << ((32u - rot) & 31u));
  }

  uint64_t next_u64() {
    return (static_cast<uint64_t>(next_u32()) << 32) | next_u32();
  }

  /// Uniform in [0, 1).
  double uniform() { return next_u32() * (1.0 / 4294967296.0); }

  /// Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [lo, hi] inclusive.
  int uniform_int(int lo, int hi) {
    if (hi <= lo) return lo;
    uint32_t span = static_cast<uint32_t>(hi - lo) + 1u;
    // Rejection sampling keeps the distribution exact.
    uint32_t limit = UINT32_MAX - (UINT32_MAX % span);
    uint32_t v;
    do {
      v = next_u32();
    } while (v >= limit);
    return lo + static_cast<int>(v % span);
  }

  /// Standard normal via Box-Muller; spare value cached.
  double gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1, u2;
    do {
      u1 = uniform();
    } while (u1 <= 1e-300);
    u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  /// Derive an independent child generator; used to partition seeds across
  /// scales / workers so results do not depend on evaluation order.
  Rng child(uint64_t stream_id) const {
    return Rng(state_ ^ 0x9e3779b97f4a7c15ULL, stream_id * 0xbf58476d1ce4e5b9ULL + 0x94d049bb133111ebULL);
  }

 private:
  uint64_t state_ = 0;
  uint64_t inc_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// FNV-1a 64-bit hash, used for content hashes recorded in manifests.
inline uint64_t fnv1a64(const void* data, size_t n, uint64_t h = 0xcbf29ce484222325ULL) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline uint64_t fnv1a64(const std::string& s) { return fnv1a64(s.data(), s.size()); }

std::string to_hex(uint64_t v);

/// CRC-32 (zlib polynomial); used for checkpoint blob integrity.
uint32_t crc32_bytes(const void* data, size_t n);

/// Standard normal CDF.
inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

/// Inverse standard normal CDF, by bisection on normal_cdf.
double normal_quantile(double p);

std::string iso8601_now();

}  // namespace mdf
