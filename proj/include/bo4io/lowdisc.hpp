#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "bo4io/common.hpp"

namespace bo4io {

/// Digitally shifted Sobol' sequence in [0,1)^dim.
///
/// Direction numbers for the first 10 dimensions follow the Joe-Kuo tables; higher dimensions
/// fall back to a randomly shifted Halton sequence. The shift is drawn from `seed`, so two seeds
/// give different (but equally well-distributed) point sets and the same seed is reproducible.
class LowDiscrepancySequence {
 public:
  static constexpr int kMaxSobolDim = 10;

  LowDiscrepancySequence(int dim, std::uint64_t seed) : dim_(dim) {
    if (dim < 1) throw InputError("low-discrepancy sequence needs dim >= 1");
    std::mt19937_64 rng(stream_seed(seed, tag_of("lowdisc-shift"), static_cast<std::uint64_t>(dim)));
    shifts_.resize(dim);
    for (auto& s : shifts_) s = static_cast<std::uint32_t>(rng() >> 32);
    halton_shift_.resize(dim);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (auto& s : halton_shift_) s = u(rng);
    if (dim <= kMaxSobolDim) init_sobol();
  }

  int dim() const noexcept { return dim_; }

  /// Point with index `i` (0-based).
  Vector point(std::uint64_t i) const {
    Vector x(dim_);
    if (dim_ <= kMaxSobolDim) {
      for (int j = 0; j < dim_; ++j) {
        std::uint32_t bits = 0;
        std::uint64_t k = i;
        for (int b = 0; k != 0 && b < 32; ++b, k >>= 1)
          if (k & 1U) bits ^= directions_[j][b];
        bits ^= shifts_[j];
        x[j] = (static_cast<double>(bits) + 0.5) / 4294967296.0;
      }
    } else {
      for (int j = 0; j < dim_; ++j) {
        double v = radical_inverse(i + 1, prime(j)) + halton_shift_[j];
        x[j] = v - std::floor(v);
      }
    }
    return x;
  }

  /// Unshifted Sobol' coordinate; exposed for net-property tests.
  static double raw_sobol(int dim_index, std::uint64_t i) {
    LowDiscrepancySequence seq(dim_index + 1, 0);
    std::uint32_t bits = 0;
    for (int b = 0; i != 0 && b < 32; ++b, i >>= 1)
      if (i & 1U) bits ^= seq.directions_[dim_index][b];
    return static_cast<double>(bits) / 4294967296.0;
  }

 private:
  struct Primitive {
    int degree;
    unsigned coeffs;
    std::array<unsigned, 5> m;
  };

  void init_sobol() {
    // Joe & Kuo (2008) new-joe-kuo-6.21201, dimensions 2..10.
    static constexpr std::array<Primitive, kMaxSobolDim - 1> table{{
        {1, 0, {1, 0, 0, 0, 0}},
        {2, 1, {1, 3, 0, 0, 0}},
        {3, 1, {1, 3, 1, 0, 0}},
        {3, 2, {1, 1, 1, 0, 0}},
        {4, 1, {1, 1, 3, 3, 0}},
        {4, 4, {1, 3, 5, 13, 0}},
        {5, 2, {1, 1, 5, 5, 17}},
        {5, 4, {1, 1, 5, 5, 5}},
        {5, 7, {1, 1, 7, 11, 19}},
    }};
    directions_.assign(dim_, {});
    for (int b = 0; b < 32; ++b) directions_[0][b] = 1U << (31 - b);
    for (int j = 1; j < dim_; ++j) {
      const auto& p = table[j - 1];
      auto& v = directions_[j];
      const int s = p.degree;
      for (int k = 0; k < s && k < 32; ++k) v[k] = p.m[k] << (31 - k);
      for (int k = s; k < 32; ++k) {
        std::uint32_t w = v[k - s] ^ (v[k - s] >> s);
        for (int r = 1; r < s; ++r)
          if ((p.coeffs >> (s - 1 - r)) & 1U) w ^= v[k - r];
        v[k] = w;
      }
    }
  }

  static double radical_inverse(std::uint64_t i, unsigned base) {
    double inv = 1.0 / base, f = inv, r = 0.0;
    while (i > 0) {
      r += f * static_cast<double>(i % base);
      i /= base;
      f *= inv;
    }
    return r;
  }

  static unsigned prime(int j) {
    unsigned count = 0;
    for (unsigned n = 2;; ++n) {
      bool is_prime = true;
      for (unsigned q = 2; q * q <= n; ++q)
        if (n % q == 0) {
          is_prime = false;
          break;
        }
      if (is_prime && static_cast<int>(count++) == j) return n;
    }
  }

  int dim_;
  std::vector<std::array<std::uint32_t, 32>> directions_;
  std::vector<std::uint32_t> shifts_;
  std::vector<double> halton_shift_;
};

}  // namespace bo4io
