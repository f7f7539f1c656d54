#pragma once

#include <complex>
#include <cstddef>
#include <numbers>
#include <vector>

namespace fofscope::detail {

inline std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

/// In-place iterative radix-2 FFT for power-of-two sizes. Twiddles are
/// precomputed per instance so repeated transforms of one size are cheap.
class Fft {
public:
  explicit Fft(std::size_t n) : n_(n) {
    twiddles_.resize(n_ / 2);
    for (std::size_t k = 0; k < n_ / 2; ++k) {
      const double ang = -2.0 * std::numbers::pi * static_cast<double>(k) /
                         static_cast<double>(n_);
      twiddles_[k] = std::polar(1.0, ang);
    }
  }

  std::size_t size() const noexcept { return n_; }

  void forward(std::complex<double>* a) const { transform(a, false); }

  /// Inverse transform including the 1/n scale.
  void inverse(std::complex<double>* a) const {
    transform(a, true);
    const double s = 1.0 / static_cast<double>(n_);
    for (std::size_t i = 0; i < n_; ++i) a[i] *= s;
  }

private:
  void transform(std::complex<double>* a, bool inv) const {
    // bit-reversal permutation
    for (std::size_t i = 1, j = 0; i < n_; ++i) {
      std::size_t bit = n_ >> 1;
      for (; j & bit; bit >>= 1) j ^= bit;
      j ^= bit;
      if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n_; len <<= 1) {
      const std::size_t step = n_ / len;
      for (std::size_t i = 0; i < n_; i += len) {
        for (std::size_t k = 0; k < len / 2; ++k) {
          std::complex<double> w = twiddles_[k * step];
          if (inv) w = std::conj(w);
          const std::complex<double> u = a[i + k];
          const std::complex<double> v = a[i + k + len / 2] * w;
          a[i + k] = u + v;
          a[i + k + len / 2] = u - v;
        }
      }
    }
  }

  std::size_t n_;
  std::vector<std::complex<double>> twiddles_;
};

}  // namespace fofscope::detail
