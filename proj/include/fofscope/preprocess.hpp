#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

#include "fofscope/detail/fft.hpp"
#include "fofscope/spectrum.hpp"

namespace fofscope {

enum class SmoothingMode { block_average, gaussian_decimate };

/// Data-reduction settings applied before clustering. The element count
/// shrinks by t_factor * f_factor either way; gaussian-decimate low-passes
/// with a separable Gaussian first so decimation does not alias.
struct SmoothingSpec {
  SmoothingMode mode = SmoothingMode::block_average;
  int t_factor = 1;
  int f_factor = 1;
  double sigma_t_bins = 0.0;  // gaussian mode only
  double sigma_f_bins = 0.0;  // gaussian mode only

  void validate() const {
    if (t_factor < 1 || f_factor < 1)
      throw invalid_input("smoothing factors must be >= 1");
    if (mode == SmoothingMode::gaussian_decimate &&
        (!(sigma_t_bins > 0.0) || !(sigma_f_bins > 0.0)))
      throw invalid_input("gaussian-decimate requires positive sigmas");
  }
};

namespace detail {

// Kernel truncated at 4 sigma, normalized to unit sum. A radius of zero
// (sigma small) degenerates to the identity kernel.
inline std::vector<double> gaussian_kernel(double sigma) {
  const long radius = std::lround(4.0 * sigma);
  std::vector<double> k(static_cast<std::size_t>(2 * std::max(radius, 0L) + 1));
  double sum = 0.0;
  for (long i = -radius; i <= radius; ++i) {
    const double v = std::exp(-0.5 * static_cast<double>(i) * static_cast<double>(i) /
                              (sigma * sigma));
    k[static_cast<std::size_t>(i + radius)] = v;
    sum += v;
  }
  for (double& v : k) v /= sum;
  return k;
}

// Mirror the signal about its ends, repeating the edge sample
// (... x1 x0 | x0 x1 ... xn-1 | xn-1 xn-2 ...). Needs radius <= len.
inline double reflect_sample(const double* x, std::size_t len, long i) {
  if (i < 0) i = -1 - i;
  const long n = static_cast<long>(len);
  if (i >= n) i = 2 * n - 1 - i;
  return x[i];
}

// FFT convolution of every line of a grid along one axis with reflect
// padding. `get`/`put` abstract the axis orientation.
class AxisConvolver {
public:
  AxisConvolver(std::size_t line_len, const std::vector<double>& kernel)
      : len_(line_len),
        radius_(static_cast<long>(kernel.size() / 2)),
        fft_(next_pow2(line_len + 4 * static_cast<std::size_t>(radius_) + 1)),
        kernel_fft_(fft_.size()),
        line_(fft_.size()) {
    if (static_cast<std::size_t>(radius_) > len_)
      throw invalid_input("gaussian kernel radius " + std::to_string(radius_) +
                          " exceeds axis length " + std::to_string(len_));
    for (std::size_t i = 0; i < kernel.size(); ++i) kernel_fft_[i] = kernel[i];
    fft_.forward(kernel_fft_.data());
  }

  // out may alias in
  void convolve(const double* in, double* out) {
    const std::size_t padded = len_ + 2 * static_cast<std::size_t>(radius_);
    for (std::size_t i = 0; i < fft_.size(); ++i) line_[i] = 0.0;
    for (std::size_t i = 0; i < padded; ++i)
      line_[i] = reflect_sample(in, len_, static_cast<long>(i) - radius_);
    fft_.forward(line_.data());
    for (std::size_t i = 0; i < fft_.size(); ++i) line_[i] *= kernel_fft_[i];
    fft_.inverse(line_.data());
    // full-convolution index of output sample j is j + 2*radius
    for (std::size_t j = 0; j < len_; ++j)
      out[j] = line_[j + 2 * static_cast<std::size_t>(radius_)].real();
  }

private:
  std::size_t len_;
  long radius_;
  Fft fft_;
  std::vector<std::complex<double>> kernel_fft_;
  std::vector<std::complex<double>> line_;
};

}  // namespace detail

/// Average non-overlapping t_factor x f_factor blocks. Trailing partial
/// blocks are dropped; output axes describe block centers (dt and df scale by
/// the factors, t0/f0 move to the mean of the first block's bin centers).
inline DynamicSpectrum block_average(const DynamicSpectrum& s, int t_factor,
                                     int f_factor) {
  if (t_factor < 1 || f_factor < 1)
    throw invalid_input("block_average factors must be >= 1");
  const std::size_t tf = static_cast<std::size_t>(t_factor);
  const std::size_t ff = static_cast<std::size_t>(f_factor);
  const std::size_t out_t = s.n_time() / tf;
  const std::size_t out_f = s.n_freq() / ff;
  if (out_t == 0 || out_f == 0)
    throw invalid_input("block_average factors exceed grid dimensions");
  std::vector<double> out(out_t * out_f);
  const double inv_k = 1.0 / (static_cast<double>(tf) * static_cast<double>(ff));
  const auto in = s.data();
  for (std::size_t ot = 0; ot < out_t; ++ot) {
    for (std::size_t of = 0; of < out_f; ++of) {
      double acc = 0.0;
      for (std::size_t it = ot * tf; it < (ot + 1) * tf; ++it) {
        const double* row = in.data() + it * s.n_freq() + of * ff;
        for (std::size_t j = 0; j < ff; ++j) acc += row[j];
      }
      out[ot * out_f + of] = acc * inv_k;
    }
  }
  return DynamicSpectrum(out_t, out_f, s.dt_s() * static_cast<double>(tf),
                         s.f0_mhz() + s.df_mhz() * (static_cast<double>(ff) - 1.0) / 2.0,
                         s.df_mhz() * static_cast<double>(ff), std::move(out),
                         s.t0_s() + s.dt_s() * (static_cast<double>(tf) - 1.0) / 2.0);
}

/// Separable 2-D Gaussian smoothing via FFT convolution (kernel unit-sum,
/// truncated at 4 sigma, reflect-padded), then decimation keeping every
/// t_factor-th row and f_factor-th column starting at index 0. The surviving
/// sample of each block is index 0, so f0/t0 are unchanged.
inline DynamicSpectrum gaussian_smooth_decimate(const DynamicSpectrum& s,
                                                const SmoothingSpec& spec) {
  if (spec.mode != SmoothingMode::gaussian_decimate)
    throw invalid_input("gaussian_smooth_decimate requires gaussian-decimate mode");
  spec.validate();

  const std::size_t nt = s.n_time();
  const std::size_t nf = s.n_freq();
  std::vector<double> work(s.data().begin(), s.data().end());

  // time axis: each frequency column is a strided line
  {
    detail::AxisConvolver conv(nt, detail::gaussian_kernel(spec.sigma_t_bins));
    std::vector<double> line(nt);
    for (std::size_t f = 0; f < nf; ++f) {
      for (std::size_t t = 0; t < nt; ++t) line[t] = work[t * nf + f];
      conv.convolve(line.data(), line.data());
      for (std::size_t t = 0; t < nt; ++t) work[t * nf + f] = line[t];
    }
  }
  // frequency axis: rows are contiguous
  {
    detail::AxisConvolver conv(nf, detail::gaussian_kernel(spec.sigma_f_bins));
    for (std::size_t t = 0; t < nt; ++t)
      conv.convolve(work.data() + t * nf, work.data() + t * nf);
  }

  const std::size_t tf = static_cast<std::size_t>(spec.t_factor);
  const std::size_t ff = static_cast<std::size_t>(spec.f_factor);
  const std::size_t out_t = (nt + tf - 1) / tf;
  const std::size_t out_f = (nf + ff - 1) / ff;
  std::vector<double> out(out_t * out_f);
  for (std::size_t ot = 0; ot < out_t; ++ot)
    for (std::size_t of = 0; of < out_f; ++of)
      out[ot * out_f + of] = work[(ot * tf) * nf + of * ff];
  return DynamicSpectrum(out_t, out_f, s.dt_s() * static_cast<double>(tf),
                         s.f0_mhz(), s.df_mhz() * static_cast<double>(ff),
                         std::move(out), s.t0_s());
}

/// Dispatch on the configured smoothing mode.
inline DynamicSpectrum preprocess(const DynamicSpectrum& s, const SmoothingSpec& spec) {
  spec.validate();
  if (spec.mode == SmoothingMode::block_average)
    return block_average(s, spec.t_factor, spec.f_factor);
  return gaussian_smooth_decimate(s, spec);
}

}  // namespace fofscope
