#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <vector>

#include "fofscope/noise.hpp"
#include "fofscope/spectrum.hpp"

namespace fofscope {

/// Proportionality constant of the cold-plasma dispersion delay,
/// seconds * MHz^2 / (pc cm^-3). The default is the conventional
/// radio-astronomy value.
struct DispersionConstant {
  double k_dm = 4.148808e3;
};

/// Arrival delay relative to infinite frequency: k_dm * dm / f^2.
inline double dispersion_delay(double dm, double f_mhz,
                               DispersionConstant k = {}) {
  if (!(f_mhz > 0.0)) throw invalid_input("dispersion_delay: frequency must be positive");
  if (dm < 0.0) throw invalid_input("dispersion_delay: dm must be non-negative");
  return k.k_dm * dm / (f_mhz * f_mhz);
}

/// Incoherent dedispersion: shift channel i earlier by the rounded
/// differential delay to the highest channel, then sum across frequency.
/// Bins shifted past the start are dropped, so the series has
/// n_time - max_shift samples.
inline std::vector<double> dedisperse(const DynamicSpectrum& s, double dm,
                                      DispersionConstant k = {}) {
  if (dm < 0.0) throw invalid_input("dedisperse: dm must be non-negative");
  const double f_top = s.freq_at(s.n_freq() - 1);
  const double top_delay = dispersion_delay(dm, f_top, k);
  std::vector<std::size_t> shift(s.n_freq());
  std::size_t max_shift = 0;
  for (std::size_t i = 0; i < s.n_freq(); ++i) {
    const double dt = dispersion_delay(dm, s.freq_at(i), k) - top_delay;
    shift[i] = static_cast<std::size_t>(std::llround(dt / s.dt_s()));
    max_shift = std::max(max_shift, shift[i]);
  }
  if (max_shift >= s.n_time())
    throw invalid_input("dedisperse: dispersion sweep of " +
                        std::to_string(max_shift) + " bins exceeds " +
                        std::to_string(s.n_time()) + " time bins");
  const std::size_t out_len = s.n_time() - max_shift;
  std::vector<double> series(out_len, 0.0);
  const auto data = s.data();
  for (std::size_t i = 0; i < s.n_freq(); ++i) {
    const double* col = data.data() + i;
    const std::size_t off = shift[i];
    for (std::size_t t = 0; t < out_len; ++t)
      series[t] += col[(t + off) * s.n_freq()];
  }
  return series;
}

struct BoxcarPeak {
  double snr = 0.0;
  std::size_t index = 0;  // start bin of the best boxcar window
};

/// Matched filtering with a unit-energy boxcar (width values of 1/sqrt(w)).
/// The peak is scored against sigma-clipped statistics of the input series:
/// snr = (peak - sqrt(w) * mean) / rms. A zero-RMS series yields infinity if
/// the filtered output still varies and an error if it is flat.
inline BoxcarPeak boxcar_snr(std::span<const double> series,
                             std::size_t width_bins, const ClipConfig& cfg = {}) {
  if (width_bins < 1 || width_bins > series.size())
    throw invalid_input("boxcar_snr: width must be in [1, series length]");

  const double inv_sqrt_w = 1.0 / std::sqrt(static_cast<double>(width_bins));
  double window = 0.0;
  for (std::size_t i = 0; i < width_bins; ++i) window += series[i];
  double best = window * inv_sqrt_w;
  double worst = best;
  std::size_t best_at = 0;
  for (std::size_t i = width_bins; i < series.size(); ++i) {
    window += series[i] - series[i - width_bins];
    const double v = window * inv_sqrt_w;
    if (v > best) {
      best = v;
      best_at = i - width_bins + 1;
    }
    if (v < worst) worst = v;
  }

  const NoiseEstimate noise = estimate_background(series, cfg);
  if (!(noise.rms > 0.0)) {
    if (best == worst)
      throw invalid_input("boxcar_snr: zero-variance series has no defined SNR");
    return {std::numeric_limits<double>::infinity(), best_at};
  }
  const double snr =
      (best - std::sqrt(static_cast<double>(width_bins)) * noise.mean) / noise.rms;
  return {snr, best_at};
}

/// Synthetic test pulse: Gaussian in time, flat across frequency, dispersed.
struct PulseSpec {
  double dm = 0.0;            // pc cm^-3
  double t0_s = 0.0;          // arrival time at infinite frequency
  double width_s = 1e-3;      // FWHM of the time profile
  double amplitude_snr = 1.0; // peak amplitude in units of noise_rms
  std::uint64_t seed = 0;     // used by callers that pair a pulse with noise

  void validate() const {
    if (dm < 0.0 || !(width_s > 0.0) || !(amplitude_snr >= 0.0))
      throw invalid_input("pulse spec: dm >= 0, width > 0, amplitude >= 0");
  }
};

/// Add a dispersed pulse. Per channel, a Gaussian profile centered on
/// t0_s + dispersion_delay(dm, f) with peak amplitude_snr * noise_rms.
/// Every track center must fall inside the spectrum's time span.
inline DynamicSpectrum inject_pulse(const DynamicSpectrum& s, const PulseSpec& pulse,
                                    double noise_rms, DispersionConstant k = {}) {
  pulse.validate();
  const auto [t_lo, t_hi] = s.time_span();
  const double sigma = pulse.width_s / (2.0 * std::sqrt(2.0 * std::log(2.0)));
  const double amp = pulse.amplitude_snr * noise_rms;
  std::vector<double> data(s.data().begin(), s.data().end());
  for (std::size_t f = 0; f < s.n_freq(); ++f) {
    const double center = pulse.t0_s + dispersion_delay(pulse.dm, s.freq_at(f), k);
    if (center < t_lo || center > t_hi)
      throw invalid_input("inject_pulse: track center at channel " +
                          std::to_string(f) + " exits the time span");
    for (std::size_t t = 0; t < s.n_time(); ++t) {
      const double d = s.time_at(t) - center;
      data[t * s.n_freq() + f] += amp * std::exp(-0.5 * d * d / (sigma * sigma));
    }
  }
  return DynamicSpectrum(s.n_time(), s.n_freq(), s.dt_s(), s.f0_mhz(), s.df_mhz(),
                         std::move(data), s.t0_s());
}

/// Independent Gaussian samples from a Mersenne Twister (mt19937_64) driving
/// std::normal_distribution. Identical seeds give identical grids within one
/// standard-library implementation.
inline DynamicSpectrum generate_noise_spectrum(std::size_t n_time, std::size_t n_freq,
                                               double dt_s, double f0_mhz, double df_mhz,
                                               double mean, double sigma,
                                               std::uint64_t seed, double t0_s = 0.0) {
  if (sigma < 0.0) throw invalid_input("noise sigma must be non-negative");
  std::vector<double> data(n_time * n_freq);
  if (sigma == 0.0) {
    std::fill(data.begin(), data.end(), mean);
  } else {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> dist(mean, sigma);
    for (double& v : data) v = dist(rng);
  }
  return DynamicSpectrum(n_time, n_freq, dt_s, f0_mhz, df_mhz, std::move(data), t0_s);
}

}  // namespace fofscope
