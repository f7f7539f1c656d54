#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "fofscope/spectrum.hpp"

namespace fofscope {

/// Converged background statistics from iterative sigma clipping.
struct NoiseEstimate {
  double mean = 0.0;
  double rms = 0.0;           // standard deviation about the mean
  int iterations = 0;         // clipping passes performed
  double kept_fraction = 1.0; // pixels surviving the final pass
  bool converged = false;
};

struct ClipConfig {
  double clip_factor = 3.0;  // reject |x - mean| > clip_factor * rms
  double rel_tol = 0.01;     // stop when RMS changes by less than this
  int max_iter = 20;

  void validate() const {
    if (!(clip_factor > 0.0) || !(rel_tol > 0.0) || max_iter < 1)
      throw invalid_input("clip config: clip_factor > 0, rel_tol > 0, max_iter >= 1");
  }
};

/// Iterative sigma clipping over a flat sample. Each pass computes mean and
/// RMS over surviving samples, then discards samples beyond
/// clip_factor * rms of the mean; stops when the RMS changes by less than
/// rel_tol relative or max_iter is reached. Discards affect the statistics
/// only, never the data. Pass `survivors` to receive the final keep mask.
inline NoiseEstimate estimate_background(std::span<const double> values,
                                         const ClipConfig& cfg = {},
                                         std::vector<std::uint8_t>* survivors = nullptr) {
  cfg.validate();
  const std::size_t n = values.size();
  if (n < 2) throw invalid_input("noise estimate needs at least 2 samples");

  std::vector<std::uint8_t> mask(n, 1);
  std::size_t kept = n;
  NoiseEstimate est;
  double prev_rms = -1.0;

  for (int pass = 1; pass <= cfg.max_iter; ++pass) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      if (mask[i]) sum += values[i];
    const double mean = sum / static_cast<double>(kept);
    double sum_sq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!mask[i]) continue;
      const double d = values[i] - mean;
      sum_sq += d * d;
    }
    const double rms = std::sqrt(sum_sq / static_cast<double>(kept));

    est.mean = mean;
    est.rms = rms;
    est.iterations = pass;
    if (rms == 0.0) {
      est.converged = true;
      break;
    }
    if (prev_rms >= 0.0 && std::abs(rms - prev_rms) / prev_rms < cfg.rel_tol) {
      est.converged = true;
      break;
    }
    prev_rms = rms;

    const double cut = cfg.clip_factor * rms;
    for (std::size_t i = 0; i < n; ++i) {
      if (mask[i] && std::abs(values[i] - mean) > cut) {
        mask[i] = 0;
        --kept;
      }
    }
    if (kept < 2) throw invalid_input("sigma clipping rejected all but " +
                                      std::to_string(kept) + " samples");
  }

  est.kept_fraction = static_cast<double>(kept) / static_cast<double>(n);
  if (survivors) *survivors = std::move(mask);
  return est;
}

inline NoiseEstimate estimate_background(const DynamicSpectrum& s,
                                         const ClipConfig& cfg = {},
                                         std::vector<std::uint8_t>* survivors = nullptr) {
  return estimate_background(s.data(), cfg, survivors);
}

/// Mean-subtracted signal in units of the background RMS.
inline double pixel_snr(double value, const NoiseEstimate& noise) {
  if (!(noise.rms > 0.0))
    throw invalid_input("pixel_snr undefined for zero-RMS background");
  return (value - noise.mean) / noise.rms;
}

}  // namespace fofscope
