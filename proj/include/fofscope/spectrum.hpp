#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fofscope/errors.hpp"

namespace fofscope {

/// Time-major intensity grid with axis metadata.
///
/// Channel centers ascend: freq_at(i) = f0_mhz + i * df_mhz. Times are bin
/// centers: time_at(b) = t0_s + b * dt_s, where t0_s is an absolute offset so
/// that slices of a longer observation keep global times. t0_s is in-memory
/// only; the on-disk format stores the grid and axes, not the offset.
///
/// Immutable after construction; safe to share across threads.
class DynamicSpectrum {
public:
  DynamicSpectrum(std::size_t n_time, std::size_t n_freq, double dt_s,
                  double f0_mhz, double df_mhz, std::vector<double> data,
                  double t0_s = 0.0)
      : n_time_(n_time),
        n_freq_(n_freq),
        dt_s_(dt_s),
        f0_mhz_(f0_mhz),
        df_mhz_(df_mhz),
        t0_s_(t0_s),
        data_(std::move(data)) {
    if (n_time_ < 1 || n_freq_ < 1)
      throw invalid_input("spectrum dimensions must be at least 1x1");
    if (!(dt_s_ > 0.0) || !(df_mhz_ > 0.0))
      throw invalid_input("dt_s and df_mhz must be positive");
    if (!std::isfinite(dt_s_) || !std::isfinite(f0_mhz_) ||
        !std::isfinite(df_mhz_) || !std::isfinite(t0_s_))
      throw invalid_input("spectrum axis metadata must be finite");
    if (data_.size() != n_time_ * n_freq_)
      throw invalid_input("data length " + std::to_string(data_.size()) +
                          " does not match " + std::to_string(n_time_) + "x" +
                          std::to_string(n_freq_));
    for (double v : data_)
      if (!std::isfinite(v))
        throw invalid_input("spectrum contains a non-finite intensity");
  }

  std::size_t n_time() const noexcept { return n_time_; }
  std::size_t n_freq() const noexcept { return n_freq_; }
  double dt_s() const noexcept { return dt_s_; }
  double f0_mhz() const noexcept { return f0_mhz_; }
  double df_mhz() const noexcept { return df_mhz_; }
  double t0_s() const noexcept { return t0_s_; }

  std::size_t size() const noexcept { return data_.size(); }
  std::span<const double> data() const noexcept { return data_; }

  double at(std::size_t t_bin, std::size_t f_bin) const {
    return data_[t_bin * n_freq_ + f_bin];
  }

  /// Absolute time of a bin center, seconds.
  double time_at(std::size_t t_bin) const {
    return t0_s_ + static_cast<double>(t_bin) * dt_s_;
  }

  /// Center frequency of a channel, MHz.
  double freq_at(std::size_t f_bin) const {
    return f0_mhz_ + static_cast<double>(f_bin) * df_mhz_;
  }

  /// Time span covered by bin centers, [time_at(0), time_at(n_time-1)].
  std::pair<double, double> time_span() const {
    return {time_at(0), time_at(n_time_ - 1)};
  }

private:
  std::size_t n_time_;
  std::size_t n_freq_;
  double dt_s_;
  double f0_mhz_;
  double df_mhz_;
  double t0_s_;
  std::vector<double> data_;
};

/// Copy rows [start_bin, end_bin) into a new spectrum. The slice carries the
/// absolute time offset of its first bin, so downstream candidate times stay
/// global.
inline DynamicSpectrum slice_time(const DynamicSpectrum& s,
                                  std::size_t start_bin, std::size_t end_bin) {
  if (start_bin >= end_bin || end_bin > s.n_time())
    throw invalid_input("slice_time: bad range [" + std::to_string(start_bin) +
                        ", " + std::to_string(end_bin) + ") for n_time " +
                        std::to_string(s.n_time()));
  const std::size_t rows = end_bin - start_bin;
  std::vector<double> out(rows * s.n_freq());
  auto src = s.data();
  std::copy(src.begin() + static_cast<std::ptrdiff_t>(start_bin * s.n_freq()),
            src.begin() + static_cast<std::ptrdiff_t>(end_bin * s.n_freq()),
            out.begin());
  return DynamicSpectrum(rows, s.n_freq(), s.dt_s(), s.f0_mhz(), s.df_mhz(),
                         std::move(out), s.time_at(start_bin));
}

}  // namespace fofscope
