#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "fofscope/fof.hpp"
#include "fofscope/noise.hpp"
#include "fofscope/spectrum.hpp"

namespace fofscope {

enum class Colormap { grayscale, viridis };

using Rgb = std::array<std::uint8_t, 3>;

struct RenderSpec {
  Colormap colormap = Colormap::viridis;
  Rgb highlight{255, 0, 0};
  std::size_t max_px = 2048;     // per-axis output size cap
  double snr_floor = -1.0;       // color-scale clamp, SNR units
  double snr_ceil = 8.0;

  void validate() const {
    if (max_px < 16) throw invalid_input("render: max_px must be >= 16");
    if (!(snr_ceil > snr_floor))
      throw invalid_input("render: snr_ceil must exceed snr_floor");
  }
};

namespace detail {

// 16 anchors sampled evenly from the familiar dark-violet-to-yellow ramp.
inline constexpr std::array<Rgb, 16> viridis_anchors{{
    {68, 1, 84},    {72, 26, 108},  {71, 47, 125},  {65, 68, 135},
    {57, 86, 140},  {49, 104, 142}, {42, 120, 142}, {35, 136, 142},
    {31, 152, 139}, {34, 168, 132}, {53, 183, 121}, {84, 197, 104},
    {122, 209, 81}, {165, 219, 54}, {210, 226, 27}, {253, 231, 37},
}};

inline std::uint8_t quantize(double v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 255.0)));
}

}  // namespace detail

/// Pure color map: clamp SNR to [floor, ceil], normalize, look up.
/// Equal SNR always yields an identical color.
inline Rgb map_snr(double snr, const RenderSpec& spec) {
  const double u = std::clamp((snr - spec.snr_floor) / (spec.snr_ceil - spec.snr_floor),
                              0.0, 1.0);
  if (spec.colormap == Colormap::grayscale) {
    const std::uint8_t g = detail::quantize(u * 255.0);
    return {g, g, g};
  }
  const double pos = u * (detail::viridis_anchors.size() - 1);
  const std::size_t lo = std::min(static_cast<std::size_t>(pos),
                                  detail::viridis_anchors.size() - 2);
  const double frac = pos - static_cast<double>(lo);
  const Rgb& a = detail::viridis_anchors[lo];
  const Rgb& b = detail::viridis_anchors[lo + 1];
  Rgb out;
  for (int c = 0; c < 3; ++c)
    out[static_cast<std::size_t>(c)] = detail::quantize(
        a[static_cast<std::size_t>(c)] +
        frac * (b[static_cast<std::size_t>(c)] - a[static_cast<std::size_t>(c)]));
  return out;
}

/// Inclusive bin rectangle of a rendered region.
struct CutoutExtent {
  std::size_t t_start = 0, t_end = 0;
  std::size_t f_start = 0, f_end = 0;
};

namespace detail {

inline void write_ppm(const std::filesystem::path& path, std::size_t width,
                      std::size_t height, std::span<const Rgb> rows_top_down) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw format_error(format_error::reason::io,
                               "cannot open image for writing: " + path.string());
  out << "P6\n" << width << " " << height << "\n255\n";
  out.write(reinterpret_cast<const char*>(rows_top_down.data()),
            static_cast<std::streamsize>(rows_top_down.size() * 3));
  if (!out) throw format_error(format_error::reason::io,
                               "short write on image: " + path.string());
}

inline void write_axis_sidecar(const std::filesystem::path& path,
                               const DynamicSpectrum& s, const CutoutExtent& e,
                               std::size_t width, std::size_t height,
                               std::size_t t_block, std::size_t f_block,
                               const RenderSpec& spec) {
  std::filesystem::path side = path;
  side += ".txt";
  std::ofstream out(side);
  if (!out) throw format_error(format_error::reason::io,
                               "cannot open sidecar for writing: " + side.string());
  out << "width_px " << width << "\n"
      << "height_px " << height << "\n"
      << "x_axis time_s left_to_right\n"
      << "y_axis freq_mhz bottom_to_top\n"
      << "t_left_s " << s.time_at(e.t_start) << "\n"
      << "t_right_s " << s.time_at(e.t_end) << "\n"
      << "f_bottom_mhz " << s.freq_at(e.f_start) << "\n"
      << "f_top_mhz " << s.freq_at(e.f_end) << "\n"
      << "t_bins_per_px " << t_block << "\n"
      << "f_bins_per_px " << f_block << "\n"
      << "snr_floor " << spec.snr_floor << "\n"
      << "snr_ceil " << spec.snr_ceil << "\n";
}

/// Shared renderer: SNR colors for the region's pixels, highlight overlay,
/// then per-axis block-max downscale when the region exceeds max_px. The
/// color of an output pixel depends only on the spectrum values, noise, and
/// spec, so cutouts agree with the same region of a full-frame render.
inline void render_region(const DynamicSpectrum& s, const NoiseEstimate& noise,
                          std::span<const Pixel> highlight_pixels,
                          const CutoutExtent& e, const RenderSpec& spec,
                          const std::filesystem::path& path) {
  spec.validate();
  if (e.t_end < e.t_start || e.f_end < e.f_start || e.t_end >= s.n_time() ||
      e.f_end >= s.n_freq())
    throw invalid_input("render region outside spectrum");
  if (!(noise.rms > 0.0)) throw invalid_input("render undefined for zero-RMS noise");

  const std::size_t nt = e.t_end - e.t_start + 1;
  const std::size_t nf = e.f_end - e.f_start + 1;
  const std::size_t t_block = nt > spec.max_px ? (nt + spec.max_px - 1) / spec.max_px : 1;
  const std::size_t f_block = nf > spec.max_px ? (nf + spec.max_px - 1) / spec.max_px : 1;
  const std::size_t width = (nt + t_block - 1) / t_block;
  const std::size_t height = (nf + f_block - 1) / f_block;

  // Block-max SNR and block-any membership per output pixel.
  std::vector<double> snr(width * height,
                          -std::numeric_limits<double>::infinity());
  std::vector<std::uint8_t> hot(width * height, 0);
  const double inv_rms = 1.0 / noise.rms;
  for (std::size_t t = 0; t < nt; ++t) {
    const std::size_t x = t / t_block;
    for (std::size_t f = 0; f < nf; ++f) {
      const std::size_t y = f / f_block;
      const double v = (s.at(e.t_start + t, e.f_start + f) - noise.mean) * inv_rms;
      double& cell = snr[y * width + x];
      cell = std::max(cell, v);
    }
  }
  for (const Pixel& p : highlight_pixels) {
    const std::size_t t = static_cast<std::size_t>(p.t_bin);
    const std::size_t f = static_cast<std::size_t>(p.f_bin);
    if (t < e.t_start || t > e.t_end || f < e.f_start || f > e.f_end) continue;
    hot[((f - e.f_start) / f_block) * width + (t - e.t_start) / t_block] = 1;
  }

  // Image rows run top-down; frequency runs bottom-up.
  std::vector<Rgb> image(width * height);
  for (std::size_t y = 0; y < height; ++y) {
    const std::size_t row = height - 1 - y;
    for (std::size_t x = 0; x < width; ++x)
      image[row * width + x] =
          hot[y * width + x] ? spec.highlight : map_snr(snr[y * width + x], spec);
  }
  write_ppm(path, width, height, image);
  write_axis_sidecar(path, s, e, width, height, t_block, f_block, spec);
}

}  // namespace detail

/// Full-frame plot with every cluster's pixels overdrawn in the highlight
/// color (channel 0 at the bottom, time along x).
inline void render_heatmap(const DynamicSpectrum& s, const NoiseEstimate& noise,
                           std::span<const Cluster> clusters, const RenderSpec& spec,
                           const std::filesystem::path& path) {
  std::vector<Pixel> all;
  for (const Cluster& c : clusters)
    all.insert(all.end(), c.pixels.begin(), c.pixels.end());
  detail::render_region(s, noise, all,
                        {0, s.n_time() - 1, 0, s.n_freq() - 1}, spec, path);
}

/// Cutout around one candidate: its bounding box grown by margin_bins per
/// axis, clamped to the grid.
inline void render_candidate(const DynamicSpectrum& s, const NoiseEstimate& noise,
                             std::span<const Pixel> pixels, const CutoutExtent& bbox,
                             std::size_t margin_bins, const RenderSpec& spec,
                             const std::filesystem::path& path) {
  if (bbox.t_end < bbox.t_start || bbox.f_end < bbox.f_start)
    throw invalid_input("render_candidate: zero-area cutout");
  CutoutExtent e;
  e.t_start = bbox.t_start > margin_bins ? bbox.t_start - margin_bins : 0;
  e.f_start = bbox.f_start > margin_bins ? bbox.f_start - margin_bins : 0;
  e.t_end = std::min(bbox.t_end + margin_bins, s.n_time() - 1);
  e.f_end = std::min(bbox.f_end + margin_bins, s.n_freq() - 1);
  detail::render_region(s, noise, pixels, e, spec, path);
}

}  // namespace fofscope
