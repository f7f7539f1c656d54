#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "fofscope/spectrum.hpp"

// DSF file layout (little-endian):
//   magic "DSPEC1" (6 bytes)
//   n_time u32 | n_freq u32
//   dt_s f64 | f0_mhz f64 | df_mhz f64
//   payload: n_time * n_freq float32, time-major
//   crc32 (IEEE) of the payload bytes, u32

namespace fofscope {

namespace detail {

inline constexpr char dsf_magic[6] = {'D', 'S', 'P', 'E', 'C', '1'};

inline std::uint32_t crc32_ieee(const unsigned char* p, std::size_t n) {
  static const std::array<std::uint32_t, 256> table = [] {
    std::array<std::uint32_t, 256> t{};
    for (std::uint32_t i = 0; i < 256; ++i) {
      std::uint32_t c = i;
      for (int k = 0; k < 8; ++k)
        c = (c & 1u) ? 0xEDB88320u ^ (c >> 1) : (c >> 1);
      t[i] = c;
    }
    return t;
  }();
  std::uint32_t crc = 0xFFFFFFFFu;
  for (std::size_t i = 0; i < n; ++i)
    crc = table[(crc ^ p[i]) & 0xFFu] ^ (crc >> 8);
  return crc ^ 0xFFFFFFFFu;
}

inline void put_u32_le(std::string& buf, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

inline void put_u64_le(std::string& buf, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

inline void put_f32_le(std::string& buf, float v) {
  put_u32_le(buf, std::bit_cast<std::uint32_t>(v));
}

inline void put_f64_le(std::string& buf, double v) {
  put_u64_le(buf, std::bit_cast<std::uint64_t>(v));
}

inline std::uint32_t get_u32_le(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

inline std::uint64_t get_u64_le(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

inline float get_f32_le(const unsigned char* p) {
  return std::bit_cast<float>(get_u32_le(p));
}

inline double get_f64_le(const unsigned char* p) {
  return std::bit_cast<double>(get_u64_le(p));
}

}  // namespace detail

/// Serialize to the DSF byte layout. Intensities are stored as float32; the
/// in-memory doubles are rounded on write.
inline std::string encode_dsf(const DynamicSpectrum& s) {
  std::string buf;
  buf.reserve(46 + 4 * s.size());
  buf.append(detail::dsf_magic, sizeof(detail::dsf_magic));
  detail::put_u32_le(buf, static_cast<std::uint32_t>(s.n_time()));
  detail::put_u32_le(buf, static_cast<std::uint32_t>(s.n_freq()));
  detail::put_f64_le(buf, s.dt_s());
  detail::put_f64_le(buf, s.f0_mhz());
  detail::put_f64_le(buf, s.df_mhz());
  const std::size_t payload_off = buf.size();
  for (double v : s.data()) detail::put_f32_le(buf, static_cast<float>(v));
  const auto* payload = reinterpret_cast<const unsigned char*>(buf.data()) + payload_off;
  detail::put_u32_le(buf, detail::crc32_ieee(payload, 4 * s.size()));
  return buf;
}

inline DynamicSpectrum decode_dsf(const std::string& buf) {
  using detail::get_f32_le;
  using detail::get_f64_le;
  using detail::get_u32_le;
  constexpr std::size_t header_size = 6 + 8 + 24;
  if (buf.size() < header_size)
    throw format_error(format_error::reason::length, "DSF: file shorter than header");
  if (std::string_view(buf.data(), 6) != std::string_view(detail::dsf_magic, 6))
    throw format_error(format_error::reason::magic, "DSF: bad magic bytes");
  const auto* p = reinterpret_cast<const unsigned char*>(buf.data());
  const std::uint32_t n_time = get_u32_le(p + 6);
  const std::uint32_t n_freq = get_u32_le(p + 10);
  const double dt_s = get_f64_le(p + 14);
  const double f0_mhz = get_f64_le(p + 22);
  const double df_mhz = get_f64_le(p + 30);
  if (n_time < 1 || n_freq < 1 || !(dt_s > 0.0) || !(df_mhz > 0.0) ||
      !std::isfinite(dt_s) || !std::isfinite(f0_mhz) || !std::isfinite(df_mhz))
    throw format_error(format_error::reason::header, "DSF: invalid header fields");
  const std::size_t n = static_cast<std::size_t>(n_time) * n_freq;
  if (buf.size() != header_size + 4 * n + 4)
    throw format_error(format_error::reason::length,
                       "DSF: expected " + std::to_string(header_size + 4 * n + 4) +
                           " bytes, got " + std::to_string(buf.size()));
  const unsigned char* payload = p + header_size;
  const std::uint32_t stored_crc = get_u32_le(payload + 4 * n);
  if (detail::crc32_ieee(payload, 4 * n) != stored_crc)
    throw format_error(format_error::reason::crc, "DSF: payload CRC mismatch");
  std::vector<double> data(n);
  for (std::size_t i = 0; i < n; ++i) {
    const float v = get_f32_le(payload + 4 * i);
    if (!std::isfinite(v))
      throw format_error(format_error::reason::data,
                         "DSF: non-finite intensity at element " + std::to_string(i));
    data[i] = v;
  }
  return DynamicSpectrum(n_time, n_freq, dt_s, f0_mhz, df_mhz, std::move(data));
}

inline void write_dsf(const DynamicSpectrum& s, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    throw format_error(format_error::reason::io, "cannot open for writing: " + path.string());
  const std::string buf = encode_dsf(s);
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw format_error(format_error::reason::io, "write failed: " + path.string());
}

inline DynamicSpectrum read_dsf(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw format_error(format_error::reason::io, "cannot open: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return decode_dsf(ss.str());
}

/// Test-oriented CSV format: header "t,f,intensity", one pixel per row.
/// Pixels absent from the file default to 0; grid dimensions are inferred
/// from the largest indices present. Axis metadata is supplied by the caller.
inline DynamicSpectrum read_csv(const std::filesystem::path& path, double dt_s,
                                double f0_mhz, double df_mhz, double t0_s = 0.0) {
  std::ifstream in(path);
  if (!in)
    throw format_error(format_error::reason::io, "cannot open: " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != "t,f,intensity")
    throw format_error(format_error::reason::header, "CSV: expected header 't,f,intensity'");
  struct Px { std::size_t t, f; double v; };
  std::vector<Px> pixels;
  std::size_t max_t = 0, max_f = 0;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    unsigned long long t = 0, f = 0;
    double v = 0.0;
    if (std::sscanf(line.c_str(), "%llu,%llu,%lf", &t, &f, &v) != 3)
      throw format_error(format_error::reason::data,
                         "CSV: bad row at line " + std::to_string(lineno));
    if (!std::isfinite(v))
      throw format_error(format_error::reason::data,
                         "CSV: non-finite intensity at line " + std::to_string(lineno));
    pixels.push_back({static_cast<std::size_t>(t), static_cast<std::size_t>(f), v});
    max_t = std::max(max_t, static_cast<std::size_t>(t));
    max_f = std::max(max_f, static_cast<std::size_t>(f));
  }
  if (pixels.empty())
    throw format_error(format_error::reason::data, "CSV: no pixel rows");
  std::vector<double> data((max_t + 1) * (max_f + 1), 0.0);
  for (const auto& px : pixels) data[px.t * (max_f + 1) + px.f] = px.v;
  return DynamicSpectrum(max_t + 1, max_f + 1, dt_s, f0_mhz, df_mhz,
                         std::move(data), t0_s);
}

inline void write_csv(const DynamicSpectrum& s, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out)
    throw format_error(format_error::reason::io, "cannot open for writing: " + path.string());
  out << "t,f,intensity\n";
  char buf[96];
  for (std::size_t t = 0; t < s.n_time(); ++t)
    for (std::size_t f = 0; f < s.n_freq(); ++f) {
      std::snprintf(buf, sizeof(buf), "%zu,%zu,%.17g\n", t, f, s.at(t, f));
      out << buf;
    }
  if (!out) throw format_error(format_error::reason::io, "write failed: " + path.string());
}

}  // namespace fofscope
